#include <cmath>

#include <doctest.h>

#include "ksb/field.hpp"
#include "ksb/reduce.hpp"
#include "ksb/rng.hpp"
#include "ksb/spectral.hpp"

using namespace ksb;

namespace {

RealField random_band_limited(const GridSpec& grid, std::uint64_t seed, int kmax) {
    std::uint64_t st = seed;
    SpectralField uh(grid);
    for (int k = 1; k <= kmax; ++k)
        uh.modes[k] = std::complex<double>(uniform01(st) - 0.5, uniform01(st) - 0.5) / static_cast<double>(k);
    return fft_inverse(uh);
}

RealField sine_field(const GridSpec& grid, int mode, double amp = 1.0, double phase = 0.0) {
    RealField f(grid);
    double k = 2.0 * M_PI * mode / grid.length;
    for (int j = 0; j < grid.n; ++j) f.samples[j] = amp * std::sin(k * grid.point(j) + phase);
    return f;
}

double max_diff(const RealField& a, const RealField& b) {
    double m = 0.0;
    for (int j = 0; j < a.grid.n; ++j)
        m = std::max(m, std::abs(a.samples[j] - b.samples[j]));
    return m;
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(GridSpec(10.0, 7), std::invalid_argument);   // odd
    CHECK_THROWS_AS(GridSpec(10.0, 4), std::invalid_argument);   // too small
    CHECK_THROWS_AS(GridSpec(-1.0, 64), std::invalid_argument);  // bad L
    GridSpec g(10.0, 64);
    CHECK(g.dx() == doctest::Approx(10.0 / 64));
    CHECK(g.wavenumber(3) == doctest::Approx(6.0 * M_PI / 10.0));
    CHECK(g.num_modes() == 33);
}

TEST_CASE("transform round trip is exact to 1e-12") {
    GridSpec grid(25.0, 128);
    RealField u = random_band_limited(grid, 42, 40);
    RealField v = fft_inverse(fft_forward(u));
    CHECK(max_diff(u, v) < 1e-12);
}

TEST_CASE("forward transform uses the L^{-1} integral convention") {
    GridSpec grid(10.0, 64);
    // u = 3 + 2 sin(2 pi x / L): mode 0 = 3, mode 1 = -i
    RealField u(grid);
    for (int j = 0; j < grid.n; ++j)
        u.samples[j] = 3.0 + 2.0 * std::sin(2.0 * M_PI * grid.point(j) / grid.length);
    SpectralField uh = fft_forward(u);
    CHECK(uh.modes[0].real() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(uh.modes[0].imag() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(uh.modes[1].real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(uh.modes[1].imag() == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("Parseval: spectral energy equals L^{-1} int u^2") {
    GridSpec grid(17.0, 128);
    RealField u = random_band_limited(grid, 7, 50);
    double direct = integrate_x(u, [](double x) { return x * x; }) / grid.length;
    CHECK(spectral_energy(fft_forward(u)) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("derivatives of a single mode are exact") {
    GridSpec grid(10.0, 128);
    double k = 2.0 * M_PI * 3 / grid.length;
    RealField u = sine_field(grid, 3);
    RealField u1 = derivative(u, 1);
    RealField u2 = derivative(u, 2);
    RealField u4 = derivative(u, 4);
    for (int j = 0; j < grid.n; j += 17) {
        double x = grid.point(j);
        CHECK(u1.samples[j] == doctest::Approx(k * std::cos(k * x)).epsilon(1e-10));
        CHECK(u2.samples[j] == doctest::Approx(-k * k * std::sin(k * x)).epsilon(1e-10));
        CHECK(std::abs(u4.samples[j] - k * k * k * k * std::sin(k * x)) < 1e-9);
    }
    CHECK_THROWS_AS(derivative(u, 9), std::invalid_argument);
}

TEST_CASE("halfwave multiplier and semigroup property") {
    GridSpec grid(10.0, 128);
    RealField u = sine_field(grid, 2);
    double k = 2.0 * M_PI * 2 / grid.length;
    RealField hu = halfwave(u, 1.0);
    for (int j = 0; j < grid.n; j += 13)
        CHECK(hu.samples[j] == doctest::Approx(k * u.samples[j]).epsilon(1e-10));

    RealField a = halfwave(halfwave(u, 0.5), 0.25);
    RealField b = halfwave(u, 0.75);
    CHECK(max_diff(a, b) < 1e-12);

    // |dx|^{-1} |dx| = identity on zero-mean fields
    RealField c = halfwave(halfwave(u, 1.0), -1.0);
    CHECK(max_diff(c, u) < 1e-11);

    RealField with_mean = u;
    for (double& s : with_mean.samples) s += 1.0;
    CHECK_THROWS_AS(halfwave(with_mean, -1.0), std::domain_error);
}

TEST_CASE("shift matches the dense-resampled interpolant and composes") {
    GridSpec grid(12.0, 128);
    RealField u = random_band_limited(grid, 3, 30);
    double h = 0.7713;  // not a multiple of dx
    RealField sh = shift(u, h);
    for (int j = 0; j < grid.n; j += 11)
        CHECK(sh.samples[j] ==
              doctest::Approx(eval_interpolant(u, grid.point(j) + h)).epsilon(1e-10));

    RealField two_step = shift(shift(u, 0.3), 0.45);
    RealField one_step = shift(u, 0.75);
    CHECK(max_diff(two_step, one_step) < 1e-11);

    // full-period shift is the identity
    CHECK(max_diff(shift(u, grid.length), u) < 1e-11);
}

TEST_CASE("finite difference operator") {
    GridSpec grid(10.0, 128);
    RealField u = sine_field(grid, 1, 0.5);
    double k = 2.0 * M_PI / grid.length;
    double h = grid.length / 7.0;

    // D^h sin(kx) = 2 sin(kh/2) cos(k(x + h/2))
    RealField d = finite_diff(u, h);
    for (int j = 0; j < grid.n; j += 13) {
        double x = grid.point(j);
        double expect = 0.5 * 2.0 * std::sin(k * h / 2.0) * std::cos(k * (x + h / 2.0));
        CHECK(d.samples[j] == doctest::Approx(expect).epsilon(1e-10));
    }

    // periodicity D^{h+L} = D^h, exactly
    RealField d2 = finite_diff(u, h + grid.length);
    CHECK(max_diff(d, d2) < 1e-13);

    // commutes with the derivative
    RealField a = derivative(finite_diff(u, h), 1);
    RealField b = finite_diff(derivative(u, 1), h);
    CHECK(max_diff(a, b) < 1e-11);

    // D^L = 0
    RealField dz = finite_diff(u, grid.length);
    CHECK(dz.max_abs() < 1e-13);
}

TEST_CASE("integration helpers") {
    GridSpec grid(10.0, 64);
    RealField u = sine_field(grid, 1, 2.0);
    CHECK(std::abs(integrate_x(u)) < 1e-12);
    CHECK(std::abs(mean(u)) < 1e-13);
    // int sin^2 = L/2
    CHECK(integrate_x(u, [](double x) { return x * x; }) ==
          doctest::Approx(4.0 * grid.length / 2.0).epsilon(1e-12));

    RealField shifted = u;
    for (double& s : shifted.samples) s += 2.5;
    CHECK(mean(shifted) == doctest::Approx(2.5).epsilon(1e-12));
    RealField back = project_zero_mean(shifted);
    CHECK(std::abs(mean(back)) < 1e-12);
    CHECK(max_diff(back, u) < 1e-12);
}

TEST_CASE("compensated summation recovers a hard cancellation") {
    CompensatedSum s;
    s.add(1.0);
    s.add(1e100);
    s.add(1.0);
    s.add(-1e100);
    CHECK(s.value() == doctest::Approx(2.0));
}

TEST_CASE("trajectory bookkeeping") {
    GridSpec grid(10.0, 64);
    Trajectory t(grid, 1.0, 0.25);
    t.push(sine_field(grid, 1));
    t.push(sine_field(grid, 2));
    CHECK(t.size() == 2);
    CHECK(t.time(1) == doctest::Approx(1.25));
    GridSpec other(10.0, 32);
    CHECK_THROWS_AS(t.push(RealField(other)), GridMismatchError);
}

TEST_CASE("interpolant evaluation agrees with samples at grid points") {
    GridSpec grid(10.0, 64);
    RealField u = random_band_limited(grid, 9, 20);
    for (int j = 0; j < grid.n; j += 7)
        CHECK(eval_interpolant(u, grid.point(j)) == doctest::Approx(u.samples[j]).epsilon(1e-11));
}
