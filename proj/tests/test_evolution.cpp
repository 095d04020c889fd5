#include <cmath>

#include <doctest.h>

#include "ksb/evolution.hpp"
#include "ksb/spectral.hpp"

using namespace ksb;

namespace {

double max_diff(const RealField& a, const RealField& b) {
    double m = 0.0;
    for (int j = 0; j < a.grid.n; ++j)
        m = std::max(m, std::abs(a.samples[j] - b.samples[j]));
    return m;
}

// u*(t,x) = a sin(kx - t), a travelling profile with closed-form time
// derivative; the matching capillary forcing keeps it an exact solution.
struct Travelling {
    GridSpec grid;
    double amp = 0.1;

    RealField at(double t) const {
        RealField f(grid);
        double k = 2.0 * M_PI / grid.length;
        for (int j = 0; j < grid.n; ++j)
            f.samples[j] = amp * std::sin(k * grid.point(j) - t);
        return f;
    }
    RealField dt_at(double t) const {
        RealField f(grid);
        double k = 2.0 * M_PI / grid.length;
        for (int j = 0; j < grid.n; ++j)
            f.samples[j] = -amp * std::cos(k * grid.point(j) - t);
        return f;
    }
};

// The stepper applies |dx| to the supplied forcing, so hand it
// g = |dx|^{-1} eta to realize a plain right-hand side eta.
ForcingFn inverse_halfwave_forcing(const ForcingFn& eta) {
    return [eta](double t) { return halfwave(eta(t), -1.0); };
}

}  // namespace

TEST_CASE("linear symbol oracle values") {
    // L = 2 pi puts xi = 1 at mode 1: the KS symbol vanishes there
    GridSpec g1(2.0 * M_PI, 64);
    auto ks = linear_symbol(EquationSpec::ks(), g1);
    CHECK(ks[1] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(ks[2] == doctest::Approx(-12.0).epsilon(1e-12));  // xi = 2: 4 - 16

    // xi = 1/sqrt(2) maximizes growth at 1/4
    GridSpec g2(2.0 * M_PI * std::sqrt(2.0), 64);
    CHECK(linear_symbol(EquationSpec::ks(), g2)[1] == doctest::Approx(0.25).epsilon(1e-12));

    auto cap = linear_symbol(EquationSpec::capillary_burgers({}), g1);
    CHECK(cap[2] == doctest::Approx(-16.0).epsilon(1e-12));
    auto fb = linear_symbol(EquationSpec::forced_burgers(0.3), g1);
    CHECK(fb[2] == doctest::Approx(-1.2).epsilon(1e-12));
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(StepperConfig(Scheme::ETDRK4, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(StepperConfig(Scheme::ETDRK4, 0.1, 0), std::invalid_argument);
    CHECK_THROWS_AS(EquationSpec::forced_burgers(-1.0), std::invalid_argument);

    // stiffness guard: dt * max|symbol| > 500 rejected for ETDRK4
    GridSpec grid(10.0, 256);
    RealField u0(grid);
    CHECK_THROWS_AS(integrate(EquationSpec::ks(), u0, StepperConfig(Scheme::ETDRK4, 1.0), 2.0),
                    std::invalid_argument);
}

TEST_CASE("manufactured capillary solution converges at order >= 3") {
    GridSpec grid(10.0, 32);
    Travelling tr{grid, 1.0};
    auto u_star = [&](double t) { return tr.at(t); };
    auto du_star = [&](double t) { return tr.dt_at(t); };
    ForcingFn g = inverse_halfwave_forcing(
        manufactured_forcing(u_star, du_star, EquationKind::CapillaryBurgers));
    EquationSpec spec = EquationSpec::capillary_burgers(g);

    double t_end = 1.0;
    auto error_at = [&](double dt) {
        StepperConfig cfg(Scheme::ETDRK4, dt, static_cast<int>(std::lround(t_end / dt)));
        RunResult r = integrate(spec, tr.at(0.0), cfg, t_end);
        return max_diff(r.trajectory.frames.back(), tr.at(t_end));
    };
    double e1 = error_at(0.02);
    double e2 = error_at(0.01);
    CHECK(e1 / e2 >= 8.0);  // at least 3rd order
    CHECK(e2 < 1e-6);
}

TEST_CASE("IMEX scheme converges on the manufactured problem") {
    GridSpec grid(10.0, 64);
    Travelling tr{grid};
    ForcingFn g = inverse_halfwave_forcing(manufactured_forcing(
        [&](double t) { return tr.at(t); }, [&](double t) { return tr.dt_at(t); },
        EquationKind::CapillaryBurgers));
    EquationSpec spec = EquationSpec::capillary_burgers(g);
    double t_end = 0.2;
    auto error_at = [&](double dt) {
        StepperConfig cfg(Scheme::IMEX, dt, static_cast<int>(std::lround(t_end / dt)));
        return max_diff(integrate(spec, tr.at(0.0), cfg, t_end).trajectory.frames.back(),
                        tr.at(t_end));
    };
    double e1 = error_at(5e-5);
    double e2 = error_at(2.5e-5);
    CHECK(e1 / e2 >= 3.2);  // 2nd order
}

TEST_CASE("inviscid transport conserves energy before shock formation") {
    GridSpec grid(10.0, 256);
    RealField u0(grid);
    for (int j = 0; j < grid.n; ++j)
        u0.samples[j] = 0.05 * std::sin(2.0 * M_PI * grid.point(j) / grid.length);
    StepperConfig cfg(Scheme::ETDRK4, 1e-3, 100);
    RunResult r = integrate(EquationSpec::forced_burgers(0.0), u0, cfg, 1.0);
    double e0 = r.energy_series.front(), e1 = r.energy_series.back();
    CHECK(std::abs(e1 - e0) / e0 < 1e-10);
}

TEST_CASE("KS run is Galilean covariant when the mean is kept") {
    GridSpec grid(22.0, 64);
    RealField v0 = random_initial_condition(grid, 5);
    double c = 0.4, t_end = 2.0, dt = 1e-3;

    StepperConfig cfg(Scheme::ETDRK4, dt, static_cast<int>(std::lround(t_end / dt)));
    RealField v_end = integrate(EquationSpec::ks(), v0, cfg, t_end).trajectory.frames.back();

    RealField u0 = v0;
    for (double& s : u0.samples) s += c;
    StepperConfig cfg2 = cfg;
    cfg2.keep_mean = true;
    RealField u_end = integrate(EquationSpec::ks(), u0, cfg2, t_end).trajectory.frames.back();

    RealField expect = shift(v_end, -c * t_end);
    for (double& s : expect.samples) s += c;
    CHECK(max_diff(u_end, expect) < 1e-7);
}

TEST_CASE("recording and spectral diagnostics") {
    GridSpec grid(50.0, 128);
    RealField u0 = random_initial_condition(grid, 1);
    StepperConfig cfg(Scheme::ETDRK4, 0.05, 20);
    RunResult r = integrate(EquationSpec::ks(), u0, cfg, 10.0);
    CHECK(r.trajectory.size() == 11);  // initial frame + 10 recordings
    CHECK(r.energy_series.size() == 11);
    CHECK(r.trajectory.dt_rec == doctest::Approx(1.0));
    for (double e : r.energy_series) CHECK(e >= 0.0);
    CHECK(r.nyquist_max < 1e-3);  // resolved run: top modes stay tiny
    for (const auto& f : r.trajectory.frames) CHECK(std::abs(mean(f)) < 1e-12);
}

TEST_CASE("divergence raises a structured error") {
    GridSpec grid(10.0, 64);
    RealField u0(grid);
    for (int j = 0; j < grid.n; ++j)
        u0.samples[j] = std::sin(2.0 * M_PI * grid.point(j) / grid.length);
    // monstrous forcing drives |u| through the blow-up threshold
    ForcingFn g = [&](double) {
        RealField f(grid);
        for (int j = 0; j < grid.n; ++j)
            f.samples[j] = 1e7 * std::sin(2.0 * M_PI * grid.point(j) / grid.length);
        return f;
    };
    StepperConfig cfg(Scheme::ETDRK4, 0.05, 1);
    CHECK_THROWS_AS(integrate(EquationSpec::forced_burgers(0.0, g), u0, cfg, 1000.0),
                    DivergenceError);
}

TEST_CASE("random initial condition is reproducible, zero mean, band limited") {
    GridSpec grid(50.0, 128);
    RealField a = random_initial_condition(grid, 123);
    RealField b = random_initial_condition(grid, 123);
    RealField c = random_initial_condition(grid, 124);
    CHECK(max_diff(a, b) == 0.0);
    CHECK(max_diff(a, c) > 1e-4);
    CHECK(std::abs(mean(a)) < 1e-14);
    SpectralField ah = fft_forward(a);
    for (int k = grid.n / 8 + 1; k < grid.num_modes(); ++k)
        CHECK(std::abs(ah.modes[k]) < 1e-14);
}

TEST_CASE("vanishing viscosity runs validate their eps list") {
    GridSpec grid(10.0, 64);
    RealField u0(grid);
    for (int j = 0; j < grid.n; ++j)
        u0.samples[j] = 0.1 * std::sin(2.0 * M_PI * grid.point(j) / grid.length);
    StepperConfig cfg(Scheme::ETDRK4, 1e-3, 100);
    CHECK_THROWS_AS(vanishing_viscosity_run(u0, {}, cfg, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(vanishing_viscosity_run(u0, {0.1, 0.2}, cfg, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(vanishing_viscosity_run(u0, {0.1, -0.2}, cfg, 0.1), std::invalid_argument);

    auto runs = vanishing_viscosity_run(u0, {0.5, 1e-6}, cfg, 0.1);
    CHECK(runs.size() == 2);
    CHECK(runs[0].warnings.empty());
    REQUIRE(runs[1].warnings.size() == 1);
    CHECK(runs[1].warnings[0].find("unresolved") != std::string::npos);
}
