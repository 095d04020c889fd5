#include "ksb/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

#include "ksb/reduce.hpp"

namespace ksb {

double GridSpec::wavenumber(int n_mode) const { return 2.0 * M_PI * n_mode / length; }

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
    if (a != b) throw GridMismatchError(std::string(where) + ": grid mismatch");
}

bool RealField::all_finite() const {
    for (double v : samples)
        if (!std::isfinite(v)) return false;
    return true;
}

double RealField::max_abs() const {
    double m = 0.0;
    for (double v : samples) m = std::max(m, std::abs(v));
    return m;
}

namespace {

// FFTW plan pair per N. Plan creation is serialized; new-array execution is
// thread safe. Buffers are fftw_malloc'd so alignment matches the plan.
struct PlanSet {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

PlanSet& plans_for(int n) {
    static std::mutex mu;
    static std::map<int, PlanSet> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    double* re = fftw_alloc_real(n);
    fftw_complex* cp = fftw_alloc_complex(n / 2 + 1);
    PlanSet ps;
    ps.fwd = fftw_plan_dft_r2c_1d(n, re, cp, FFTW_ESTIMATE);
    ps.inv = fftw_plan_dft_c2r_1d(n, cp, re, FFTW_ESTIMATE);
    fftw_free(re);
    fftw_free(cp);
    return cache.emplace(n, ps).first->second;
}

struct RealBuf {
    double* p;
    explicit RealBuf(int n) : p(fftw_alloc_real(n)) {}
    ~RealBuf() { fftw_free(p); }
};
struct ComplexBuf {
    fftw_complex* p;
    explicit ComplexBuf(int n) : p(fftw_alloc_complex(n)) {}
    ~ComplexBuf() { fftw_free(p); }
};

RealField apply_multiplier(const RealField& u,
                           const std::function<std::complex<double>(int)>& mult) {
    SpectralField uh = fft_forward(u);
    for (int k = 0; k < uh.grid.num_modes(); ++k) uh.modes[k] *= mult(k);
    return fft_inverse(uh);
}

}  // namespace

SpectralField fft_forward(const RealField& u) {
    const int n = u.grid.n;
    PlanSet& ps = plans_for(n);
    RealBuf in(n);
    ComplexBuf out(n / 2 + 1);
    for (int j = 0; j < n; ++j) in.p[j] = u.samples[j];
    fftw_execute_dft_r2c(ps.fwd, in.p, out.p);
    SpectralField uh(u.grid);
    for (int k = 0; k <= n / 2; ++k)
        uh.modes[k] = std::complex<double>(out.p[k][0] / n, out.p[k][1] / n);
    return uh;
}

RealField fft_inverse(const SpectralField& uh) {
    const int n = uh.grid.n;
    PlanSet& ps = plans_for(n);
    ComplexBuf in(n / 2 + 1);
    RealBuf out(n);
    for (int k = 0; k <= n / 2; ++k) {
        in.p[k][0] = uh.modes[k].real();
        in.p[k][1] = uh.modes[k].imag();
    }
    fftw_execute_dft_c2r(ps.inv, in.p, out.p);
    RealField u(uh.grid);
    for (int j = 0; j < n; ++j) u.samples[j] = out.p[j];
    return u;
}

RealField derivative(const RealField& u, int m) {
    if (m < 0 || m > 8) throw std::invalid_argument("derivative: order must be in 0..8");
    if (m == 0) return u;
    const GridSpec g = u.grid;
    const int nyq = g.n / 2;
    // (i xi)^m = i^m xi^m; i^m cycles through {1, i, -1, -i}.
    static const std::complex<double> icycle[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    const std::complex<double> im = icycle[m % 4];
    return apply_multiplier(u, [&](int k) -> std::complex<double> {
        if (k == nyq && m % 2 == 1) return 0.0;
        return im * std::pow(g.wavenumber(k), m);
    });
}

RealField halfwave(const RealField& u, double alpha) {
    if (alpha < -1.0) throw std::invalid_argument("halfwave: alpha must be >= -1");
    if (alpha == 0.0) return u;
    const GridSpec g = u.grid;
    if (alpha < 0.0) {
        double mu = mean(u);
        if (std::abs(mu) > 1e-12 * std::max(1.0, u.max_abs()))
            throw std::domain_error("halfwave: |dx|^alpha undefined on the mean");
    }
    return apply_multiplier(u, [&](int k) -> std::complex<double> {
        if (k == 0) return 0.0;
        return std::pow(g.wavenumber(k), alpha);
    });
}

RealField shift(const RealField& u, double h) {
    const GridSpec g = u.grid;
    const int nyq = g.n / 2;
    return apply_multiplier(u, [&](int k) -> std::complex<double> {
        if (k == nyq) return 0.0;
        double ph = g.wavenumber(k) * h;
        return {std::cos(ph), std::sin(ph)};
    });
}

RealField finite_diff(const RealField& u, double h) {
    const GridSpec g = u.grid;
    const int nyq = g.n / 2;
    return apply_multiplier(u, [&](int k) -> std::complex<double> {
        if (k == nyq) return 0.0;
        double ph = g.wavenumber(k) * h;
        return std::complex<double>(std::cos(ph) - 1.0, std::sin(ph));
    });
}

double integrate_x(const RealField& u) {
    CompensatedSum s;
    for (double v : u.samples) s.add(v);
    return s.value() * u.grid.dx();
}

double integrate_x(const RealField& u, const std::function<double(double)>& f) {
    CompensatedSum s;
    for (double v : u.samples) s.add(f(v));
    return s.value() * u.grid.dx();
}

double mean(const RealField& u) { return integrate_x(u) / u.grid.length; }

RealField project_zero_mean(const RealField& u) {
    double mu = mean(u);
    RealField out = u;
    for (double& v : out.samples) v -= mu;
    return out;
}

double spectral_energy(const SpectralField& uh) {
    const int nyq = uh.grid.n / 2;
    CompensatedSum s;
    s.add(std::norm(uh.modes[0]));
    for (int k = 1; k < nyq; ++k) s.add(2.0 * std::norm(uh.modes[k]));
    s.add(std::norm(uh.modes[nyq]));  // the single mode n = -N/2
    return s.value();
}

double eval_interpolant(const RealField& u, double x) {
    SpectralField uh = fft_forward(u);
    const int nyq = u.grid.n / 2;
    CompensatedSum s;
    s.add(uh.modes[0].real());
    for (int k = 1; k < nyq; ++k) {
        double ph = u.grid.wavenumber(k) * x;
        s.add(2.0 * (uh.modes[k].real() * std::cos(ph) - uh.modes[k].imag() * std::sin(ph)));
    }
    s.add(uh.modes[nyq].real() * std::cos(u.grid.wavenumber(nyq) * x));
    return s.value();
}

}  // namespace ksb
