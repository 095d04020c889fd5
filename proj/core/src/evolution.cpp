#include "ksb/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "ksb/rng.hpp"
#include "ksb/spectral.hpp"

namespace ksb {

std::vector<double> linear_symbol(const EquationSpec& spec, const GridSpec& grid) {
    std::vector<double> sym(grid.num_modes());
    for (int k = 0; k < grid.num_modes(); ++k) {
        double xi2 = grid.wavenumber(k) * grid.wavenumber(k);
        switch (spec.kind) {
            case EquationKind::KuramotoSivashinsky: sym[k] = xi2 - xi2 * xi2; break;
            case EquationKind::CapillaryBurgers: sym[k] = -xi2 * xi2; break;
            case EquationKind::ForcedBurgers: sym[k] = -spec.viscosity * xi2; break;
        }
    }
    return sym;
}

namespace {

using cplx = std::complex<double>;

// ETDRK4 coefficients via the Kassam-Trefethen contour trick: each phi-type
// function is averaged over a unit circle around z0 = symbol*dt, which stays
// accurate when z0 is near 0.
struct Etdrk4Coeffs {
    std::vector<double> e, e2, q, f1, f2, f3;
};

Etdrk4Coeffs etdrk4_coeffs(const std::vector<double>& sym, double dt) {
    const int m = 32;
    const int nk = static_cast<int>(sym.size());
    Etdrk4Coeffs c;
    c.e.resize(nk);
    c.e2.resize(nk);
    c.q.resize(nk);
    c.f1.resize(nk);
    c.f2.resize(nk);
    c.f3.resize(nk);
    for (int k = 0; k < nk; ++k) {
        double z0 = sym[k] * dt;
        c.e[k] = std::exp(z0);
        c.e2[k] = std::exp(0.5 * z0);
        double q = 0, f1 = 0, f2 = 0, f3 = 0;
        for (int j = 0; j < m; ++j) {
            double th = M_PI * (j + 0.5) / m;
            cplx z = z0 + cplx(std::cos(th), std::sin(th));
            cplx ez = std::exp(z);
            cplx z3 = z * z * z;
            q += ((std::exp(0.5 * z) - 1.0) / z).real();
            f1 += ((-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3).real();
            f2 += ((2.0 + z + ez * (-2.0 + z)) / z3).real();
            f3 += ((-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3).real();
        }
        c.q[k] = dt * q / m;
        c.f1[k] = dt * f1 / m;
        c.f2[k] = dt * f2 / m;
        c.f3[k] = dt * f3 / m;
    }
    return c;
}

struct Stepper {
    const EquationSpec& spec;
    const StepperConfig& cfg;
    GridSpec grid;
    int cutoff;  // 2/3-rule: modes with k > cutoff zeroed in products
    double last_max_abs = 0.0;

    Stepper(const EquationSpec& s, const StepperConfig& c, const GridSpec& g)
        : spec(s), cfg(c), grid(g), cutoff(g.n / 3) {}

    void dealias(SpectralField& uh) const {
        if (!cfg.dealias) return;
        for (int k = cutoff + 1; k < grid.num_modes(); ++k) uh.modes[k] = 0.0;
    }

    // N(u) = -d/dx (u^2/2) + |dx| g + |dx| xi, in spectral space.
    SpectralField nonlinear(const SpectralField& uh, double t, bool track_max = false) {
        SpectralField tr = uh;
        dealias(tr);
        RealField u = fft_inverse(tr);
        if (track_max) last_max_abs = u.max_abs();
        RealField w(grid);
        for (int j = 0; j < grid.n; ++j) w.samples[j] = 0.5 * u.samples[j] * u.samples[j];
        SpectralField wh = fft_forward(w);
        dealias(wh);
        SpectralField out(grid);
        const int nyq = grid.n / 2;
        for (int k = 0; k < grid.num_modes(); ++k) {
            double xi = grid.wavenumber(k);
            out.modes[k] = (k == nyq) ? 0.0 : cplx(0.0, -xi) * wh.modes[k];
        }
        auto add_halfwave = [&](const ForcingFn& f) {
            if (!f) return;
            SpectralField fh = fft_forward(f(t));
            for (int k = 1; k < grid.num_modes(); ++k)
                out.modes[k] += grid.wavenumber(k) * fh.modes[k];
        };
        add_halfwave(spec.forcing_g);
        add_halfwave(spec.forcing_xi);
        return out;
    }
};

}  // namespace

RunResult integrate(const EquationSpec& spec, const RealField& u0, const StepperConfig& cfg,
                    double t_end) {
    if (t_end <= 0.0) throw std::invalid_argument("integrate: t_end must be > 0");
    const GridSpec grid = u0.grid;
    std::vector<double> sym = linear_symbol(spec, grid);
    double max_sym = 0.0;
    for (double s : sym) max_sym = std::max(max_sym, std::abs(s));
    if (cfg.scheme == Scheme::ETDRK4 && cfg.dt * max_sym > 500.0)
        throw std::invalid_argument("integrate: dt does not resolve the stiff linear scale "
                                    "(dt*max|symbol| > 500)");

    RealField start = u0;
    if (spec.kind == EquationKind::KuramotoSivashinsky && !cfg.keep_mean)
        start = project_zero_mean(u0);

    Stepper st(spec, cfg, grid);
    SpectralField v = fft_forward(start);
    if (!cfg.keep_mean && spec.kind == EquationKind::KuramotoSivashinsky) v.modes[0] = 0.0;

    const long nsteps = std::lround(t_end / cfg.dt);
    RunResult res;
    res.trajectory = Trajectory(grid, 0.0, cfg.dt * cfg.record_every);

    auto record = [&](const SpectralField& vh) {
        RealField u = fft_inverse(vh);
        res.trajectory.push(u);
        res.energy_series.push_back(grid.length * spectral_energy(vh));
        for (int k = (7 * grid.n) / 16; k < grid.num_modes(); ++k)
            res.nyquist_max = std::max(res.nyquist_max, std::abs(vh.modes[k]));
    };
    record(v);

    Etdrk4Coeffs co;
    if (cfg.scheme == Scheme::ETDRK4) co = etdrk4_coeffs(sym, cfg.dt);
    const int nk = grid.num_modes();
    SpectralField n_prev(grid);
    bool have_prev = false;

    for (long step = 0; step < nsteps; ++step) {
        double t = step * cfg.dt;
        if (cfg.scheme == Scheme::ETDRK4) {
            SpectralField nv = st.nonlinear(v, t, true);
            if (!(st.last_max_abs <= 1e8)) throw DivergenceError(t);
            SpectralField a(grid), b(grid), c(grid);
            for (int k = 0; k < nk; ++k) a.modes[k] = co.e2[k] * v.modes[k] + co.q[k] * nv.modes[k];
            SpectralField na = st.nonlinear(a, t + 0.5 * cfg.dt);
            for (int k = 0; k < nk; ++k) b.modes[k] = co.e2[k] * v.modes[k] + co.q[k] * na.modes[k];
            SpectralField nb = st.nonlinear(b, t + 0.5 * cfg.dt);
            for (int k = 0; k < nk; ++k)
                c.modes[k] = co.e2[k] * a.modes[k] + co.q[k] * (2.0 * nb.modes[k] - nv.modes[k]);
            SpectralField nc = st.nonlinear(c, t + cfg.dt);
            for (int k = 0; k < nk; ++k)
                v.modes[k] = co.e[k] * v.modes[k] + co.f1[k] * nv.modes[k] +
                             2.0 * co.f2[k] * (na.modes[k] + nb.modes[k]) + co.f3[k] * nc.modes[k];
        } else {
            // Crank-Nicolson linear part, Adams-Bashforth 2 nonlinearity.
            SpectralField nv = st.nonlinear(v, t, true);
            if (!(st.last_max_abs <= 1e8)) throw DivergenceError(t);
            if (!have_prev) {
                n_prev = nv;
                have_prev = true;
            }
            for (int k = 0; k < nk; ++k) {
                cplx rhs = v.modes[k] * (1.0 + 0.5 * cfg.dt * sym[k]) +
                           cfg.dt * (1.5 * nv.modes[k] - 0.5 * n_prev.modes[k]);
                v.modes[k] = rhs / (1.0 - 0.5 * cfg.dt * sym[k]);
            }
            n_prev = nv;
        }
        if (!cfg.keep_mean && spec.kind == EquationKind::KuramotoSivashinsky) v.modes[0] = 0.0;
        if ((step + 1) % cfg.record_every == 0) record(v);
    }
    return res;
}

ForcingFn manufactured_forcing(const std::function<RealField(double)>& u_star,
                               const std::function<RealField(double)>& du_star_dt,
                               EquationKind kind) {
    return [=](double t) {
        RealField u = u_star(t);
        RealField ut = du_star_dt(t);
        RealField ux = derivative(u, 1);
        RealField eta(u.grid);
        for (int j = 0; j < u.grid.n; ++j)
            eta.samples[j] = ut.samples[j] + u.samples[j] * ux.samples[j];
        if (kind == EquationKind::CapillaryBurgers) {
            RealField u4 = derivative(u, 4);
            for (int j = 0; j < u.grid.n; ++j) eta.samples[j] += u4.samples[j];
        }
        return eta;
    };
}

std::vector<RunResult> vanishing_viscosity_run(const RealField& u0,
                                               const std::vector<double>& eps_list,
                                               const StepperConfig& cfg, double t_end) {
    if (eps_list.empty()) throw std::invalid_argument("vanishing_viscosity_run: empty eps list");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (eps_list[i] <= 0.0)
            throw std::invalid_argument("vanishing_viscosity_run: eps must be > 0");
        if (i > 0 && eps_list[i] >= eps_list[i - 1])
            throw std::invalid_argument("vanishing_viscosity_run: eps list must be decreasing");
    }
    double eps_min_resolved = 4.0 * u0.grid.dx() * u0.max_abs();
    std::vector<RunResult> out;
    for (double eps : eps_list) {
        RunResult r = integrate(EquationSpec::forced_burgers(eps), u0, cfg, t_end);
        if (eps < eps_min_resolved)
            r.warnings.push_back("viscous layer unresolved: eps < 4*dx*max|u0|");
        out.push_back(std::move(r));
    }
    return out;
}

RealField random_initial_condition(const GridSpec& grid, unsigned long long seed) {
    std::uint64_t state = seed;
    SpectralField uh(grid);
    for (int k = 1; k <= grid.n / 8; ++k) {
        double th = 2.0 * M_PI * uniform01(state);
        // amplitude envelope 0.1 |n|^{-1}; the 1/2 splits it over +-n
        uh.modes[k] = 0.05 / k * std::complex<double>(std::cos(th), std::sin(th));
    }
    return fft_inverse(uh);
}

}  // namespace ksb
