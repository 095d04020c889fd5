#include "ksb/identities.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ksb/parallel.hpp"
#include "ksb/reduce.hpp"
#include "ksb/spectral.hpp"

namespace ksb {

namespace {

// Composite quadrature weights for nf uniformly spaced samples with spacing
// dt: Simpson when the interval count is even, Simpson 3/8 on the leading
// three intervals otherwise (keeps 4th order for odd counts).
std::vector<double> time_weights(int nf, double dt) {
    if (nf < 2) throw std::invalid_argument("time_weights: need at least 2 samples");
    std::vector<double> w(nf, 0.0);
    int ni = nf - 1;
    auto simpson = [&](int first, int count) {
        w[first] += dt / 3.0;
        w[first + count] += dt / 3.0;
        for (int j = 1; j < count; ++j) w[first + j] += dt * ((j % 2) ? 4.0 : 2.0) / 3.0;
    };
    if (ni == 1) {
        w[0] = w[1] = 0.5 * dt;
    } else if (ni % 2 == 0) {
        simpson(0, ni);
    } else if (ni == 3) {
        w[0] = w[3] = 3.0 * dt / 8.0;
        w[1] = w[2] = 9.0 * dt / 8.0;
    } else {
        w[0] += 3.0 * dt / 8.0;
        w[1] += 9.0 * dt / 8.0;
        w[2] += 9.0 * dt / 8.0;
        w[3] += 3.0 * dt / 8.0;
        simpson(3, ni - 3);
    }
    return w;
}

// The flux-identity integrands carry |D^h u| factors whose cusps limit the
// plain rectangle rule to O(n^-2). The fields are band-limited, so sampling
// their trigonometric interpolant on a finer grid is exact and cuts the
// quadrature error by the square of the factor.
constexpr int kQuadOversample = 32;

RealField refine_samples(const RealField& u, int factor) {
    if (factor <= 1) return u;
    SpectralField uh = fft_forward(u);
    GridSpec fine(u.grid.length, u.grid.n * factor);
    SpectralField fh(fine);
    for (int k = 0; k < u.grid.num_modes(); ++k) fh.modes[k] = uh.modes[k];
    return fft_inverse(fh);
}

double max_abs_term(const IdentityReport& rep) {
    double m = 0.0;
    for (const auto& [k, v] : rep.terms) m = std::max(m, std::abs(v));
    return m;
}

void finalize(IdentityReport& rep) {
    double m = max_abs_term(rep);
    rep.residual_rel = (m > 0.0) ? rep.residual_abs / m : rep.residual_abs;
}

// 1/2 int s(D^h u) dx with s(x) = |x| x (modified) or x^2 (signed).
double quadratic_term(const RealField& u, double h, bool modified) {
    RealField d = finite_diff(refine_samples(u, kQuadOversample), h);
    return 0.5 * integrate_x(d, [&](double x) { return modified ? std::abs(x) * x : x * x; });
}

// 1/6 int c(D^h u) dx with c(x) = |x|^3 (modified) or x^3 (signed).
double cubic_term(const RealField& u, double h, bool modified) {
    RealField d = finite_diff(refine_samples(u, kQuadOversample), h);
    return integrate_x(d, [&](double x) { return (modified ? std::abs(x) * x * x : x * x * x) / 6.0; });
}

double source_term(const RealField& u, const RealField& eta, double h, bool modified) {
    RealField du = finite_diff(refine_samples(u, kQuadOversample), h);
    RealField de = finite_diff(refine_samples(eta, kQuadOversample), h);
    CompensatedSum s;
    for (int j = 0; j < du.grid.n; ++j) {
        double d = du.samples[j];
        s.add(de.samples[j] * (modified ? std::abs(d) : d));
    }
    return s.value() * du.grid.dx();
}

void check_khm_inputs(const Trajectory& u, const Trajectory& eta, const char* who) {
    require_same_grid(u.grid, eta.grid, who);
    if (u.size() < 3) throw std::invalid_argument(std::string(who) + ": need at least 3 frames");
    if (u.size() != eta.size())
        throw std::invalid_argument(std::string(who) + ": frame counts differ");
}

IdentityReport khm_residual_impl(const Trajectory& u, const Trajectory& eta, double h,
                                 double delta_h, bool modified, const char* name) {
    check_khm_inputs(u, eta, name);
    if (delta_h <= 0.0) delta_h = 1e-4 * u.grid.length;
    const int nf = static_cast<int>(u.size());
    const double dt = u.dt_rec;

    std::vector<double> quad(nf), t1(nf - 2), t2(nf - 2), t3(nf - 2);
    parallel_for(nf, [&](int i) { quad[i] = quadratic_term(u.frames[i], h, modified); });
    parallel_for(nf - 2, [&](int k) {
        int i = k + 1;
        t1[k] = (quad[i + 1] - quad[i - 1]) / (2.0 * dt);
        t2[k] = (cubic_term(u.frames[i], h + delta_h, modified) -
                 cubic_term(u.frames[i], h - delta_h, modified)) /
                (2.0 * delta_h);
        t3[k] = source_term(u.frames[i], eta.frames[i], h, modified);
    });

    IdentityReport rep;
    rep.name = name;
    int worst = 0;
    for (int k = 0; k < nf - 2; ++k) {
        double r = std::abs(t1[k] + t2[k] - t3[k]);
        if (r >= rep.residual_abs) {
            rep.residual_abs = r;
            worst = k;
        }
    }
    rep.terms = {{"time_term", t1[worst]}, {"flux_term", t2[worst]}, {"source_term", t3[worst]}};
    rep.resolution = {u.grid.n, dt, 0.0, delta_h, nf};
    // Denominator over all frames, not just the worst one.
    for (int k = 0; k < nf - 2; ++k) {
        double m = std::max({std::abs(t1[k]), std::abs(t2[k]), std::abs(t3[k])});
        if (m > max_abs_term(rep)) rep.terms.emplace_back("max_term", m);
    }
    finalize(rep);
    rep.terms.erase(std::remove_if(rep.terms.begin(), rep.terms.end(),
                                   [](const auto& kv) { return kv.first == "max_term"; }),
                    rep.terms.end());
    return rep;
}

}  // namespace

double IdentityReport::term(const std::string& key) const {
    for (const auto& [k, v] : terms)
        if (k == key) return v;
    throw std::out_of_range("IdentityReport: no term named " + key);
}

IdentityReport khm_modified_residual(const Trajectory& u, const Trajectory& eta, double h,
                                     double delta_h) {
    return khm_residual_impl(u, eta, h, delta_h, true, "khm_modified");
}

IdentityReport khm_signed_residual(const Trajectory& u, const Trajectory& eta, double h,
                                   double delta_h) {
    return khm_residual_impl(u, eta, h, delta_h, false, "khm_signed");
}

double khm_pointwise_residual(const RealField& u_minus, const RealField& u_plus,
                              const RealField& eta_center, double dt, double h, double delta_h) {
    require_same_grid(u_minus.grid, u_plus.grid, "khm_pointwise_residual");
    require_same_grid(u_minus.grid, eta_center.grid, "khm_pointwise_residual");
    if (dt <= 0.0) throw std::invalid_argument("khm_pointwise_residual: dt must be > 0");
    const GridSpec grid = u_minus.grid;
    if (delta_h <= 0.0) delta_h = 1e-4 * grid.length;

    auto qfield = [&](const RealField& u) {
        RealField d = finite_diff(u, h);
        RealField q(grid);
        for (int j = 0; j < grid.n; ++j) {
            double x = d.samples[j];
            q.samples[j] = std::abs(x) * x;
        }
        return q;
    };
    RealField qm = qfield(u_minus), qp = qfield(u_plus);

    RealField uc(grid);
    for (int j = 0; j < grid.n; ++j)
        uc.samples[j] = 0.5 * (u_minus.samples[j] + u_plus.samples[j]);
    RealField dc = finite_diff(uc, h);
    RealField dp = finite_diff(uc, h + delta_h);
    RealField dm = finite_diff(uc, h - delta_h);
    RealField de = finite_diff(eta_center, h);

    RealField w(grid);  // u |D^h u| D^h u + 1/3 |D^h u|^3
    for (int j = 0; j < grid.n; ++j) {
        double x = dc.samples[j];
        w.samples[j] = uc.samples[j] * std::abs(x) * x + std::abs(x) * x * x / 3.0;
    }
    RealField wx = derivative(w, 1);

    double worst = 0.0;
    for (int j = 0; j < grid.n; ++j) {
        double a3p = std::abs(dp.samples[j]) * dp.samples[j] * dp.samples[j];
        double a3m = std::abs(dm.samples[j]) * dm.samples[j] * dm.samples[j];
        double r = 0.5 * (qp.samples[j] - qm.samples[j]) / (2.0 * dt) +
                   (a3p - a3m) / (6.0 * 2.0 * delta_h) + 0.5 * wx.samples[j] -
                   de.samples[j] * std::abs(dc.samples[j]);
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

IdentityReport khm_integrated_residual(const Trajectory& u, const Trajectory& eta, double h,
                                       int n_delta) {
    check_khm_inputs(u, eta, "khm_integrated_residual");
    if (n_delta < 2 || n_delta % 2) n_delta = std::max(2, n_delta + (n_delta % 2));
    const int nf = static_cast<int>(u.size());
    std::vector<double> wt = time_weights(nf, u.dt_rec);
    std::vector<double> wd = time_weights(n_delta + 1, h / n_delta);

    auto delta_profile = [&](int frame, std::vector<double>& quad_d, std::vector<double>& src_d) {
        quad_d.assign(n_delta + 1, 0.0);
        src_d.assign(n_delta + 1, 0.0);
        for (int j = 1; j <= n_delta; ++j) {
            double d = j * h / n_delta;
            quad_d[j] = quadratic_term(u.frames[frame], d, true);
            src_d[j] = source_term(u.frames[frame], eta.frames[frame], d, true);
        }
    };

    std::vector<double> cubic(nf), source(nf);
    parallel_for(nf, [&](int i) {
        std::vector<double> qd, sd;
        delta_profile(i, qd, sd);
        CompensatedSum s;
        for (int j = 0; j <= n_delta; ++j) s.add(wd[j] * sd[j]);
        source[i] = s.value();
        cubic[i] = cubic_term(u.frames[i], h, true);
    });

    auto boundary_at = [&](int frame) {
        std::vector<double> qd, sd;
        delta_profile(frame, qd, sd);
        CompensatedSum s;
        for (int j = 0; j <= n_delta; ++j) s.add(wd[j] * qd[j]);
        return s.value();
    };
    double boundary = boundary_at(nf - 1) - boundary_at(0);

    CompensatedSum cub, src;
    for (int i = 0; i < nf; ++i) {
        cub.add(wt[i] * cubic[i]);
        src.add(wt[i] * source[i]);
    }

    IdentityReport rep;
    rep.name = "khm_integrated";
    rep.terms = {{"boundary_term", boundary},
                 {"cubic_term", cub.value()},
                 {"source_term", src.value()}};
    rep.residual_abs = std::abs(boundary + cub.value() - src.value());
    rep.resolution = {u.grid.n, u.dt_rec, 0.0, h / n_delta, nf};
    finalize(rep);
    return rep;
}

double FluxFn::antiderivative(double x) const {
    if (A) return A(x);
    if (!a) throw std::invalid_argument("FluxFn: flux function not set");
    // Composite Simpson from 0; the flux is smooth and the range is O(|u|).
    const int n = 128;
    double hstep = x / n;
    CompensatedSum s;
    s.add(a(0.0));
    s.add(a(x));
    for (int j = 1; j < n; ++j) s.add(((j % 2) ? 4.0 : 2.0) * a(j * hstep));
    return s.value() * hstep / 3.0;
}

double conservation_flux_bracket(const RealField& u, const FluxFn& flux, double h) {
    RealField uf = refine_samples(u, kQuadOversample);
    RealField uh = shift(uf, h);
    CompensatedSum s;
    for (int j = 0; j < uf.grid.n; ++j) {
        double a0 = uf.samples[j], b0 = uh.samples[j];
        s.add(std::abs(b0 - a0) * (flux.a(a0) + flux.a(b0)) -
              2.0 * std::abs(flux.antiderivative(b0) - flux.antiderivative(a0)));
    }
    return s.value() * uf.grid.dx();
}

IdentityReport conservation_khm_residual(const Trajectory& u, const Trajectory& eta,
                                         const FluxFn& flux, double h, double delta_h) {
    check_khm_inputs(u, eta, "conservation_khm_residual");
    if (!flux.a) throw std::invalid_argument("conservation_khm_residual: flux function not set");
    if (delta_h <= 0.0) delta_h = 1e-4 * u.grid.length;
    const int nf = static_cast<int>(u.size());
    const double dt = u.dt_rec;

    std::vector<double> quad(nf), t1(nf - 2), t2(nf - 2), t3(nf - 2);
    parallel_for(nf, [&](int i) { quad[i] = quadratic_term(u.frames[i], h, true); });
    parallel_for(nf - 2, [&](int k) {
        int i = k + 1;
        t1[k] = (quad[i + 1] - quad[i - 1]) / (2.0 * dt);
        t2[k] = (conservation_flux_bracket(u.frames[i], flux, h + delta_h) -
                 conservation_flux_bracket(u.frames[i], flux, h - delta_h)) /
                (2.0 * delta_h);
        t3[k] = source_term(u.frames[i], eta.frames[i], h, true);
    });

    IdentityReport rep;
    rep.name = "khm_conservation";
    int worst = 0;
    for (int k = 0; k < nf - 2; ++k) {
        double r = std::abs(t1[k] + t2[k] - t3[k]);
        if (r >= rep.residual_abs) {
            rep.residual_abs = r;
            worst = k;
        }
    }
    rep.terms = {{"time_term", t1[worst]}, {"flux_term", t2[worst]}, {"source_term", t3[worst]}};
    rep.resolution = {u.grid.n, dt, 0.0, delta_h, nf};
    finalize(rep);
    return rep;
}

void InteractionFields::validate() const {
    const Trajectory* all[] = {&a, &b, &c, &d, &e, &f};
    for (const Trajectory* t : all) {
        require_same_grid(a.grid, t->grid, "InteractionFields");
        if (t->size() != a.size())
            throw std::invalid_argument("InteractionFields: frame counts differ");
    }
    if (a.size() < 2) throw std::invalid_argument("InteractionFields: need at least 2 frames");
    double scale = 0.0;
    for (const auto& fr : a.frames) scale = std::max(scale, fr.max_abs());
    for (const auto& fr : d.frames) scale = std::max(scale, fr.max_abs());
    double tol = 1e-10 * std::max(1.0, scale);
    for (int i = 0; i < static_cast<int>(a.size()); ++i) {
        if (std::abs(mean(a.frames[i])) > tol || std::abs(mean(d.frames[i])) > tol)
            throw std::domain_error("InteractionFields: A and D must have zero spatial mean");
    }
}

namespace {

// int_0^x g(y) dy for zero-mean g, via the spectral antiderivative
// (multiplier 1/(i xi), Nyquist dropped) anchored at x = 0.
RealField cumulative_from_zero(const RealField& g) {
    SpectralField gh = fft_forward(g);
    const int nyq = g.grid.n / 2;
    gh.modes[0] = 0.0;
    for (int k = 1; k < g.grid.num_modes(); ++k) {
        if (k == nyq) {
            gh.modes[k] = 0.0;
            continue;
        }
        gh.modes[k] /= std::complex<double>(0.0, g.grid.wavenumber(k));
    }
    RealField p = fft_inverse(gh);
    double p0 = p.samples[0];
    for (double& v : p.samples) v -= p0;
    return p;
}

double x_inner(const RealField& f, const RealField& g) {
    CompensatedSum s;
    for (int j = 0; j < f.grid.n; ++j) s.add(f.samples[j] * g.samples[j]);
    return s.value() * f.grid.dx();
}

}  // namespace

IdentityReport interaction_identity_residual(const InteractionFields& fields) {
    fields.validate();
    const int nf = static_cast<int>(fields.a.size());
    std::vector<double> wt = time_weights(nf, fields.a.dt_rec);

    std::vector<double> lhs_t(nf), term1_t(nf), term2_t(nf), bracket_t(nf);
    parallel_for(nf, [&](int i) {
        const RealField& A = fields.a.frames[i];
        const RealField& B = fields.b.frames[i];
        const RealField& C = fields.c.frames[i];
        const RealField& D = fields.d.frames[i];
        const RealField& E = fields.e.frames[i];
        const RealField& F = fields.f.frames[i];
        CompensatedSum l;
        for (int j = 0; j < A.grid.n; ++j)
            l.add(A.samples[j] * E.samples[j] - B.samples[j] * D.samples[j]);
        lhs_t[i] = l.value() * A.grid.dx();
        RealField cumF = cumulative_from_zero(F);
        RealField cumD = cumulative_from_zero(D);
        term1_t[i] = x_inner(A, cumF);
        term2_t[i] = x_inner(C, cumD);
        bracket_t[i] = x_inner(A, cumD);
    });

    CompensatedSum lhs, t1, t2;
    for (int i = 0; i < nf; ++i) {
        lhs.add(wt[i] * lhs_t[i]);
        t1.add(wt[i] * term1_t[i]);
        t2.add(wt[i] * term2_t[i]);
    }
    double bracket = bracket_t[nf - 1] - bracket_t[0];

    IdentityReport rep;
    rep.name = "interaction";
    rep.terms = {{"lhs", lhs.value()},
                 {"cumulative_f_term", t1.value()},
                 {"cumulative_d_term", t2.value()},
                 {"bracket_term", -bracket}};
    rep.residual_abs = std::abs(lhs.value() - (t1.value() + t2.value() - bracket));
    rep.resolution = {fields.a.grid.n, fields.a.dt_rec, 0.0, 0.0, nf};
    finalize(rep);
    return rep;
}

KineticProfile kinetic_profile(const RealField& u, double dv) {
    double lo = *std::min_element(u.samples.begin(), u.samples.end());
    double hi = *std::max_element(u.samples.begin(), u.samples.end());
    KineticProfile p;
    p.grid = u.grid;
    if (hi - lo < 1e-300) {
        // Degenerate range: three cells centered on the constant value.
        p.dv = (dv > 0.0) ? dv : 1.0;
        p.v_min = lo - 1.5 * p.dv;
        p.nv = 3;
    } else {
        if (!(dv > 0.0)) throw std::invalid_argument("kinetic_profile: dv must be > 0");
        if (dv > (hi - lo) / 64.0)
            throw std::invalid_argument("kinetic_profile: dv must be <= range/64");
        p.dv = dv;
        p.v_min = lo - 3.0 * dv;
        p.nv = static_cast<int>(std::ceil((hi + 3.0 * dv - p.v_min) / dv)) + 1;
    }
    p.levels.resize(u.grid.n);
    for (int j = 0; j < u.grid.n; ++j) {
        // count of midpoint nodes v_i = v_min + (i + 1/2) dv with v_i <= u_j
        int c = static_cast<int>(std::floor((u.samples[j] - p.v_min) / p.dv + 0.5));
        p.levels[j] = std::clamp(c, 0, p.nv);
    }
    return p;
}

std::vector<KineticProfile> kinetic_profile_series(const Trajectory& traj, double dv) {
    if (traj.size() == 0) throw std::invalid_argument("kinetic_profile_series: empty trajectory");
    double lo = 1e300, hi = -1e300;
    for (const auto& f : traj.frames) {
        lo = std::min(lo, *std::min_element(f.samples.begin(), f.samples.end()));
        hi = std::max(hi, *std::max_element(f.samples.begin(), f.samples.end()));
    }
    if (hi - lo < 1e-300) {
        std::vector<KineticProfile> out;
        for (const auto& f : traj.frames) out.push_back(kinetic_profile(f, dv));
        return out;
    }
    if (!(dv > 0.0)) throw std::invalid_argument("kinetic_profile_series: dv must be > 0");
    KineticProfile proto;
    proto.grid = traj.grid;
    proto.dv = dv;
    proto.v_min = lo - 3.0 * dv;
    proto.nv = static_cast<int>(std::ceil((hi + 3.0 * dv - proto.v_min) / dv)) + 1;
    proto.levels.resize(traj.grid.n);
    std::vector<KineticProfile> out(traj.size(), proto);
    for (int i = 0; i < traj.size(); ++i) {
        for (int j = 0; j < traj.grid.n; ++j) {
            int c = static_cast<int>(
                std::floor((traj.frames[i].samples[j] - proto.v_min) / dv + 0.5));
            out[i].levels[j] = std::clamp(c, 0, proto.nv);
        }
    }
    return out;
}

namespace {

struct BumpFn {
    double center, width;  // support (center - width, center + width)
    double value(double v) const {
        double s = (v - center) / width;
        if (std::abs(s) >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - s * s));
    }
    double deriv(double v) const {
        double s = (v - center) / width;
        if (std::abs(s) >= 1.0) return 0.0;
        double d = 1.0 - s * s;
        return value(v) * (-2.0 * s / (d * d)) / width;
    }
};

}  // namespace

double kinetic_residual(const std::vector<KineticProfile>& profiles, const Trajectory& eta) {
    if (profiles.size() < 3)
        throw std::invalid_argument("kinetic_residual: need at least 3 frames");
    if (static_cast<int>(profiles.size()) != eta.size())
        throw std::invalid_argument("kinetic_residual: frame counts differ");
    const KineticProfile& p0 = profiles.front();
    require_same_grid(p0.grid, eta.grid, "kinetic_residual");
    for (const auto& p : profiles)
        if (p.nv != p0.nv || p.dv != p0.dv || p.v_min != p0.v_min)
            throw std::invalid_argument("kinetic_residual: profiles must share one v-grid");

    const GridSpec grid = p0.grid;
    const double L = grid.length;
    const double dt = eta.dt_rec;
    const int nf = static_cast<int>(profiles.size());

    double span = p0.nv * p0.dv;
    std::vector<BumpFn> bumps = {{p0.v_min + 0.30 * span, 0.22 * span},
                                 {p0.v_min + 0.50 * span, 0.30 * span},
                                 {p0.v_min + 0.70 * span, 0.22 * span}};
    struct XMode {
        int k;
        bool sine;
    };
    std::vector<XMode> xmodes = {{0, false}, {1, false}, {1, true}, {2, false}, {2, true}};

    // Precompute the v-moments per (frame, x): for each bump, sums of
    // psi(v_i), v_i psi(v_i), psi'(v_i) over the occupied cells i < level.
    const int nb = static_cast<int>(bumps.size());
    std::vector<double> psi_cum((nb * 3) * (p0.nv + 1));
    for (int b = 0; b < nb; ++b) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        psi_cum[(b * 3 + 0) * (p0.nv + 1)] = 0.0;
        psi_cum[(b * 3 + 1) * (p0.nv + 1)] = 0.0;
        psi_cum[(b * 3 + 2) * (p0.nv + 1)] = 0.0;
        for (int i = 0; i < p0.nv; ++i) {
            double v = p0.v_node(i);
            s0 += bumps[b].value(v) * p0.dv;
            s1 += v * bumps[b].value(v) * p0.dv;
            s2 += bumps[b].deriv(v) * p0.dv;
            psi_cum[(b * 3 + 0) * (p0.nv + 1) + i + 1] = s0;
            psi_cum[(b * 3 + 1) * (p0.nv + 1) + i + 1] = s1;
            psi_cum[(b * 3 + 2) * (p0.nv + 1) + i + 1] = s2;
        }
    }
    auto moment = [&](int b, int which, int level) {
        return psi_cum[(b * 3 + which) * (p0.nv + 1) + level];
    };

    double worst = 0.0;
    for (const auto& xm : xmodes) {
        double xi = 2.0 * M_PI * xm.k / L;
        auto cfun = [&](double x) { return xm.sine ? std::sin(xi * x) : std::cos(xi * x); };
        auto cder = [&](double x) {
            return xm.sine ? xi * std::cos(xi * x) : -xi * std::sin(xi * x);
        };
        for (int b = 0; b < nb; ++b) {
            std::vector<double> sphi(nf), xv(nf), seta(nf);
            for (int i = 0; i < nf; ++i) {
                CompensatedSum a0, a1, a2;
                for (int j = 0; j < grid.n; ++j) {
                    int lev = profiles[i].levels[j];
                    double x = grid.point(j);
                    a0.add(moment(b, 0, lev) * cfun(x));
                    a1.add(moment(b, 1, lev) * cder(x));
                    a2.add(moment(b, 2, lev) * eta.frames[i].samples[j] * cfun(x));
                }
                sphi[i] = a0.value() * grid.dx();
                xv[i] = a1.value() * grid.dx();
                seta[i] = a2.value() * grid.dx();
            }
            for (int i = 1; i < nf - 1; ++i) {
                double r = (sphi[i + 1] - sphi[i - 1]) / (2.0 * dt) - xv[i] - seta[i];
                worst = std::max(worst, std::abs(r));
            }
        }
    }
    return worst;
}

std::pair<double, double> cube_identity(double u, double ubar, double dv) {
    double lhs = std::abs(u - ubar);
    lhs = lhs * lhs * lhs / 6.0;
    double lo = std::min(u, ubar), hi = std::max(u, ubar);
    if (!(dv > 0.0)) throw std::invalid_argument("cube_identity: dv must be > 0");
    int m = static_cast<int>(std::floor((hi - lo) / dv + 0.5));
    // midpoint cells: (M_u - M_ubar) is the indicator of (lo, hi), sign^2 = 1;
    // sum over ordered node pairs of (v_i - v_j) dv^2 has the closed form
    // dv^3 (m^3 - m)/6 since v_i - v_j = (i - j) dv exactly.
    double md = static_cast<double>(m);
    double rhs = dv * dv * dv * (md * md * md - md) / 6.0;
    return {lhs, rhs};
}

namespace {

// int_0^T int_0^L int_0^h D^Delta eta |D^Delta u| dDelta dx dt.
double source_triple_integral(const Trajectory& u, const Trajectory& eta, double h, int n_delta) {
    std::vector<double> wt = time_weights(static_cast<int>(u.size()), u.dt_rec);
    std::vector<double> wd = time_weights(n_delta + 1, h / n_delta);
    const int nf = static_cast<int>(u.size());
    std::vector<double> per_frame(nf);
    parallel_for(nf, [&](int i) {
        CompensatedSum s;
        for (int j = 1; j <= n_delta; ++j)
            s.add(wd[j] * source_term(u.frames[i], eta.frames[i], j * h / n_delta, true));
        per_frame[i] = s.value();
    });
    CompensatedSum total;
    for (int i = 0; i < nf; ++i) total.add(wt[i] * per_frame[i]);
    return total.value();
}

double q_lattice(const Trajectory& u, double h, double dv) {
    // Common v-grid across the plain and shifted trajectories.
    Trajectory shifted(u.grid, u.t0, u.dt_rec);
    for (const auto& f : u.frames) shifted.push(shift(f, h));
    double lo = 1e300, hi = -1e300;
    for (const Trajectory* t : {&u, static_cast<const Trajectory*>(&shifted)}) {
        for (const auto& f : t->frames) {
            lo = std::min(lo, *std::min_element(f.samples.begin(), f.samples.end()));
            hi = std::max(hi, *std::max_element(f.samples.begin(), f.samples.end()));
        }
    }
    double v_min = lo - 3.0 * dv;
    std::vector<double> wt = time_weights(static_cast<int>(u.size()), u.dt_rec);
    const int nf = static_cast<int>(u.size());
    std::vector<double> per_frame(nf);
    parallel_for(nf, [&](int i) {
        CompensatedSum s;
        for (int j = 0; j < u.grid.n; ++j) {
            int ca = static_cast<int>(std::floor((u.frames[i].samples[j] - v_min) / dv + 0.5));
            int cb =
                static_cast<int>(std::floor((shifted.frames[i].samples[j] - v_min) / dv + 0.5));
            double m = std::abs(cb - ca);
            s.add(dv * dv * dv * (m * m * m - m) / 6.0);
        }
        per_frame[i] = s.value() * u.grid.dx();
    });
    CompensatedSum total;
    for (int i = 0; i < nf; ++i) total.add(wt[i] * per_frame[i]);
    return total.value();
}

}  // namespace

QDecomposition q_decomposition(const Trajectory& u, const Trajectory& eta, double h, double dv,
                               int n_delta) {
    check_khm_inputs(u, eta, "q_decomposition");
    if (!(dv > 0.0)) throw std::invalid_argument("q_decomposition: dv must be > 0");
    if (n_delta < 2 || n_delta % 2) n_delta = std::max(2, n_delta + (n_delta % 2));

    QDecomposition out;
    out.q = q_lattice(u, h, dv);
    out.q12 = source_triple_integral(u, eta, h, n_delta);

    std::vector<double> wd = time_weights(n_delta + 1, h / n_delta);
    auto boundary_at = [&](int frame) {
        CompensatedSum s;
        for (int j = 1; j <= n_delta; ++j)
            s.add(wd[j] * quadratic_term(u.frames[frame], j * h / n_delta, true));
        return s.value();
    };
    out.q3 = -(boundary_at(static_cast<int>(u.size()) - 1) - boundary_at(0));

    std::vector<double> wt = time_weights(static_cast<int>(u.size()), u.dt_rec);
    CompensatedSum cube;
    for (int i = 0; i < u.size(); ++i)
        cube.add(wt[i] * cubic_term(u.frames[i], h, true));

    out.residual_abs = std::abs(out.q - (out.q12 + out.q3));
    double scale = std::max({std::abs(out.q), std::abs(out.q12), std::abs(out.q3)});
    out.residual_rel = (scale > 0.0) ? out.residual_abs / scale : out.residual_abs;
    double cscale = std::max(std::abs(out.q), std::abs(cube.value()));
    out.cube_rel = (cscale > 0.0) ? std::abs(out.q - cube.value()) / cscale
                                  : std::abs(out.q - cube.value());

    // Refinement flag: the lattice error must not grow when dv is halved
    // backwards (coarsened); compare against the 2 dv evaluation.
    double q_coarse = q_lattice(u, h, 2.0 * dv);
    double coarse_rel = (cscale > 0.0) ? std::abs(q_coarse - cube.value()) / cscale
                                       : std::abs(q_coarse - cube.value());
    out.resolved = out.cube_rel <= coarse_rel * 1.1 + 1e-12;
    return out;
}

IdentityReport energy_balance_residual(const Trajectory& traj) {
    if (traj.size() < 3)
        throw std::invalid_argument("energy_balance_residual: need at least 3 frames");
    const int nf = static_cast<int>(traj.size());
    const double dt = traj.dt_rec;

    std::vector<double> energy(nf), rhs(nf), uxx2(nf);
    parallel_for(nf, [&](int i) {
        const RealField& u = traj.frames[i];
        energy[i] = integrate_x(u, [](double x) { return x * x; });
        RealField ux = derivative(u, 1);
        RealField uxx = derivative(u, 2);
        double e1 = integrate_x(ux, [](double x) { return x * x; });
        double e2 = integrate_x(uxx, [](double x) { return x * x; });
        uxx2[i] = e2;
        rhs[i] = 2.0 * e1 - 2.0 * e2;
    });

    double worst = 0.0, scale = 0.0;
    double worst_dedt = 0.0, worst_rhs = 0.0;
    for (int i = 1; i < nf - 1; ++i) {
        double dedt = (energy[i + 1] - energy[i - 1]) / (2.0 * dt);
        double r = std::abs(dedt - rhs[i]);
        scale = std::max({scale, std::abs(dedt), std::abs(rhs[i])});
        if (r >= worst) {
            worst = r;
            worst_dedt = dedt;
            worst_rhs = rhs[i];
        }
    }

    IdentityReport rep;
    rep.name = "energy_balance";
    rep.terms = {{"dE_dt", worst_dedt}, {"production_minus_dissipation", worst_rhs}};
    rep.residual_abs = worst;
    rep.residual_rel = (scale > 0.0) ? worst / scale : worst;
    rep.resolution = {traj.grid.n, dt, 0.0, 0.0, nf};

    // Unit-window constants E(t+s) <= c E(t) and
    // int_t^{t+1} int u_xx^2 + sup_[t,t+1] E <= c E(t).
    int w = static_cast<int>(std::lround(1.0 / dt));
    if (w >= 1 && nf > w) {
        double c1 = 0.0, c2 = 0.0;
        std::vector<double> pre(nf + 1, 0.0);
        for (int i = 0; i < nf; ++i) pre[i + 1] = pre[i] + uxx2[i];
        for (int i = 0; i + w < nf; ++i) {
            if (energy[i] <= 0.0) continue;
            double sup = 0.0;
            for (int j = 0; j <= w; ++j) sup = std::max(sup, energy[i + j]);
            // trapezoid over the window
            double diss = (pre[i + w + 1] - pre[i] - 0.5 * (uxx2[i] + uxx2[i + w])) * dt;
            c1 = std::max(c1, sup / energy[i]);
            c2 = std::max(c2, (diss + sup) / energy[i]);
        }
        rep.terms.emplace_back("energstim1_c", c1);
        rep.terms.emplace_back("energstim2_c", c2);
    }
    return rep;
}

}  // namespace ksb
