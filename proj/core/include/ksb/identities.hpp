#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ksb/field.hpp"

namespace ksb {

/// Indicator profile f(x_j, v_i) = 1 iff v_i <= u(x_j), stored as per-x level
/// counts on a uniform v-grid spanning [min u - 3 dv, max u + 3 dv].
struct KineticProfile {
    GridSpec grid;
    double v_min = 0.0;
    double dv = 0.0;
    int nv = 0;
    std::vector<int> levels;  // levels[j] = #{ i : v_i <= u(x_j) }

    double v_node(int i) const { return v_min + (i + 0.5) * dv; }
    bool f(int j, int i) const { return i < levels[j]; }
    /// v_min + dv * levels[j]; reconstructs u(x_j) to O(dv).
    double reconstruct(int j) const { return v_min + dv * levels[j]; }
};

KineticProfile kinetic_profile(const RealField& u, double dv);

/// Per-frame profiles on one common v-grid (required for time differences).
std::vector<KineticProfile> kinetic_profile_series(const Trajectory& traj, double dv);

/// Two balance laws dA/dt + dB/dx = C, dD/dt + dE/dx = F on one grid;
/// A and D must have zero spatial mean.
struct InteractionFields {
    Trajectory a, b, c, d, e, f;

    void validate() const;  // grids agree, means of a/d zero to 1e-10
};

struct IdentityReport {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
    double residual_abs = 0.0;
    double residual_rel = 0.0;  // residual_abs over the largest term magnitude
    struct Resolution {
        int n = 0;
        double dt = 0.0;
        double dv = 0.0;
        double delta_h = 0.0;
        int frames = 0;
    } resolution;

    double term(const std::string& key) const;
};

/// d/dt (1/2 int |D^h u| D^h u) + d/dh (1/6) int |D^h u|^3 = int D^h eta |D^h u|.
/// Time derivative by centered frame differences, h-derivative by centered
/// delta_h (default 1e-4 * L); residual maximized over interior frames.
IdentityReport khm_modified_residual(const Trajectory& u, const Trajectory& eta, double h,
                                     double delta_h = 0.0);

/// Signed variant: (D^h u)^2 and (D^h u)^3 in place of the modulus forms.
IdentityReport khm_signed_residual(const Trajectory& u, const Trajectory& eta, double h,
                                   double delta_h = 0.0);

/// Max-norm of the pointwise flux identity
///   1/2 d/dt(|D^h u|D^h u) + 1/6 d/dh |D^h u|^3
///     + 1/2 d/dx(u |D^h u| D^h u + 1/3 |D^h u|^3) - D^h eta |D^h u|
/// with d/dt from the frame pair (u at t -+ dt) and spatial terms on the
/// midpoint average.
double khm_pointwise_residual(const RealField& u_minus, const RealField& u_plus,
                              const RealField& eta_center, double dt, double h,
                              double delta_h = 0.0);

/// Integrated form over [0, T] x [0, h]:
///   [1/2 int_0^h int |D^D u| D^D u]_0^T + 1/6 int_0^T int |D^h u|^3
///     = int_0^T int int_0^h D^D eta |D^D u|.
IdentityReport khm_integrated_residual(const Trajectory& u, const Trajectory& eta, double h,
                                       int n_delta = 64);

/// Flux a with antiderivative A; when A is absent it is computed by
/// quadrature of a from 0.
struct FluxFn {
    std::function<double(double)> a;
    std::function<double(double)> A;  // optional closed form

    double antiderivative(double x) const;
};

/// Conservation-law generalization for du/dt + d/dx a(u) = eta:
///   d/dt (1/2 int |D^h u| D^h u)
///     + d/dh int |D^h u| (a(u) + a(u^h)) - 2 |A(u^h) - A(u)| = int D^h eta |D^h u|.
IdentityReport conservation_khm_residual(const Trajectory& u, const Trajectory& eta,
                                         const FluxFn& flux, double h, double delta_h = 0.0);

/// int |D^h u|(a(u) + a(u^h)) - 2|A(u^h) - A(u)| dx on one frame; for
/// a(u) = u^2/2 this equals int |D^h u|^3 / 6 exactly.
double conservation_flux_bracket(const RealField& u, const FluxFn& flux, double h);

/// int int (AE - BD) = int int A (int_0^x F) + int int C (int_0^x D)
///   - [int_0^L int_0^x A(t,x) D(t,y) dy dx]_0^T.
IdentityReport interaction_identity_residual(const InteractionFields& fields);

/// Weak residual of df/dt + v df/dx = -df/dv eta against smooth bump(v) x
/// trigonometric(x) test functions; max over the test set and interior frames.
double kinetic_residual(const std::vector<KineticProfile>& profiles, const Trajectory& eta);

/// lhs = |u - ubar|^3 / 6 exactly; rhs by midpoint quadrature of
/// int int 1_{v > w} (v - w) (M_u - M_ubar)(v) (M_u - M_ubar)(w) dv dw.
std::pair<double, double> cube_identity(double u, double ubar, double dv);

struct QDecomposition {
    double q = 0.0;        // direct v-lattice quadrature
    double q12 = 0.0;      // int int int D^D eta |D^D u|
    double q3 = 0.0;       // -[1/2 int_0^h int |D^D u| D^D u]_0^T
    double residual_abs = 0.0;
    double residual_rel = 0.0;
    double cube_rel = 0.0;  // |q - (1/6) int int |D^h u|^3| relative
    bool resolved = true;
};

QDecomposition q_decomposition(const Trajectory& u, const Trajectory& eta, double h, double dv,
                               int n_delta = 64);

/// d/dt int u^2 = 2 int u_x^2 - 2 int u_xx^2 per interior frame, plus the
/// measured unit-window constants: terms "energstim1_c" = max of
/// E(t+s)/E(t) over s in [0,1] and "energstim2_c" = max of
/// (int_t^{t+1} int u_xx^2 + sup_{[t,t+1]} E) / E(t).
IdentityReport energy_balance_residual(const Trajectory& traj);

}  // namespace ksb
