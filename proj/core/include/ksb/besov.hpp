#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ksb/field.hpp"

namespace ksb {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Exponent triple (s, p, r); p and r may be infinite.
struct BesovParams {
    double s = 0.0;
    double p = 2.0;
    double r = 2.0;

    BesovParams() = default;
    BesovParams(double s_, double p_, double r_) : s(s_), p(p_), r(r_) {
        if (p < 1.0 || r < 1.0) throw std::invalid_argument("BesovParams: p, r must be >= 1");
    }
    /// Hoelder-conjugate triple (1-s, p', r').
    BesovParams dual() const;
};

/// Log-uniform offsets for the dh/h quadratures, h_1 = dx/4 .. h_M = n_periods*L.
struct HGrid {
    std::vector<double> offsets;
    std::vector<double> log_weights;  // trapezoid weights for the measure dh/h

    static HGrid make(const GridSpec& grid, int points_per_decade = 32, int n_periods = 4);
    /// Log-uniform grid on [h_lo, h_hi] (general-purpose building block).
    static HGrid make_range(double h_lo, double h_hi, int points_per_decade);
    int size() const { return static_cast<int>(offsets.size()); }
};

/// Dyadic Littlewood-Paley filter bank; F(phi_k)(xi) = F(phi_0)(2^{-k} xi)
/// with F(phi_0) supported in (1/2, 2) and telescoping to a partition of
/// unity on the resolved nonzero modes.
struct LPFamily {
    GridSpec grid;
    int k_min = 0;
    int k_max = 0;

    static LPFamily make(const GridSpec& grid);
    int num_bands() const { return k_max - k_min + 1; }
    /// Transfer function of band k at wavenumber xi.
    static double transfer(int k, double xi);
};

struct NormEstimate {
    double value = 0.0;
    double h_argmax = 0.0;      // r = infinity only: offset achieving the sup
    double tail_fraction = 0.0; // share of the two outermost h (or k) cells
    bool resolved = true;       // tail_fraction < 0.05

    /// Throws if the estimate is flagged unresolved.
    double checked() const {
        if (!resolved) throw std::runtime_error("NormEstimate: unresolved quadrature tail");
        return value;
    }
};

std::vector<RealField> lp_decompose(const RealField& u, const LPFamily& fam);

/// Finite-difference characterization || ||D^h u||_Lp / h^s ||_Lr(dh/h).
/// Requires s in (0,1); s = 1 admitted only for p = r = 2. Time-space Lp
/// integrals sum frames times dt_rec.
NormEstimate besov_norm_fd(const Trajectory& traj, const BesovParams& bp, const HGrid& hg);

/// Dyadic-band norm (sum_k 2^{rsk} ||u_k||_Lp^r)^{1/r}; any s >= 0.
NormEstimate besov_norm_lp(const Trajectory& traj, const BesovParams& bp, const LPFamily& fam);

enum class NormMethod { FiniteDifference, LittlewoodPaley };

/// (L T)^{-1/p} times the chosen estimator's value.
double rescaled_norm(const Trajectory& traj, const BesovParams& bp, NormMethod method);

/// Structure-function table I_p(h) = integral integral |D^h u|^p dx dt for
/// every offset in hg; shared by the fd-norm estimators and the h-scans.
std::vector<double> structure_table(const Trajectory& traj, double p, const std::vector<double>& h);

/// Both sides of int phi |dx| g = (1/pi) int_0^inf int D^h phi D^h g dx dh/h^2;
/// lhs spectral, rhs by h-quadrature (periodic fold + analytic small-h tail).
struct DualityPairing {
    double lhs = 0.0;
    double rhs = 0.0;
    double tail_fraction = 0.0;
    bool resolved = true;
};
DualityPairing duality_pairing(const RealField& phi, const RealField& g, const HGrid& hg);

/// Probes int int phi |dx| g <= (1/pi) ||phi||_{B^s_{p,r}} ||g||_{B^{1-s}_{p',r'}}
/// with both sides evaluated on one shared h-quadrature, so Hoelder holds
/// exactly on the discrete sums.
struct BoundReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;  // lhs / rhs (0 when rhs == 0)
    bool holds = false;
};
BoundReport duality_bound_check(const Trajectory& phi, const Trajectory& g, const BesovParams& bp);

/// ||u||_{B^s_{p,r}} <= ||u||^theta_{B^{s1}} ||u||^{1-theta}_{B^{s2}} with the
/// interpolated triple; all three norms via besov_norm_lp on one family.
BoundReport interpolation_check(const Trajectory& traj, const BesovParams& bp1,
                                const BesovParams& bp2, double theta);

/// Measured constant in || |dx|^{-1} d^m/dx^m u ||_{B^s} <= c ||u||_{B^{s+m-1}}.
BoundReport derivative_transfer_check(const RealField& u, int m, const BesovParams& bp,
                                      const LPFamily& fam);

/// Three-scale split of int_0^inf ||D^h u||^3_L3 / h dh/h into
/// A = (0, ell], B = (ell, L], C = (L, inf) (periodic fold).
struct ThreeScaleSplit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    bool resolved = true;
    double total() const { return a + b + c; }
};
ThreeScaleSplit three_scale_split(const Trajectory& traj, double ell, const HGrid& hg);

/// Independent evaluation of the full dh/h^2 integral by direct quadrature
/// over (0, n_periods*L] plus an analytic remainder (reconstruction oracle).
double structure_integral_direct(const Trajectory& traj, int points_per_decade = 48,
                                 int n_periods = 64);

/// sup|u| <= sqrt(2) (int u^2)^{1/4} (int u_x^2)^{1/4} for zero-mean u;
/// returns (lhs, rhs).
std::pair<double, double> agmon_bound(const RealField& u);

/// int u_x^2 <= (int u^2)^{1/2} (int u_xx^2)^{1/2}; returns (lhs, rhs).
std::pair<double, double> fourier_sobolev_bound(const RealField& u);

/// sup_h (I_3(h)/h)^{1/3} scan value used as the B^{1/3}_{3,inf} surrogate;
/// grid max plus golden-section refinement around the argmax.
double sup_structure_ratio(const Trajectory& traj, const HGrid& hg, double* h_argmax = nullptr);

}  // namespace ksb
