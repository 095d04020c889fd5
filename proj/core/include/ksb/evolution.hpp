#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ksb/field.hpp"

namespace ksb {

/// Raised when max|u| exceeds the blow-up threshold during integration.
struct DivergenceError : std::runtime_error {
    double time;
    explicit DivergenceError(double t)
        : std::runtime_error("solution diverged at t = " + std::to_string(t)), time(t) {}
};

enum class EquationKind { KuramotoSivashinsky, CapillaryBurgers, ForcedBurgers };

using ForcingFn = std::function<RealField(double)>;

/// One of the three equation families:
///   KS:               du/dt + u u_x + u_xx + u_xxxx = 0
///   CapillaryBurgers: du/dt + u u_x + u_xxxx = |dx| g
///   ForcedBurgers:    du/dt + u u_x = eps u_xx + |dx| g + |dx| xi
struct EquationSpec {
    EquationKind kind = EquationKind::KuramotoSivashinsky;
    double viscosity = 0.0;  // ForcedBurgers only
    ForcingFn forcing_g;     // CapillaryBurgers, ForcedBurgers
    ForcingFn forcing_xi;    // ForcedBurgers only

    static EquationSpec ks() { return {EquationKind::KuramotoSivashinsky, 0.0, {}, {}}; }
    static EquationSpec capillary_burgers(ForcingFn g) {
        return {EquationKind::CapillaryBurgers, 0.0, std::move(g), {}};
    }
    static EquationSpec forced_burgers(double eps, ForcingFn g = {}, ForcingFn xi = {}) {
        if (eps < 0.0) throw std::invalid_argument("EquationSpec: viscosity must be >= 0");
        return {EquationKind::ForcedBurgers, eps, std::move(g), std::move(xi)};
    }
};

enum class Scheme { ETDRK4, IMEX };

struct StepperConfig {
    Scheme scheme = Scheme::ETDRK4;
    double dt = 0.0;
    bool dealias = true;  // 2/3-rule truncation on the quadratic product
    int record_every = 1;
    bool keep_mean = false;  // retain a nonzero mean (Galilean checks)

    StepperConfig(Scheme s, double dt_, int rec = 1) : scheme(s), dt(dt_), record_every(rec) {
        if (dt <= 0.0) throw std::invalid_argument("StepperConfig: dt must be > 0");
        if (record_every < 1) throw std::invalid_argument("StepperConfig: record_every must be >= 1");
    }
};

struct RunResult {
    Trajectory trajectory;
    std::vector<double> energy_series;  // per-frame int u^2 dx
    double nyquist_max = 0.0;           // max |u_hat| over the top 1/8 of modes
    std::vector<std::string> warnings;
};

/// Per-mode linear growth rates: KS xi^2 - xi^4, capillary -xi^4,
/// forced Burgers -eps xi^2.
std::vector<double> linear_symbol(const EquationSpec& spec, const GridSpec& grid);

RunResult integrate(const EquationSpec& spec, const RealField& u0, const StepperConfig& cfg,
                    double t_end);

/// Forcing eta(t) = du*/dt + u* du*/dx (+ d^4 u*/dx^4 for capillary) so that
/// u* solves the equation exactly. u_star/du_star_dt evaluate the closed form.
ForcingFn manufactured_forcing(const std::function<RealField(double)>& u_star,
                               const std::function<RealField(double)>& du_star_dt,
                               EquationKind kind);

std::vector<RunResult> vanishing_viscosity_run(const RealField& u0,
                                               const std::vector<double>& eps_list,
                                               const StepperConfig& cfg, double t_end);

/// Seeded band-limited noise: random phases on modes 1..N/8 with amplitude
/// 0.1 |n|^{-1}, zero mean.
RealField random_initial_condition(const GridSpec& grid, unsigned long long seed);

}  // namespace ksb
