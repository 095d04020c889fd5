#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ksb/besov.hpp"
#include "ksb/field.hpp"

namespace ksb {

/// Spatial resolution rule: next power of two >= 8 L / pi, i.e. about 2.5
/// points per unit length so the unstable band is resolved identically
/// across L.
int grid_points_for_length(double length);

struct SweepConfig {
    std::vector<double> lengths;
    int seeds_per_length = 4;
    std::uint64_t master_seed = 0;
    double dt = 0.05;
    double t_burn = 200.0;
    double t_avg = 1000.0;
    double dt_rec = 0.5;
    std::string out_path;  // empty = no CSV

    void validate() const;  // every L >= 20, t_avg >= 5 t_burn
};

struct SweepRecord {
    double length = 0.0;
    std::uint64_t seed = 0;
    bool failed = false;
    // rescaled time-space norms
    double b13_inf = 0.0;  // s=1/3, p=3, r=inf (finite differences)
    double b13_3 = 0.0;    // s=1/3, p=3, r=3   (finite differences)
    double b2_22 = 0.0;    // s=2,   p=2, r=2   (dyadic bands)
    double b12_22 = 0.0;   // s=1/2, p=2, r=2   (finite differences)
    double energy_mean = 0.0;
    double energy_std = 0.0;
    double stationarity = 0.0;     // second-half/first-half mean energy
    double r_index_ratio = 0.0;    // b13_3 / (ln^{1/3}(L) b13_inf)
    double lemma_probe = 0.0;      // b2_22 / sqrt(b13_inf * ||g||), g = -|dx|^{-1} u_xx
    double wall_seconds = 0.0;
};

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg);

void write_sweep_csv(const std::vector<SweepRecord>& records, std::ostream& os);

/// Least-squares fit of value = c ln^kappa(L) in (ln ln L, ln value)
/// coordinates; returns (kappa, standard error). Throws std::domain_error
/// with fewer than 3 distinct L.
std::pair<double, double> fit_log_exponent(const std::vector<std::pair<double, double>>& l_value);
std::pair<double, double> fit_log_exponent(const std::vector<SweepRecord>& records);

struct SpectrumReport {
    std::vector<double> xi;     // resolved wavenumbers, mode 1..N/2
    std::vector<double> power;  // (L/T) int |u_hat(xi)|^2 dt
    double plateau_ratio = 0.0;  // max/min of log-binned power over the plateau band
    double plateau_lo = 0.0, plateau_hi = 0.0;
    double tail_rate = 0.0;  // slope of ln(power) vs xi on the dissipative tail
    double tail_r2 = 0.0;
};

SpectrumReport power_spectrum(const Trajectory& traj, double plateau_lo = 0.04,
                              double plateau_hi = 0.4);

void write_spectrum_csv(const SpectrumReport& rep, std::ostream& os);

/// I_3(h)/h vs h, the integrand scan of the main cubic functional.
struct StructureScan {
    std::vector<double> h;
    std::vector<double> value;  // ((LT)^{-1} I_3(h))/h
};
StructureScan structure_scan(const Trajectory& traj, const HGrid& hg);
void write_structure_csv(const StructureScan& scan, std::ostream& os);

/// Snapshot I/O error with the file offset at which parsing failed.
struct SnapshotError : std::runtime_error {
    long long offset;
    SnapshotError(const std::string& msg, long long off)
        : std::runtime_error(msg + " (at byte offset " + std::to_string(off) + ")"),
          offset(off) {}
};

/// Binary snapshot: magic "KSB1", then little-endian u32 version = 1, f64 L,
/// u32 N, f64 t0, f64 dt_rec, u64 frame_count, then per frame f64 time
/// followed by N f64 samples.
void save_trajectory(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory(const std::string& path);

/// Named verification suites (khm | khm-int | interaction | kinetic |
/// q-decomp | energy | duality | interpolation | three-scale); prints one
/// line per check to `human` and returns 0 iff all pass. Optional CSV
/// (check name, measured, tolerance, pass).
int run_verify_suite(const std::string& suite, std::ostream& human, std::ostream* csv = nullptr);

/// All suite names in dispatch order.
const std::vector<std::string>& verify_suite_names();

/// Shortest round-trip decimal for CSV output.
std::string format_double(double v);

}  // namespace ksb
