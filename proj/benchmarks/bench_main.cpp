// Microbenchmarks for the hot paths: transforms, one integrator step, the
// structure-function table behind the finite-difference norms, and the two
// heavyweight identity evaluations.

#include <benchmark/benchmark.h>

#include <cmath>

#include "ksb/besov.hpp"
#include "ksb/evolution.hpp"
#include "ksb/identities.hpp"
#include "ksb/spectral.hpp"

using namespace ksb;

namespace {

GridSpec grid_of(int n) { return GridSpec(100.0, n); }

RealField noise(const GridSpec& g, unsigned long long seed = 1) {
    return random_initial_condition(g, seed);
}

Trajectory short_run(int n, int frames) {
    GridSpec g = grid_of(n);
    StepperConfig cfg(Scheme::ETDRK4, 0.05, 10);  // dt_rec = 0.5
    RunResult r = integrate(EquationSpec::ks(), noise(g), cfg, 0.5 * frames);
    return r.trajectory;
}

void bm_fft_round_trip(benchmark::State& state) {
    RealField u = noise(grid_of(static_cast<int>(state.range(0))));
    for (auto _ : state) {
        RealField back = fft_inverse(fft_forward(u));
        benchmark::DoNotOptimize(back.samples.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_fft_round_trip)->Arg(256)->Arg(1024)->Arg(4096);

void bm_finite_diff(benchmark::State& state) {
    RealField u = noise(grid_of(static_cast<int>(state.range(0))));
    for (auto _ : state) {
        RealField d = finite_diff(u, 1.7);
        benchmark::DoNotOptimize(d.samples.data());
    }
}
BENCHMARK(bm_finite_diff)->Arg(256)->Arg(1024);

// largest step the stiffness guard allows at this resolution, rounded down
double dt_for(const GridSpec& g) {
    double xi_max = M_PI * g.n / g.length;
    return std::min(0.05, 400.0 / std::pow(xi_max, 4));
}

void bm_etdrk4_step(benchmark::State& state) {
    GridSpec g = grid_of(static_cast<int>(state.range(0)));
    RealField u = noise(g);
    double dt = dt_for(g);
    StepperConfig cfg(Scheme::ETDRK4, dt);
    for (auto _ : state) {
        RunResult r = integrate(EquationSpec::ks(), u, cfg, dt);
        benchmark::DoNotOptimize(r.trajectory.frames.back().samples.data());
    }
}
BENCHMARK(bm_etdrk4_step)->Arg(256)->Arg(1024);

void bm_imex_step(benchmark::State& state) {
    GridSpec g = grid_of(static_cast<int>(state.range(0)));
    RealField u = noise(g);
    double dt = dt_for(g);
    StepperConfig cfg(Scheme::IMEX, dt);
    for (auto _ : state) {
        RunResult r = integrate(EquationSpec::ks(), u, cfg, dt);
        benchmark::DoNotOptimize(r.trajectory.frames.back().samples.data());
    }
}
BENCHMARK(bm_imex_step)->Arg(256)->Arg(1024);

void bm_structure_table(benchmark::State& state) {
    Trajectory traj = short_run(256, static_cast<int>(state.range(0)));
    HGrid hg = HGrid::make(traj.grid);
    for (auto _ : state) {
        auto table = structure_table(traj, 3.0, hg.offsets);
        benchmark::DoNotOptimize(table.data());
    }
    state.SetItemsProcessed(state.iterations() * traj.size() * hg.size());
}
BENCHMARK(bm_structure_table)->Arg(8)->Arg(64);

void bm_besov_norm_fd(benchmark::State& state) {
    Trajectory traj = short_run(256, 16);
    HGrid hg = HGrid::make(traj.grid);
    BesovParams bp(1.0 / 3.0, 3.0, kInf);
    for (auto _ : state) {
        NormEstimate est = besov_norm_fd(traj, bp, hg);
        benchmark::DoNotOptimize(est.value);
    }
}
BENCHMARK(bm_besov_norm_fd);

void bm_besov_norm_lp(benchmark::State& state) {
    Trajectory traj = short_run(256, 16);
    LPFamily fam = LPFamily::make(traj.grid);
    BesovParams bp(2.0, 2.0, 2.0);
    for (auto _ : state) {
        NormEstimate est = besov_norm_lp(traj, bp, fam);
        benchmark::DoNotOptimize(est.value);
    }
}
BENCHMARK(bm_besov_norm_lp);

void bm_khm_modified(benchmark::State& state) {
    GridSpec g(10.0, 256);
    Trajectory u(g, 0.3, 1e-3), eta(g, 0.3, 1e-3);
    double k = 2.0 * M_PI / g.length;
    for (int i = 0; i < 5; ++i) {
        double t = 0.3 + i * 1e-3;
        RealField uf(g), ef(g);
        for (int j = 0; j < g.n; ++j) {
            double x = g.point(j);
            uf.samples[j] = 0.1 * std::sin(k * x) * std::cos(t);
            ef.samples[j] = -0.1 * std::sin(k * x) * std::sin(t) +
                            0.01 * k * std::sin(k * x) * std::cos(k * x) * std::cos(t) *
                                std::cos(t);
        }
        u.push(uf);
        eta.push(ef);
    }
    for (auto _ : state) {
        IdentityReport rep = khm_modified_residual(u, eta, 10.0 / 7.0);
        benchmark::DoNotOptimize(rep.residual_rel);
    }
}
BENCHMARK(bm_khm_modified);

void bm_energy_balance(benchmark::State& state) {
    Trajectory traj = short_run(256, 32);
    for (auto _ : state) {
        IdentityReport rep = energy_balance_residual(traj);
        benchmark::DoNotOptimize(rep.residual_rel);
    }
}
BENCHMARK(bm_energy_balance);

void bm_duality_pairing(benchmark::State& state) {
    GridSpec g(10.0, 128);
    RealField c(g);
    for (int j = 0; j < g.n; ++j)
        c.samples[j] = std::cos(2.0 * M_PI * g.point(j) / g.length);
    HGrid hg = HGrid::make(g, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        DualityPairing p = duality_pairing(c, c, hg);
        benchmark::DoNotOptimize(p.rhs);
    }
}
BENCHMARK(bm_duality_pairing)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
