#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksb {

struct GridMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Uniform periodic grid on [0, L) with collocation points x_j = j*L/N.
struct GridSpec {
    double length = 0.0;
    int n = 0;

    GridSpec() = default;
    GridSpec(double length_, int n_) : length(length_), n(n_) {
        if (length <= 0.0) throw std::invalid_argument("GridSpec: length must be > 0");
        if (n < 8 || n % 2 != 0) throw std::invalid_argument("GridSpec: N must be even and >= 8");
    }

    double dx() const { return length / n; }
    double point(int j) const { return j * length / n; }
    /// Wavenumber of mode n_mode: xi = 2*pi*n_mode/L.
    double wavenumber(int n_mode) const;
    int num_modes() const { return n / 2 + 1; }

    bool operator==(const GridSpec& o) const { return length == o.length && n == o.n; }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where);

/// Periodic field sampled at the collocation points.
struct RealField {
    GridSpec grid;
    std::vector<double> samples;

    RealField() = default;
    explicit RealField(const GridSpec& g) : grid(g), samples(g.n, 0.0) {}
    RealField(const GridSpec& g, std::vector<double> s) : grid(g), samples(std::move(s)) {
        if (static_cast<int>(samples.size()) != g.n)
            throw std::invalid_argument("RealField: sample count does not match grid");
    }

    double& operator[](int j) { return samples[j]; }
    double operator[](int j) const { return samples[j]; }
    bool all_finite() const;
    double max_abs() const;
};

/// Fourier coefficients under the L^{-1} * integral convention.
/// Stored in half-complex form: modes[k] = u_hat_k for k = 0..N/2, with
/// u_hat_{-k} = conj(u_hat_k) implied (the field is real-valued).
struct SpectralField {
    GridSpec grid;
    std::vector<std::complex<double>> modes;

    SpectralField() = default;
    explicit SpectralField(const GridSpec& g) : grid(g), modes(g.num_modes(), 0.0) {}

    std::complex<double>& operator[](int k) { return modes[k]; }
    const std::complex<double>& operator[](int k) const { return modes[k]; }
};

/// Time-ordered frames on a single grid, recorded at uniform intervals.
struct Trajectory {
    GridSpec grid;
    double t0 = 0.0;
    double dt_rec = 0.0;
    std::vector<RealField> frames;

    Trajectory() = default;
    Trajectory(const GridSpec& g, double t0_, double dt_rec_) : grid(g), t0(t0_), dt_rec(dt_rec_) {
        if (dt_rec <= 0.0) throw std::invalid_argument("Trajectory: dt_rec must be > 0");
    }

    void push(RealField f) {
        require_same_grid(grid, f.grid, "Trajectory::push");
        frames.push_back(std::move(f));
    }
    int size() const { return static_cast<int>(frames.size()); }
    double time(int i) const { return t0 + i * dt_rec; }
    /// Recording-window length T = frames * dt_rec.
    double duration() const { return size() * dt_rec; }
};

}  // namespace ksb
