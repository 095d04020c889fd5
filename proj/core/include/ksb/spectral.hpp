#pragma once

#include <functional>

#include "ksb/field.hpp"

namespace ksb {

/// Forward transform: u_hat_n = (1/N) sum_j exp(-i xi_n x_j) u(x_j),
/// the discrete form of L^{-1} int_0^L exp(-i xi x) u dx.
SpectralField fft_forward(const RealField& u);
RealField fft_inverse(const SpectralField& uh);

/// m-th spectral derivative, multiplier (i xi_n)^m. The Nyquist mode is
/// zeroed for odd m (its sign is not well defined there). Requires m <= 8.
RealField derivative(const RealField& u, int m);

/// |dx|^alpha: multiplies mode n by ((2pi/L)|n|)^alpha. Mode 0 maps to 0
/// for alpha > 0; for alpha < 0 the field must have zero mean.
RealField halfwave(const RealField& u, double alpha);

/// Exact translation u(. + h) via the spectral phase exp(i xi_n h);
/// h need not be a multiple of dx. Nyquist zeroed.
RealField shift(const RealField& u, double h);

/// D^h u = u(. + h) - u, as a single spectral multiplier exp(i xi_n h) - 1
/// so that D^{h+L} = D^h holds exactly.
RealField finite_diff(const RealField& u, double h);

/// Rectangle rule (L/N) * sum_j u(x_j); exact for band-limited integrands.
double integrate_x(const RealField& u);
double mean(const RealField& u);
RealField project_zero_mean(const RealField& u);

/// (L/N) * sum_j f(u(x_j)) for pointwise integrands.
double integrate_x(const RealField& u, const std::function<double(double)>& f);

/// sum_n |u_hat_n|^2 over n = -N/2..N/2-1; equals (1/L) int u^2 by Parseval.
double spectral_energy(const SpectralField& uh);

/// Evaluate the trigonometric interpolant of u at arbitrary x (dense
/// resampling; O(N) per point, test oracle and diagnostics only).
double eval_interpolant(const RealField& u, double x);

}  // namespace ksb
