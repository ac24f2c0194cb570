#pragma once

#include <span>
#include <vector>

#include "ndiff/core.hpp"

namespace ndiff {

/// nu-th derivative of a signal taken as one period of a periodic function on
/// [t0, t0 + N dt). keep_modes = 0 keeps every mode; otherwise modes with
/// |wavenumber| >= keep_modes are zeroed in both outputs.
DerivativeResult fourier_derivative(const Signal& signal, int nu, int keep_modes = 0);

/// Ideal low-pass: zero every bin with |effective wavenumber| >= keep_modes.
Signal fourier_lowpass(const Signal& signal, int keep_modes);

/// Chebyshev-Lobatto nodes cos(pi k / (n - 1)), descending from 1 to -1.
std::vector<double> cheb_nodes(std::size_t n);

/// Derivative from samples at the affine image of cheb_nodes(N) on [a, b],
/// in cheb_nodes order (x descending). Intended for noiseless data: the fit
/// amplifies noise near the domain edges.
DerivativeResult chebyshev_derivative(std::span<const double> values, double a, double b, int nu);

/// Same, for a signal on an ascending Chebyshev grid spanning [t0, t_{N-1}].
DerivativeResult chebyshev_derivative(const Signal& signal, int nu);

enum class Extension { None, Even };

/// Fourier derivative of an aperiodic signal after padding each end with
/// `pad` copies of the end value (blended by a moving average of width
/// ceil(pad / 4)) and optionally mirroring, keeping `keep_modes` modes of the
/// extended signal.
DerivativeResult fourier_extension_derivative(const Signal& signal, int pad, Extension extension,
                                              int keep_modes, int nu);

struct PowerSpectrum {
  std::vector<double> freq_hz;
  std::vector<double> power_db;
};

/// 10 log10 |Y_k|^2 for k = 0 .. floor(N/2), frequencies k / (N dt).
PowerSpectrum power_spectrum(const Signal& signal);

/// Periodic spectral derivative of raw samples over one period of length T.
std::vector<double> periodic_derivative(std::span<const double> y, double period, int nu, int keep_modes);

}  // namespace ndiff
