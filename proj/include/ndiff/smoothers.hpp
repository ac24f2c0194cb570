#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "ndiff/core.hpp"

namespace ndiff {

// --- kernels ---

enum class KernelKind { Mean, Gaussian, Friedrichs, Median };

struct KernelSpec {
  KernelKind kind = KernelKind::Mean;
  int window = 5;      // odd, >= 3, samples
  double sigma = 1.0;  // gaussian width in samples
};

/// Normalized convolution weights (not defined for the median kernel).
std::vector<double> kernel_weights(const KernelSpec& spec);

/// Extends y by `half` samples on each side, reflecting through the end
/// samples: y[-j] = 2 y[0] - y[j]. Straight lines extend to straight lines.
std::vector<double> mirror_extend(std::span<const double> y, std::size_t half);

/// Centered convolution with odd-length taps on the mirror-extended signal.
std::vector<double> mirror_convolve(std::span<const double> y, std::span<const double> taps);

Signal kernel_smooth(const Signal& signal, const KernelSpec& spec);
DerivativeResult kerneldiff(const Signal& signal, const KernelSpec& spec);

// --- Butterworth ---

/// Second-order sections {b0, b1, b2, a1, a2} with a0 = 1.
struct SosFilter {
  std::vector<std::array<double, 5>> sections;
};

/// Digital low-pass Butterworth by the bilinear transform with prewarping.
SosFilter butterworth_lowpass(int order, double cutoff_hz, double dt);
/// One causal pass from zero initial state.
std::vector<double> sos_filter(const SosFilter& f, std::span<const double> x);
/// Zero-phase forward-backward pass with odd padding and steady-state
/// initial conditions.
std::vector<double> sos_filtfilt(const SosFilter& f, std::span<const double> x);

DerivativeResult butterdiff(const Signal& signal, int order, double cutoff_hz);

// --- polynomial fits ---

DerivativeResult polydiff(const Signal& signal, int window, int stride, int degree,
                          std::optional<KernelSpec> weight_kernel = std::nullopt);

/// Correlation taps for a centered window: row 0 smooths, row 1 is the first
/// derivative per unit sample spacing.
std::array<std::vector<double>, 2> savgol_coefficients(int window, int degree);

DerivativeResult savgoldiff(const Signal& signal, int window, int degree,
                            std::optional<double> post_smooth_sigma = std::nullopt);

/// Normalized Gaussian taps with standard deviation sigma samples,
/// truncated at 3 sigma and capped at `max_len` (odd).
std::vector<double> gaussian_taps(double sigma, std::size_t max_len);

// --- splines ---

enum class SplineMode { Lambda, Bound };

struct SplineSpec {
  int degree = 3;
  SplineMode mode = SplineMode::Lambda;
  double lambda = 0.0;  // roughness weight
  double s = 0.0;       // residual bound (sum of squares)
  int iterations = 1;
};

/// Evaluates all B-spline basis functions of `degree` on `knots` (full knot
/// vector with repeated ends) at x; returns the index of the first nonzero
/// function and its degree+1 values (derivative order `deriv`).
std::size_t bspline_basis(std::span<const double> knots, int degree, double x, int deriv,
                          std::span<double> out);

DerivativeResult splinediff(const Signal& signal, const SplineSpec& spec);

// --- radial basis functions ---

DerivativeResult rbfdiff(const Signal& signal, double sigma, double rho, double damping);

}  // namespace ndiff
