#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ndiff/core.hpp"

namespace ndiff {

double rmse(std::span<const double> est, std::span<const double> truth);

/// Squared Pearson correlation between the error (est - truth) and truth.
/// 0 when the error has zero variance.
double error_correlation(std::span<const double> est, std::span<const double> truth);

/// Smoothness weight for the proxy losses from a bandlimit f (Hz) and step dt.
double gamma_heuristic(double f_hz, double dt);

/// Huber(x, m): x^2 / 2 inside radius m, linear outside.
double huber(double x, double m);

/// MAD of v about its median, divided by 0.6745 (Gaussian consistency).
double sigma_mad(std::span<const double> v);

/// RMSE of the re-integrated derivative (offset by the mean residual)
/// against the data, plus gamma times the normalized TV of the derivative.
double proxy_loss(std::span<const double> derivative, const Signal& signal, double gamma);

/// Huber version of proxy_loss with radius m * sigma_MAD and a robust
/// integration constant.
double robust_proxy_loss(std::span<const double> derivative, const Signal& signal, double gamma, double m);

struct TuneSpec {
  double gamma = 1e-2;
  double huber_m = 6.0;
  int starts = 10;
  int max_evals = 200;  // per start
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = worker_count()

  /// gamma from the heuristic; M = 2 with outliers, 6 without.
  static TuneSpec for_cutoff(double f_hz, double dt, bool outliers, std::uint64_t seed = 0);
};

struct TuneResult {
  MethodConfig config;
  double loss = 0.0;
  int evaluations = 0;
  std::vector<std::string> failures;
};

/// Multi-start Nelder-Mead on robust_proxy_loss over the method's tunable
/// parameters. Deterministic for a fixed seed.
TuneResult autotune(const std::string& method, const Signal& signal, const TuneSpec& spec);

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int evaluations = 0;
};

/// Downhill simplex with coefficients 1 / 2 / 0.5 / 0.5, stopping when the
/// simplex diameter falls below `xtol` or after max_evals evaluations.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const std::vector<double>& step, int max_evals, double xtol = 1e-3);

}  // namespace ndiff
