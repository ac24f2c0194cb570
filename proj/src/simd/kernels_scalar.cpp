#include <cmath>

#include "kernels.hpp"

namespace ndiff::simd::detail {

namespace {

void correlate_scalar(const double* x, std::size_t nx, const double* taps, std::size_t ntaps,
                      double* out) {
  if (ntaps == 0 || nx < ntaps) return;
  const std::size_t nout = nx - ntaps + 1;
  for (std::size_t i = 0; i < nout; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < ntaps; ++j) acc = std::fma(taps[j], x[i + j], acc);
    out[i] = acc;
  }
}

// Four interleaved partial sums, combined as (s0 + s1) + (s2 + s3), then the
// tail. The vector kernels follow exactly this order.
double sum_abs_diff_scalar(const double* v, std::size_t n) {
  if (n < 2) return 0.0;
  const std::size_t m = n - 1;
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4)
    for (std::size_t k = 0; k < 4; ++k) s[k] += std::fabs(v[i + k] - v[i + k + 1]);
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < m; ++i) total += std::fabs(v[i] - v[i + 1]);
  return total;
}

void soft_threshold_scalar(const double* v, std::size_t n, double kappa, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::fabs(v[i]) - kappa;
    out[i] = a > 0.0 ? std::copysign(a, v[i]) : 0.0;
  }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (std::size_t k = 0; k < 4; ++k) s[k] = std::fma(a[i + k], b[i + k], s[k]);
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) total = std::fma(a[i], b[i], total);
  return total;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{"scalar", correlate_scalar, sum_abs_diff_scalar, soft_threshold_scalar,
                             dot_scalar};
  return t;
}

}  // namespace ndiff::simd::detail
