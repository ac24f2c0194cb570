#include <immintrin.h>

#include <cmath>

#include "kernels.hpp"

namespace ndiff::simd::detail {

namespace {

void correlate_avx2(const double* x, std::size_t nx, const double* taps, std::size_t ntaps,
                    double* out) {
  if (ntaps == 0 || nx < ntaps) return;
  const std::size_t nout = nx - ntaps + 1;
  std::size_t i = 0;
  for (; i + 8 <= nout; i += 8) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    for (std::size_t j = 0; j < ntaps; ++j) {
      const __m256d c = _mm256_broadcast_sd(taps + j);
      a0 = _mm256_fmadd_pd(c, _mm256_loadu_pd(x + i + j), a0);
      a1 = _mm256_fmadd_pd(c, _mm256_loadu_pd(x + i + j + 4), a1);
    }
    _mm256_storeu_pd(out + i, a0);
    _mm256_storeu_pd(out + i + 4, a1);
  }
  for (; i + 4 <= nout; i += 4) {
    __m256d a = _mm256_setzero_pd();
    for (std::size_t j = 0; j < ntaps; ++j)
      a = _mm256_fmadd_pd(_mm256_broadcast_sd(taps + j), _mm256_loadu_pd(x + i + j), a);
    _mm256_storeu_pd(out + i, a);
  }
  for (; i < nout; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < ntaps; ++j) acc = std::fma(taps[j], x[i + j], acc);
    out[i] = acc;
  }
}

inline double combine4(__m256d s) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, s);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double sum_abs_diff_avx2(const double* v, std::size_t n) {
  if (n < 2) return 0.0;
  const std::size_t m = n - 1;
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(v + i), _mm256_loadu_pd(v + i + 1));
    s = _mm256_add_pd(s, _mm256_andnot_pd(sign, d));
  }
  double total = combine4(s);
  for (; i < m; ++i) total += std::fabs(v[i] - v[i + 1]);
  return total;
}

void soft_threshold_avx2(const double* v, std::size_t n, double kappa, double* out) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d k = _mm256_set1_pd(kappa);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(v + i);
    const __m256d a = _mm256_sub_pd(_mm256_andnot_pd(sign, x), k);
    const __m256d keep = _mm256_cmp_pd(a, zero, _CMP_GT_OQ);
    const __m256d r = _mm256_or_pd(a, _mm256_and_pd(sign, x));
    _mm256_storeu_pd(out + i, _mm256_and_pd(keep, r));
  }
  for (; i < n; ++i) {
    const double a = std::fabs(v[i]) - kappa;
    out[i] = a > 0.0 ? std::copysign(a, v[i]) : 0.0;
  }
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    s = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s);
  double total = combine4(s);
  for (; i < n; ++i) total = std::fma(a[i], b[i], total);
  return total;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{"avx2", correlate_avx2, sum_abs_diff_avx2, soft_threshold_avx2,
                             dot_avx2};
  return t;
}

}  // namespace ndiff::simd::detail
