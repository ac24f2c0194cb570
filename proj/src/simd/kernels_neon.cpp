#include <arm_neon.h>

#include <cmath>

#include "kernels.hpp"

namespace ndiff::simd::detail {

namespace {

void correlate_neon(const double* x, std::size_t nx, const double* taps, std::size_t ntaps,
                    double* out) {
  if (ntaps == 0 || nx < ntaps) return;
  const std::size_t nout = nx - ntaps + 1;
  std::size_t i = 0;
  for (; i + 4 <= nout; i += 4) {
    float64x2_t a0 = vdupq_n_f64(0.0);
    float64x2_t a1 = vdupq_n_f64(0.0);
    for (std::size_t j = 0; j < ntaps; ++j) {
      const float64x2_t c = vdupq_n_f64(taps[j]);
      a0 = vfmaq_f64(a0, c, vld1q_f64(x + i + j));
      a1 = vfmaq_f64(a1, c, vld1q_f64(x + i + j + 2));
    }
    vst1q_f64(out + i, a0);
    vst1q_f64(out + i + 2, a1);
  }
  for (; i < nout; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < ntaps; ++j) acc = std::fma(taps[j], x[i + j], acc);
    out[i] = acc;
  }
}

// Lanes (0,1) live in lo, (2,3) in hi, matching the scalar four-way split.
double sum_abs_diff_neon(const double* v, std::size_t n) {
  if (n < 2) return 0.0;
  const std::size_t m = n - 1;
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    lo = vaddq_f64(lo, vabsq_f64(vsubq_f64(vld1q_f64(v + i), vld1q_f64(v + i + 1))));
    hi = vaddq_f64(hi, vabsq_f64(vsubq_f64(vld1q_f64(v + i + 2), vld1q_f64(v + i + 3))));
  }
  double total = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
                 (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (; i < m; ++i) total += std::fabs(v[i] - v[i + 1]);
  return total;
}

void soft_threshold_neon(const double* v, std::size_t n, double kappa, double* out) {
  const float64x2_t k = vdupq_n_f64(kappa);
  const uint64x2_t sign = vdupq_n_u64(0x8000000000000000ULL);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t x = vld1q_f64(v + i);
    const float64x2_t a = vsubq_f64(vabsq_f64(x), k);
    const uint64x2_t keep = vcgtq_f64(a, vdupq_n_f64(0.0));
    const uint64x2_t r = vorrq_u64(vreinterpretq_u64_f64(a), vandq_u64(sign, vreinterpretq_u64_f64(x)));
    vst1q_f64(out + i, vreinterpretq_f64_u64(vandq_u64(keep, r)));
  }
  for (; i < n; ++i) {
    const double a = std::fabs(v[i]) - kappa;
    out[i] = a > 0.0 ? std::copysign(a, v[i]) : 0.0;
  }
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vfmaq_f64(lo, vld1q_f64(a + i), vld1q_f64(b + i));
    hi = vfmaq_f64(hi, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double total = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
                 (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (; i < n; ++i) total = std::fma(a[i], b[i], total);
  return total;
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable t{"neon", correlate_neon, sum_abs_diff_neon, soft_threshold_neon,
                             dot_neon};
  return t;
}

}  // namespace ndiff::simd::detail
