#include <cstdlib>
#include <stdexcept>
#include <string_view>

#include "kernels.hpp"

namespace ndiff::simd {

const KernelTable& scalar_kernels() { return detail::scalar_table(); }

const KernelTable* avx2_kernels() {
#if defined(NDIFF_HAVE_AVX2_KERNELS)
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(NDIFF_HAVE_NEON_KERNELS)
  return &detail::neon_table();  // baseline on aarch64
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  const char* env = std::getenv("NDIFF_SIMD");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return *t;
  if (const KernelTable* t = neon_kernels()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& t = select();
  return t;
}

void correlate(std::span<const double> x, std::span<const double> taps, std::span<double> out) {
  if (taps.empty() || x.size() < taps.size()) {
    if (!out.empty()) throw std::invalid_argument("correlate: input shorter than taps");
    return;
  }
  if (out.size() != x.size() - taps.size() + 1)
    throw std::invalid_argument("correlate: output size mismatch");
  active().correlate(x.data(), x.size(), taps.data(), taps.size(), out.data());
}

double sum_abs_diff(std::span<const double> v) { return active().sum_abs_diff(v.data(), v.size()); }

void soft_threshold(std::span<const double> v, double kappa, std::span<double> out) {
  if (out.size() != v.size()) throw std::invalid_argument("soft_threshold: size mismatch");
  active().soft_threshold(v.data(), v.size(), kappa, out.data());
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

}  // namespace ndiff::simd
