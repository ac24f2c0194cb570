#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops. Every kernel has a scalar reference and, where
// the build supports it, an AVX2 (x86-64) or NEON (aarch64) variant chosen at
// runtime. The vector variants reproduce the reference summation order, so
// results are bit-identical across variants.

namespace ndiff::simd {

/// out[i] = sum_j taps[j] * x[i + j]   for i in [0, x.size() - taps.size()].
using CorrelateFn = void (*)(const double* x, std::size_t nx, const double* taps,
                             std::size_t ntaps, double* out);
/// sum |v[i] - v[i+1]|
using SumAbsDiffFn = double (*)(const double* v, std::size_t n);
/// out[i] = sign(v[i]) * max(|v[i]| - kappa, 0)
using SoftThresholdFn = void (*)(const double* v, std::size_t n, double kappa, double* out);
/// sum a[i] * b[i]
using DotFn = double (*)(const double* a, const double* b, std::size_t n);

struct KernelTable {
  std::string_view isa;
  CorrelateFn correlate;
  SumAbsDiffFn sum_abs_diff;
  SoftThresholdFn soft_threshold;
  DotFn dot;
};

const KernelTable& scalar_kernels();
/// nullptr when the build or the CPU lacks the instruction set.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Best table for this CPU. NDIFF_SIMD=scalar forces the reference kernels.
const KernelTable& active();

void correlate(std::span<const double> x, std::span<const double> taps, std::span<double> out);
double sum_abs_diff(std::span<const double> v);
void soft_threshold(std::span<const double> v, double kappa, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace ndiff::simd
