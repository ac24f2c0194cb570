#pragma once

#include "ndiff/simd.hpp"

namespace ndiff::simd::detail {

const KernelTable& scalar_table();
#if defined(NDIFF_HAVE_AVX2_KERNELS)
const KernelTable& avx2_table();
#endif
#if defined(NDIFF_HAVE_NEON_KERNELS)
const KernelTable& neon_table();
#endif

}  // namespace ndiff::simd::detail
