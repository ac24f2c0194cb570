#pragma once

#include <complex>
#include <span>
#include <vector>

namespace ndiff::fft {

using cplx = std::complex<double>;

/// Unnormalized forward DFT, Y_k = sum_n y_n exp(-2 pi i k n / N).
std::vector<cplx> forward(std::span<const cplx> x);
std::vector<cplx> forward(std::span<const double> x);
/// Inverse DFT including the 1/N factor.
std::vector<cplx> inverse(std::span<const cplx> spectrum);
/// Real part of the normalized inverse DFT.
std::vector<double> inverse_real(std::span<const cplx> spectrum);

/// DCT-I, Y_k = y_0 + (-1)^k y_{N-1} + 2 sum_{n=1}^{N-2} y_n cos(pi k n / (N-1)),
/// computed from the FFT of the even extension of length 2(N-1). Applying it
/// twice returns 2(N-1) times the input.
std::vector<double> dct1(std::span<const double> y);

}  // namespace ndiff::fft
