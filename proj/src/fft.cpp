#include "ndiff/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

#include "ndiff/core.hpp"

namespace ndiff::fft {

namespace {

// FFTW planning is not thread safe; execution of a private plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<cplx> transform(std::vector<cplx> data, int sign) {
  if (data.empty()) return data;
  std::vector<cplx> out(data.size());
  auto* in = reinterpret_cast<fftw_complex*>(data.data());
  auto* o = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(int(data.size()), in, o, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw NumericError("FFT planning failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

std::vector<cplx> forward(std::span<const cplx> x) {
  return transform(std::vector<cplx>(x.begin(), x.end()), FFTW_FORWARD);
}

std::vector<cplx> forward(std::span<const double> x) {
  return transform(std::vector<cplx>(x.begin(), x.end()), FFTW_FORWARD);
}

std::vector<cplx> inverse(std::span<const cplx> spectrum) {
  auto out = transform(std::vector<cplx>(spectrum.begin(), spectrum.end()), FFTW_BACKWARD);
  const double scale = 1.0 / double(out.size());
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<double> inverse_real(std::span<const cplx> spectrum) {
  const auto c = inverse(spectrum);
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

std::vector<double> dct1(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 2) throw ValidationError("DCT-I needs at least 2 samples");
  const std::size_t m = 2 * (n - 1);
  std::vector<cplx> ext(m);
  for (std::size_t i = 0; i < n; ++i) ext[i] = y[i];
  for (std::size_t i = 1; i + 1 < n; ++i) ext[m - i] = y[i];
  const auto Y = transform(std::move(ext), FFTW_FORWARD);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = Y[k].real();
  return out;
}

}  // namespace ndiff::fft
