#include "ndiff/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ndiff/fft.hpp"

namespace ndiff {

namespace {

using fft::cplx;

fft::cplx ipow(cplx z, int nu) {
  cplx r = 1.0;
  for (int k = 0; k < nu; ++k) r *= z;
  return r;
}

void check_keep(int keep_modes, std::size_t n) {
  if (keep_modes < 0 || (keep_modes > 0 && std::size_t(keep_modes) > n / 2))
    throw ValidationError("keep_modes must be in [1, " + std::to_string(n / 2) + "]");
}

}  // namespace

std::vector<double> periodic_derivative(std::span<const double> y, double period, int nu, int keep_modes) {
  const std::size_t n = y.size();
  if (nu < 0) throw ValidationError("derivative order must be non-negative");
  check_keep(keep_modes, n);
  auto Y = fft::forward(y);
  for (std::size_t k = 0; k < n; ++k) {
    const bool nyquist = (n % 2 == 0) && (2 * k == n);
    const double kk = (2 * k < n || nyquist) ? double(k) : double(k) - double(n);
    if (keep_modes > 0 && std::fabs(kk) >= keep_modes) {
      Y[k] = 0.0;
      continue;
    }
    if (nu == 0) continue;
    if (nyquist && nu % 2 == 1)
      Y[k] = 0.0;
    else
      Y[k] *= ipow(cplx(0.0, kk), nu);
  }
  auto out = fft::inverse_real(Y);
  const double scale = std::pow(2.0 * std::numbers::pi / period, nu);
  for (auto& v : out) v *= scale;
  return out;
}

DerivativeResult fourier_derivative(const Signal& signal, int nu, int keep_modes) {
  require_uniform(signal, "fourier");
  const std::size_t n = signal.size();
  if (n < 4) throw ValidationError("fourier derivative needs at least 4 samples");
  if (nu < 1) throw ValidationError("fourier derivative order must be >= 1");
  const double period = double(n) * signal.grid().dt();
  DerivativeResult r;
  r.method = "fourier";
  r.phi = {{"nu", nu}, {"keep_modes", keep_modes}};
  r.derivative = periodic_derivative(signal.values(), period, nu, keep_modes);
  r.smoothed = keep_modes > 0 ? periodic_derivative(signal.values(), period, 0, keep_modes) : signal.values();
  return r;
}

Signal fourier_lowpass(const Signal& signal, int keep_modes) {
  require_uniform(signal, "fourier_lowpass");
  if (keep_modes < 1) throw ValidationError("keep_modes must be >= 1");
  check_keep(keep_modes, signal.size());
  return signal.with_values(periodic_derivative(signal.values(), 1.0, 0, keep_modes));
}

std::vector<double> cheb_nodes(std::size_t n) {
  if (n < 2) throw ValidationError("cheb_nodes needs n >= 2");
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = std::cos(std::numbers::pi * double(k) / double(n - 1));
  x.front() = 1.0;
  x.back() = -1.0;
  if (n % 2 == 1) x[n / 2] = 0.0;
  return x;
}

DerivativeResult chebyshev_derivative(std::span<const double> values, double a, double b, int nu) {
  const std::size_t n = values.size();
  if (n < 2) throw ValidationError("chebyshev derivative needs at least 2 samples");
  if (!(b > a)) throw ValidationError("chebyshev derivative needs b > a");
  if (nu < 1) throw ValidationError("chebyshev derivative order must be >= 1");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(values[i])) throw ValidationError("non-finite value", std::ptrdiff_t(i));

  // Coefficients of sum_k a_k T_k(x); the end coefficients carry half weight.
  auto coef = fft::dct1(values);
  const double m = double(n - 1);
  for (std::size_t k = 0; k < n; ++k) coef[k] /= (k == 0 || k == n - 1) ? 2.0 * m : m;

  for (int d = 0; d < nu; ++d) {
    std::vector<double> der(n, 0.0);
    // der_k = der_{k+2} + 2 (k+1) a_{k+1}, then der_0 /= 2.
    for (std::size_t kk = n - 1; kk-- > 0;) {
      const double next2 = kk + 2 < n ? der[kk + 2] : 0.0;
      der[kk] = next2 + 2.0 * double(kk + 1) * coef[kk + 1];
    }
    der[0] *= 0.5;
    coef = std::move(der);
  }

  // Back to samples: DCT-I of the coefficients with interior halves.
  std::vector<double> c(coef);
  for (std::size_t k = 1; k + 1 < n; ++k) c[k] *= 0.5;
  auto out = fft::dct1(c);
  const double chain = std::pow(2.0 / (b - a), nu);
  for (auto& v : out) v *= chain;

  DerivativeResult r;
  r.method = "chebyshev";
  r.phi = {{"nu", nu}};
  r.smoothed.assign(values.begin(), values.end());
  r.derivative = std::move(out);
  return r;
}

DerivativeResult chebyshev_derivative(const Signal& signal, int nu) {
  const std::size_t n = signal.size();
  const auto& t = signal.t();
  const double a = t.front(), b = t.back();
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (2.0 * t[i] - (a + b)) / (b - a);
    const double want = -std::cos(std::numbers::pi * double(i) / double(n - 1));
    if (std::fabs(u - want) > 1e-8)
      throw ValidationError("sample locations are not Chebyshev-Lobatto nodes", std::ptrdiff_t(i));
  }
  std::vector<double> rev(signal.values().rbegin(), signal.values().rend());
  auto r = chebyshev_derivative(rev, a, b, nu);
  std::reverse(r.smoothed.begin(), r.smoothed.end());
  std::reverse(r.derivative.begin(), r.derivative.end());
  return r;
}

DerivativeResult fourier_extension_derivative(const Signal& signal, int pad, Extension extension,
                                              int keep_modes, int nu) {
  require_uniform(signal, "fourier extension");
  if (pad < 0) throw ValidationError("pad must be >= 0");
  if (nu < 1) throw ValidationError("derivative order must be >= 1");
  const auto& y = signal.values();
  const std::size_t n = y.size();
  const std::size_t p = std::size_t(pad);
  const std::size_t m = n + 2 * p;

  std::vector<double> padded(m);
  for (std::size_t i = 0; i < m; ++i)
    padded[i] = i < p ? y.front() : (i >= p + n ? y.back() : y[i - p]);
  const std::size_t w = (p + 3) / 4;
  if (w >= 2) {
    std::vector<double> prefix(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] + padded[i];
    std::vector<double> smooth(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t lo = i >= (w - 1) / 2 ? i - (w - 1) / 2 : 0;
      const std::size_t hi = std::min(m - 1, i + w / 2);
      smooth[i] = (prefix[hi + 1] - prefix[lo]) / double(hi - lo + 1);
    }
    for (std::size_t i = 0; i < n; ++i) smooth[p + i] = y[i];
    padded = std::move(smooth);
  }
  std::vector<double> ext = padded;
  if (extension == Extension::Even) ext.insert(ext.end(), padded.rbegin(), padded.rend());

  const std::size_t L = ext.size();
  if (L < 4) throw ValidationError("extended signal too short");
  if (keep_modes < 1 || std::size_t(keep_modes) > L / 2)
    throw ValidationError("keep_modes must be in [1, " + std::to_string(L / 2) + "] for the extended signal");
  const double period = double(L) * signal.grid().dt();
  const auto d = periodic_derivative(ext, period, nu, keep_modes);
  const auto s = periodic_derivative(ext, period, 0, keep_modes);

  DerivativeResult r;
  r.method = "spectral";
  r.phi = {{"pad", pad}, {"even", extension == Extension::Even ? 1 : 0}, {"keep_modes", keep_modes}, {"nu", nu}};
  r.derivative.assign(d.begin() + std::ptrdiff_t(p), d.begin() + std::ptrdiff_t(p + n));
  r.smoothed.assign(s.begin() + std::ptrdiff_t(p), s.begin() + std::ptrdiff_t(p + n));
  return r;
}

PowerSpectrum power_spectrum(const Signal& signal) {
  require_uniform(signal, "power_spectrum");
  const std::size_t n = signal.size();
  const double dt = signal.grid().dt();
  const auto Y = fft::forward(std::span<const double>(signal.values()));
  PowerSpectrum ps;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    ps.freq_hz.push_back(double(k) / (double(n) * dt));
    ps.power_db.push_back(10.0 * std::log10(std::max(std::norm(Y[k]), 1e-300)));
  }
  return ps;
}

}  // namespace ndiff
