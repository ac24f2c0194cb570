#include "ndiff/smoothers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ndiff/fd.hpp"
#include "ndiff/linalg.hpp"
#include "ndiff/simd.hpp"

namespace ndiff {

namespace {

const char* kernel_method_name(KernelKind k) {
  switch (k) {
    case KernelKind::Mean: return "meandiff";
    case KernelKind::Gaussian: return "gaussiandiff";
    case KernelKind::Friedrichs: return "friedrichsdiff";
    case KernelKind::Median: return "mediandiff";
  }
  return "kerneldiff";
}

void check_kernel(const KernelSpec& spec) {
  if (spec.window < 3 || spec.window % 2 == 0) throw ValidationError("kernel window must be odd and >= 3");
  if (spec.kind == KernelKind::Gaussian && !(spec.sigma > 0.0))
    throw ValidationError("gaussian kernel sigma must be > 0");
}

double friedrichs(double x) { return std::fabs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; }

}  // namespace

// --- kernels ---

std::vector<double> kernel_weights(const KernelSpec& spec) {
  check_kernel(spec);
  const int h = spec.window / 2;
  std::vector<double> w(std::size_t(spec.window));
  for (int j = -h; j <= h; ++j) {
    double v = 1.0;
    switch (spec.kind) {
      case KernelKind::Mean: v = 1.0; break;
      case KernelKind::Gaussian: v = std::exp(-double(j * j) / (2.0 * spec.sigma * spec.sigma)); break;
      case KernelKind::Friedrichs: v = friedrichs(double(j) / double(h + 1)); break;
      case KernelKind::Median: throw ValidationError("median kernel has no convolution weights");
    }
    w[std::size_t(j + h)] = v;
  }
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}

std::vector<double> mirror_extend(std::span<const double> y, std::size_t half) {
  const std::size_t n = y.size();
  if (half >= n) throw ValidationError("mirror extension longer than the signal");
  std::vector<double> out(n + 2 * half);
  for (std::size_t j = 0; j < half; ++j) {
    out[half - 1 - j] = 2.0 * y[0] - y[j + 1];
    out[half + n + j] = 2.0 * y[n - 1] - y[n - 2 - j];
  }
  std::copy(y.begin(), y.end(), out.begin() + std::ptrdiff_t(half));
  return out;
}

std::vector<double> mirror_convolve(std::span<const double> y, std::span<const double> taps) {
  if (taps.size() % 2 == 0) throw ValidationError("taps must have odd length");
  const std::size_t half = taps.size() / 2;
  const auto ext = mirror_extend(y, half);
  std::vector<double> out(y.size());
  simd::correlate(ext, taps, out);
  return out;
}

Signal kernel_smooth(const Signal& signal, const KernelSpec& spec) {
  require_uniform(signal, "kernel smoothing");
  check_kernel(spec);
  const std::size_t n = signal.size();
  if (std::size_t(spec.window) > n) throw ValidationError("kernel window exceeds signal length");
  const auto& y = signal.values();
  if (spec.kind != KernelKind::Median) return signal.with_values(mirror_convolve(y, kernel_weights(spec)));

  const std::size_t w = std::size_t(spec.window);
  const auto ext = mirror_extend(y, w / 2);
  std::vector<double> out(n), buf(w);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(ext.begin() + std::ptrdiff_t(i), ext.begin() + std::ptrdiff_t(i + w), buf.begin());
    std::nth_element(buf.begin(), buf.begin() + std::ptrdiff_t(w / 2), buf.end());
    out[i] = buf[w / 2];
  }
  return signal.with_values(std::move(out));
}

DerivativeResult kerneldiff(const Signal& signal, const KernelSpec& spec) {
  const Signal s = kernel_smooth(signal, spec);
  DerivativeResult r = fd_derivative(s, 1, 2);
  r.method = kernel_method_name(spec.kind);
  r.phi = {{"window", spec.window}};
  if (spec.kind == KernelKind::Gaussian) r.phi["sigma"] = spec.sigma;
  return r;
}

// --- Butterworth ---

SosFilter butterworth_lowpass(int order, double cutoff_hz, double dt) {
  if (order < 1 || order > 20) throw ValidationError("butterworth order must be in [1, 20]");
  if (!(dt > 0.0)) throw ValidationError("sample spacing must be positive");
  const double nyquist = 0.5 / dt;
  if (!(cutoff_hz > 0.0 && cutoff_hz < nyquist))
    throw ValidationError("cutoff must lie strictly between 0 and the Nyquist frequency " + std::to_string(nyquist));
  // Prewarped analog cutoff, normalized so that s = (1 - z^-1) / (K (1 + z^-1)).
  const double K = std::tan(std::numbers::pi * cutoff_hz * dt);
  SosFilter f;
  for (int k = 0; k < order / 2; ++k) {
    const double a1 = 2.0 * std::sin(std::numbers::pi * (2.0 * k + 1.0) / (2.0 * order));
    const double D = 1.0 + a1 * K + K * K;
    const double g = K * K / D;
    f.sections.push_back({g, 2.0 * g, g, 2.0 * (K * K - 1.0) / D, (1.0 - a1 * K + K * K) / D});
  }
  if (order % 2 == 1) {
    const double D = 1.0 + K;
    f.sections.push_back({K / D, K / D, 0.0, (K - 1.0) / D, 0.0});
  }
  return f;
}

namespace {

// Transposed direct form II. With `level` set, each section starts in the
// steady state it would reach under a constant input equal to `level`.
std::vector<double> run_sos(const SosFilter& f, std::span<const double> x, std::optional<double> level) {
  std::vector<double> y(x.begin(), x.end());
  double in_level = level.value_or(0.0);
  for (const auto& s : f.sections) {
    const double b0 = s[0], b1 = s[1], b2 = s[2], a1 = s[3], a2 = s[4];
    const double gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
    double z2 = level ? (b2 - a2 * gain) * in_level : 0.0;
    double z1 = level ? (b1 - a1 * gain) * in_level + z2 : 0.0;
    for (double& v : y) {
      const double xin = v;
      const double out = b0 * xin + z1;
      z1 = b1 * xin - a1 * out + z2;
      z2 = b2 * xin - a2 * out;
      v = out;
    }
    in_level *= gain;
  }
  return y;
}

}  // namespace

std::vector<double> sos_filter(const SosFilter& f, std::span<const double> x) {
  return run_sos(f, x, std::nullopt);
}

std::vector<double> sos_filtfilt(const SosFilter& f, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("filtfilt needs at least 2 samples");
  const std::size_t pad = std::min(n - 1, 3 * (2 * f.sections.size() + 1));
  auto ext = mirror_extend(x, pad);
  auto fwd = run_sos(f, ext, ext.front());
  std::reverse(fwd.begin(), fwd.end());
  auto bwd = run_sos(f, fwd, fwd.front());
  std::reverse(bwd.begin(), bwd.end());
  return std::vector<double>(bwd.begin() + std::ptrdiff_t(pad), bwd.begin() + std::ptrdiff_t(pad + n));
}

DerivativeResult butterdiff(const Signal& signal, int order, double cutoff_hz) {
  require_uniform(signal, "butterdiff");
  const auto f = butterworth_lowpass(order, cutoff_hz, signal.grid().dt());
  const auto& y = signal.values();
  const auto& t = signal.t();
  const std::size_t n = y.size();
  // Filter the deviation from the chord through the end samples, then add the
  // chord back: lines pass through untouched and edges start at zero.
  const double slope = (y[n - 1] - y[0]) / (t[n - 1] - t[0]);
  std::vector<double> chord(n), resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    chord[i] = y[0] + slope * (t[i] - t[0]);
    resid[i] = y[i] - chord[i];
  }
  auto smooth = sos_filtfilt(f, resid);
  for (std::size_t i = 0; i < n; ++i) smooth[i] += chord[i];
  DerivativeResult r = fd_derivative(signal.with_values(smooth), 1, 2);
  r.method = "butterdiff";
  r.phi = {{"order", order}, {"cutoff_hz", cutoff_hz}};
  r.smoothed = std::move(smooth);
  return r;
}

// --- polynomial fits ---

DerivativeResult polydiff(const Signal& signal, int window, int stride, int degree,
                          std::optional<KernelSpec> weight_kernel) {
  const std::size_t n = signal.size();
  if (degree < 0) throw ValidationError("polydiff degree must be >= 0");
  if (window < degree + 1 || window < 2) throw ValidationError("polydiff window must be >= max(2, degree + 1)");
  if (std::size_t(window) > n) throw ValidationError("polydiff window exceeds signal length");
  if (stride < 1) throw ValidationError("polydiff stride must be >= 1");
  const std::size_t w = std::size_t(window);

  std::vector<double> wt(w, 1.0);
  if (weight_kernel) {
    const double c = 0.5 * double(w - 1);
    for (std::size_t j = 0; j < w; ++j) {
      const double u = double(j) - c;
      switch (weight_kernel->kind) {
        case KernelKind::Mean: break;
        case KernelKind::Gaussian:
          if (!(weight_kernel->sigma > 0.0)) throw ValidationError("gaussian weight sigma must be > 0");
          wt[j] = std::exp(-u * u / (2.0 * weight_kernel->sigma * weight_kernel->sigma));
          break;
        case KernelKind::Friedrichs: wt[j] = friedrichs(u / (c + 1.0)); break;
        case KernelKind::Median: throw ValidationError("median kernel cannot weight polynomial fits");
      }
    }
  }

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + w <= n; s += std::size_t(stride)) starts.push_back(s);
  if (starts.back() + w < n) starts.push_back(n - w);

  const auto& t = signal.t();
  const auto& y = signal.values();
  std::vector<double> num_s(n, 0.0), num_d(n, 0.0), den(n, 0.0);
  const Eigen::Index cols = degree + 1;
  for (std::size_t s : starts) {
    const double tc = 0.5 * (t[s] + t[s + w - 1]);
    const double hs = 0.5 * (t[s + w - 1] - t[s]);
    Eigen::MatrixXd V(static_cast<Eigen::Index>(w), cols);
    Eigen::VectorXd b(static_cast<Eigen::Index>(w));
    for (std::size_t j = 0; j < w; ++j) {
      const double u = (t[s + j] - tc) / hs;
      double p = 1.0;
      for (Eigen::Index k = 0; k < cols; ++k) {
        V(Eigen::Index(j), k) = p;
        p *= u;
      }
      b(Eigen::Index(j)) = y[s + j];
    }
    const Eigen::VectorXd a = V.colPivHouseholderQr().solve(b);
    for (std::size_t j = 0; j < w; ++j) {
      const double u = (t[s + j] - tc) / hs;
      double val = 0.0, der = 0.0;
      for (Eigen::Index k = cols - 1; k >= 0; --k) {
        der = der * u + val;
        val = val * u + a(k);
      }
      num_s[s + j] += wt[j] * val;
      num_d[s + j] += wt[j] * der / hs;
      den[s + j] += wt[j];
    }
  }
  DerivativeResult r;
  r.method = "polydiff";
  r.phi = {{"window", window}, {"stride", stride}, {"degree", degree}};
  r.smoothed.resize(n);
  r.derivative.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(den[i] > 0.0)) throw NumericError("polydiff: sample " + std::to_string(i) + " received no fit weight");
    r.smoothed[i] = num_s[i] / den[i];
    r.derivative[i] = num_d[i] / den[i];
  }
  return r;
}

std::array<std::vector<double>, 2> savgol_coefficients(int window, int degree) {
  if (window < 3 || window % 2 == 0) throw ValidationError("savgol window must be odd and >= 3");
  if (degree < 1) throw ValidationError("savgol degree must be >= 1");
  if (degree >= window) throw ValidationError("savgol degree must be < window");
  const int h = window / 2;
  // Legendre basis on the window scaled to [-1, 1]; the fit is basis independent
  // but this keeps the least-squares system well conditioned.
  const Eigen::Index w = window, d = degree + 1;
  Eigen::MatrixXd M(w, d);
  for (Eigen::Index j = 0; j < w; ++j) {
    const double x = double(j - h) / double(h);
    double pm = 1.0, p = x;
    M(j, 0) = 1.0;
    if (d > 1) M(j, 1) = x;
    for (Eigen::Index k = 1; k + 1 < d; ++k) {
      const double pn = ((2.0 * k + 1.0) * x * p - double(k) * pm) / double(k + 1);
      pm = p;
      p = pn;
      M(j, k + 1) = pn;
    }
  }
  // Values and first derivatives of P_k at 0.
  Eigen::VectorXd p0(d), dp0(d);
  {
    std::vector<double> P(std::size_t(d) + 1, 0.0), dP(std::size_t(d) + 1, 0.0);
    P[0] = 1.0;
    if (d > 1) {
      P[1] = 0.0;
      dP[1] = 1.0;
    }
    for (Eigen::Index k = 1; k + 1 < d; ++k) {
      const std::size_t kk = std::size_t(k);
      P[kk + 1] = -double(k) * P[kk - 1] / double(k + 1);
      dP[kk + 1] = dP[kk - 1] + (2.0 * k + 1.0) * P[kk];
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      p0(k) = P[std::size_t(k)];
      dp0(k) = dP[std::size_t(k)];
    }
  }
  const Eigen::MatrixXd pinv = M.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(w, w));
  const Eigen::VectorXd c0 = pinv.transpose() * p0;
  const Eigen::VectorXd c1 = pinv.transpose() * dp0 / double(h);
  return {std::vector<double>(c0.data(), c0.data() + w), std::vector<double>(c1.data(), c1.data() + w)};
}

std::vector<double> gaussian_taps(double sigma, std::size_t max_len) {
  if (!(sigma > 0.0)) return {1.0};
  std::size_t half = std::size_t(std::ceil(3.0 * sigma));
  if (max_len >= 1) half = std::min(half, (max_len - 1) / 2);
  KernelSpec k{KernelKind::Gaussian, int(2 * half + 1), sigma};
  if (half == 0) return {1.0};
  return kernel_weights(k);
}

DerivativeResult savgoldiff(const Signal& signal, int window, int degree, std::optional<double> post_smooth_sigma) {
  require_uniform(signal, "savgoldiff");
  const std::size_t n = signal.size();
  if (std::size_t(window) > n) throw ValidationError("savgol window exceeds signal length");
  const auto taps = savgol_coefficients(window, degree);
  const double dt = signal.grid().dt();
  const auto& y = signal.values();
  const auto ext = mirror_extend(y, std::size_t(window / 2));
  DerivativeResult r;
  r.method = "savgoldiff";
  r.phi = {{"window", window}, {"degree", degree}};
  r.smoothed.resize(n);
  r.derivative.resize(n);
  simd::correlate(ext, taps[0], r.smoothed);
  simd::correlate(ext, taps[1], r.derivative);
  for (double& v : r.derivative) v /= dt;
  if (post_smooth_sigma && *post_smooth_sigma > 0.0) {
    const std::size_t cap = n % 2 == 1 ? n : n - 1;
    const auto g = gaussian_taps(*post_smooth_sigma, cap);
    if (g.size() > 1) r.derivative = mirror_convolve(r.derivative, g);
    r.phi["sigma"] = *post_smooth_sigma;
  }
  return r;
}

// --- radial basis functions ---

DerivativeResult rbfdiff(const Signal& signal, double sigma, double rho, double damping) {
  if (!(sigma > 0.0)) throw ValidationError("rbf sigma must be > 0");
  if (!(rho > sigma)) throw ValidationError("rbf truncation radius rho must exceed sigma");
  if (!(damping >= 0.0)) throw ValidationError("rbf damping must be >= 0");
  const auto& t = signal.t();
  const auto& y = signal.values();
  const std::size_t n = y.size();

  std::vector<std::size_t> lo(n), hi(n);
  std::size_t width = 1;
  for (std::size_t i = 0, a = 0, b = 0; i < n; ++i) {
    while (t[i] - t[a] >= rho) ++a;
    if (b < i) b = i;
    while (b + 1 < n && t[b + 1] - t[i] < rho) ++b;
    lo[i] = a;
    hi[i] = b;
    width = std::max(width, b - a + 1);
  }
  auto kern = [&](std::size_t i, std::size_t k) {
    const double d = t[i] - t[k];
    return std::exp(-d * d / (2.0 * sigma * sigma));
  };

  linalg::BandedLeastSquares ls(n, width);
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.assign(hi[i] - lo[i] + 1, 0.0);
    for (std::size_t k = lo[i]; k <= hi[i]; ++k) row[k - lo[i]] = kern(i, k) + (k == i ? damping : 0.0);
    ls.add_row(lo[i], row, y[i]);
  }
  std::vector<double> c;
  try {
    c = ls.solve();
  } catch (const NumericError& e) {
    std::ostringstream os;
    os << "rbfdiff: banded solve failed (" << e.what() << ")";
    throw NumericError(os.str());
  }

  DerivativeResult r;
  r.method = "rbfdiff";
  r.phi = {{"sigma", sigma}, {"rho", rho}, {"damping", damping}};
  r.smoothed.assign(n, 0.0);
  r.derivative.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0, d = 0.0;
    for (std::size_t k = lo[i]; k <= hi[i]; ++k) {
      const double a = kern(i, k);
      s += a * c[k];
      d += -(t[i] - t[k]) / (sigma * sigma) * a * c[k];
    }
    r.smoothed[i] = s;
    r.derivative[i] = d;
  }
  return r;
}

}  // namespace ndiff
