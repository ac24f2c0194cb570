#include "ndiff/fd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ndiff/simd.hpp"

namespace ndiff {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Rows k = 0..S-1 of the Vandermonde system on distances scaled to [-1, 1];
// the scale is folded back into the right-hand side.
StencilCoefficients solve_vandermonde(std::span<const double> s, int nu, double dx) {
  const std::size_t S = s.size();
  if (nu < 0) throw ValidationError("derivative order must be non-negative");
  if (S <= std::size_t(nu))
    throw ValidationError("stencil of " + std::to_string(S) + " points cannot resolve derivative order " +
                          std::to_string(nu));
  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 0; j < S; ++j) {
    if (!std::isfinite(sorted[j])) throw ValidationError("non-finite stencil offset");
    if (j > 0 && sorted[j] == sorted[j - 1]) throw ValidationError("duplicate stencil offset");
  }
  if (!(dx > 0.0)) throw ValidationError("stencil spacing must be positive");
  double h = 0.0;
  for (double v : s) h = std::max(h, std::fabs(v));
  if (h == 0.0) h = 1.0;

  Eigen::MatrixXd V(S, S);
  for (std::size_t j = 0; j < S; ++j) {
    const double x = s[j] / h;
    double p = 1.0;
    for (std::size_t k = 0; k < S; ++k) {
      V(Eigen::Index(k), Eigen::Index(j)) = p;
      p *= x;
    }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Eigen::Index(S));
  rhs(nu) = factorial(nu) / std::pow(h * dx, nu);

  StencilCoefficients out;
  const Eigen::VectorXd c = V.colPivHouseholderQr().solve(rhs);
  out.c.assign(c.data(), c.data() + c.size());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
  const auto& sv = svd.singularValues();
  out.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  out.ill_conditioned = !(out.condition <= kStencilConditionWarn);
  return out;
}

// Accuracy of a centered (2p+1)-point stencil for derivative nu.
int centered_accuracy(int p, int nu) {
  const int a = 2 * p + 1 - nu;
  return a % 2 == 0 ? a : a + 1;
}

int centered_halfwidth(int nu, int order) {
  int p = 1;
  while (2 * p + 1 <= nu || centered_accuracy(p, nu) < order) ++p;
  return p;
}

void check_order(int order) {
  if (order < 2 || order > 8 || order % 2 != 0)
    throw ValidationError("accuracy order must be one of 2, 4, 6, 8");
}

double apply(const std::vector<double>& c, const std::vector<double>& y, std::size_t lo) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * y[lo + k];
  return s;
}

}  // namespace

StencilCoefficients stencil_coefficients(std::span<const double> offsets, int nu, double dx) {
  return solve_vandermonde(offsets, nu, dx);
}

StencilCoefficients irregular_coefficients(std::span<const double> distances, int nu) {
  return solve_vandermonde(distances, nu, 1.0);
}

std::pair<std::size_t, std::size_t> fd_stencil_range(std::size_t i, std::size_t n, int nu, int order) {
  const std::size_t p = std::size_t(centered_halfwidth(nu, order));
  const std::size_t p2 = std::size_t(centered_halfwidth(nu, 2));
  const std::size_t h = std::min(i, n - 1 - i);
  if (h >= p) return {i - p, i + p};
  if (h >= p2) return {i - h, i + h};
  const std::size_t S = std::size_t(nu) + 2;
  const std::ptrdiff_t want = std::ptrdiff_t(i) - std::ptrdiff_t(S / 2);
  const std::size_t lo = std::size_t(std::clamp<std::ptrdiff_t>(want, 0, std::ptrdiff_t(n - S)));
  return {lo, lo + S - 1};
}

DerivativeResult fd_derivative(const Signal& signal, int nu, int order) {
  if (nu < 1) throw ValidationError("fd_derivative: derivative order must be >= 1");
  check_order(order);
  const std::size_t n = signal.size();
  if (n < std::size_t(nu) + 2)
    throw ValidationError("fd_derivative: " + std::to_string(n) + " samples are too few for derivative order " +
                          std::to_string(nu));
  const auto& y = signal.values();
  const auto& t = signal.t();
  DerivativeResult r;
  r.method = "fd";
  r.phi = {{"nu", nu}, {"order", order}};
  r.smoothed = y;
  r.derivative.assign(n, 0.0);

  if (signal.grid().is_uniform()) {
    const double dt = signal.grid().dt();
    const std::size_t p = std::size_t(centered_halfwidth(nu, order));
    std::map<std::pair<long, long>, std::vector<double>> cache;
    auto coeffs = [&](std::size_t i, std::size_t lo, std::size_t hi) -> const std::vector<double>& {
      const std::pair<long, long> key{long(lo) - long(i), long(hi) - long(i)};
      auto it = cache.find(key);
      if (it == cache.end()) {
        std::vector<double> off;
        for (long k = key.first; k <= key.second; ++k) off.push_back(double(k));
        it = cache.emplace(key, stencil_coefficients(off, nu, dt).c).first;
      }
      return it->second;
    };
    std::size_t interior_lo = n, interior_hi = 0;
    if (n >= 2 * p + 1) {
      interior_lo = p;
      interior_hi = n - 1 - p;
      const auto& c = coeffs(p, 0, 2 * p);
      simd::correlate(y, c, std::span<double>(r.derivative).subspan(p, n - 2 * p));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= interior_lo && i <= interior_hi) continue;
      const auto [lo, hi] = fd_stencil_range(i, n, nu, order);
      r.derivative[i] = apply(coeffs(i, lo, hi), y, lo);
    }
    return r;
  }

  std::size_t flagged = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = fd_stencil_range(i, n, nu, order);
    std::vector<double> d;
    for (std::size_t j = lo; j <= hi; ++j) d.push_back(t[j] - t[i]);
    const auto sc = irregular_coefficients(d, nu);
    if (sc.ill_conditioned) {
      ++flagged;
      worst = std::max(worst, sc.condition);
    }
    r.derivative[i] = apply(sc.c, y, lo);
  }
  if (flagged) {
    std::ostringstream os;
    os << flagged << " irregular stencil solve(s) exceeded condition " << kStencilConditionWarn
       << " (worst " << worst << ")";
    r.diagnostics.warnings.push_back(os.str());
  }
  return r;
}

std::pair<std::vector<int>, std::vector<double>> iterated_fd_pass_stencil(std::size_t i, std::size_t n,
                                                                           int order, double dt) {
  check_order(order);
  if (n < 5) throw ValidationError("iterated_fd needs at least 5 samples");
  const std::size_t p = std::size_t(order / 2);
  const std::size_t h = std::min(i, n - 1 - i);
  std::vector<int> off;
  if (h >= 1) {
    const int w = int(std::min(h, p));
    for (int k = -w; k <= w; ++k) off.push_back(k);
  } else if (i == 0) {
    off = {0, 2, 4};  // spaced-out forward scheme keeps |c * dt| <= 1
  } else {
    off = {-4, -2, 0};
  }
  std::vector<double> s(off.begin(), off.end());
  return {off, stencil_coefficients(s, 1, dt).c};
}

DerivativeResult iterated_fd(const Signal& signal, int order, int iterations) {
  require_uniform(signal, "iterated_fd");
  check_order(order);
  if (iterations < 0) throw ValidationError("iterated_fd: iterations must be >= 0");
  const std::size_t n = signal.size();
  const auto& t = signal.t();
  const double dt = signal.grid().dt();
  std::vector<double> x = signal.values();

  if (iterations > 0) {
    if (n < 5) throw ValidationError("iterated_fd needs at least 5 samples");
    const std::size_t p = std::size_t(order / 2);
    std::vector<std::pair<std::vector<int>, std::vector<double>>> edge;
    std::vector<std::size_t> edge_idx;
    for (std::size_t i = 0; i < n; ++i)
      if (std::min(i, n - 1 - i) < p) {
        edge.push_back(iterated_fd_pass_stencil(i, n, order, dt));
        edge_idx.push_back(i);
      }
    const auto centered = (n >= 2 * p + 1) ? iterated_fd_pass_stencil(p, n, order, dt).second
                                           : std::vector<double>{};
    std::vector<double> d(n);
    for (int it = 0; it < iterations; ++it) {
      if (!centered.empty()) simd::correlate(x, centered, std::span<double>(d).subspan(p, n - 2 * p));
      for (std::size_t e = 0; e < edge.size(); ++e) {
        const std::size_t i = edge_idx[e];
        double s = 0.0;
        for (std::size_t k = 0; k < edge[e].first.size(); ++k)
          s += edge[e].second[k] * x[std::size_t(std::ptrdiff_t(i) + edge[e].first[k])];
        d[i] = s;
      }
      const double anchor = mean(x);
      auto integral = cumtrapz(t, d);
      const double mu = anchor - mean(integral);
      for (std::size_t i = 0; i < n; ++i) x[i] = integral[i] + mu;
    }
  }

  DerivativeResult r = fd_derivative(signal.with_values(x), 1, order);
  r.method = "iterfd";
  r.phi = {{"order", order}, {"iterations", iterations}};
  r.smoothed = std::move(x);
  return r;
}

}  // namespace ndiff
