#include <algorithm>
#include <cmath>
#include <set>

#include "ndiff/linalg.hpp"
#include "ndiff/smoothers.hpp"

namespace ndiff {

std::size_t bspline_basis(std::span<const double> knots, int degree, double x, int deriv, std::span<double> out) {
  const std::size_t p = std::size_t(degree);
  const std::size_t nk = knots.size();
  if (nk < 2 * p + 2) throw ValidationError("knot vector too short for degree");
  if (out.size() < p + 1) throw ValidationError("basis output buffer too small");
  // Span mu with knots[mu] <= x < knots[mu + 1], restricted to the valid range.
  const std::size_t lo = p, hi = nk - p - 2;
  std::size_t mu;
  if (x >= knots[hi + 1])
    mu = hi;
  else if (x <= knots[lo])
    mu = lo;
  else
    mu = std::size_t(std::upper_bound(knots.begin() + std::ptrdiff_t(lo), knots.begin() + std::ptrdiff_t(hi + 1), x) -
                     knots.begin()) - 1;
  while (mu > lo && knots[mu] == knots[mu + 1]) --mu;

  // Triangular table of basis values and knot differences (de Boor / Cox).
  std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
  std::vector<double> left(p + 1), right(p + 1);
  ndu[0][0] = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    left[j] = x - knots[mu + 1 - j];
    right[j] = knots[mu + j] - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double tmp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    ndu[j][j] = saved;
  }
  if (deriv == 0) {
    for (std::size_t j = 0; j <= p; ++j) out[j] = ndu[j][p];
    return mu - p;
  }
  if (deriv < 0) throw ValidationError("negative derivative order");
  const std::size_t n = std::size_t(deriv);
  if (n > p) {
    std::fill(out.begin(), out.begin() + std::ptrdiff_t(p + 1), 0.0);
    return mu - p;
  }
  std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r <= p; ++r) {
    std::size_t s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    double dv = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      double d = 0.0;
      const std::ptrdiff_t rk = std::ptrdiff_t(r) - std::ptrdiff_t(k);
      const std::ptrdiff_t pk = std::ptrdiff_t(p) - std::ptrdiff_t(k);
      if (rk >= 0) {
        a[s2][0] = a[s1][0] / ndu[std::size_t(pk + 1)][std::size_t(rk)];
        d = a[s2][0] * ndu[std::size_t(rk)][std::size_t(pk)];
      }
      const std::ptrdiff_t j1 = rk >= -1 ? 1 : -rk;
      const std::ptrdiff_t j2 = (std::ptrdiff_t(r) - 1 <= pk) ? std::ptrdiff_t(k) - 1 : std::ptrdiff_t(p) - std::ptrdiff_t(r);
      for (std::ptrdiff_t j = j1; j <= j2; ++j) {
        a[s2][std::size_t(j)] = (a[s1][std::size_t(j)] - a[s1][std::size_t(j - 1)]) /
                                ndu[std::size_t(pk + 1)][std::size_t(rk + j)];
        d += a[s2][std::size_t(j)] * ndu[std::size_t(rk + j)][std::size_t(pk)];
      }
      if (std::ptrdiff_t(r) <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[std::size_t(pk + 1)][r];
        d += a[s2][k] * ndu[r][std::size_t(pk)];
      }
      dv = d;
      std::swap(s1, s2);
    }
    out[r] = dv;
  }
  double f = double(p);
  for (std::size_t k = 2; k <= n; ++k) f *= double(p + 1 - k);
  for (std::size_t r = 0; r <= p; ++r) out[r] *= f;
  return mu - p;
}

namespace {

struct SplineFit {
  std::vector<double> knots;
  std::vector<double> coef;
  double ssr = 0.0;
};

std::vector<double> full_knots(double a, double b, int degree, const std::vector<double>& interior) {
  std::vector<double> k(std::size_t(degree) + 1, a);
  k.insert(k.end(), interior.begin(), interior.end());
  k.insert(k.end(), std::size_t(degree) + 1, b);
  return k;
}

// Gauss-Legendre nodes/weights on [-1, 1] for up to 5 points.
void gauss_legendre(int q, std::vector<double>& x, std::vector<double>& w) {
  switch (q) {
    case 1: x = {0.0}; w = {2.0}; break;
    case 2: x = {-0.5773502691896257, 0.5773502691896257}; w = {1.0, 1.0}; break;
    case 3: x = {-0.7745966692414834, 0.0, 0.7745966692414834};
            w = {0.5555555555555556, 0.8888888888888888, 0.5555555555555556}; break;
    case 4: x = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
            w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538}; break;
    default: x = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
             w = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891};
  }
}

// Penalized least squares min ||B a - y||^2 + lambda * int (S'')^2, with the
// penalty written as sum of squares at Gauss points so that Givens QR applies.
SplineFit fit(const std::vector<double>& t, const std::vector<double>& y, int degree,
              const std::vector<double>& knots, double lambda) {
  const std::size_t p = std::size_t(degree);
  const std::size_t m = knots.size() - p - 1;
  linalg::BandedLeastSquares ls(m, p + 1);
  std::vector<double> row(p + 1);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::size_t first = bspline_basis(knots, degree, t[i], 0, row);
    ls.add_row(first, row, y[i]);
  }
  if (lambda > 0.0 && degree >= 2) {
    std::vector<double> gx, gw;
    gauss_legendre(std::max(1, degree - 1), gx, gw);
    const double sl = std::sqrt(lambda);
    for (std::size_t j = p; j + 1 < knots.size() - p; ++j) {
      const double a = knots[j], b = knots[j + 1];
      if (!(b > a)) continue;
      const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (std::size_t g = 0; g < gx.size(); ++g) {
        const std::size_t first = bspline_basis(knots, degree, mid + half * gx[g], 2, row);
        const double s = sl * std::sqrt(gw[g] * half);
        for (double& v : row) v *= s;
        ls.add_row(first, row, 0.0);
      }
    }
  }
  SplineFit f;
  f.knots = knots;
  f.coef = ls.solve();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::size_t first = bspline_basis(knots, degree, t[i], 0, row);
    double s = 0.0;
    for (std::size_t k = 0; k <= p; ++k) s += row[k] * f.coef[first + k];
    f.ssr += (s - y[i]) * (s - y[i]);
  }
  return f;
}

void evaluate(const SplineFit& f, int degree, const std::vector<double>& t, std::vector<double>& val,
              std::vector<double>& der) {
  const std::size_t p = std::size_t(degree);
  std::vector<double> row(p + 1);
  val.assign(t.size(), 0.0);
  der.assign(t.size(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::size_t first = bspline_basis(f.knots, degree, t[i], 0, row);
    for (std::size_t k = 0; k <= p; ++k) val[i] += row[k] * f.coef[first + k];
    first = bspline_basis(f.knots, degree, t[i], 1, row);
    for (std::size_t k = 0; k <= p; ++k) der[i] += row[k] * f.coef[first + k];
  }
}

// Interior knots that give a square, Schoenberg-Whitney feasible
// interpolation problem: data points for odd degree, midpoints for even.
std::vector<double> candidate_knots(const std::vector<double>& t, int degree) {
  const std::size_t n = t.size();
  const std::size_t count = n - std::size_t(degree) - 1;
  std::vector<double> k;
  k.reserve(count);
  if (degree % 2 == 1) {
    const std::size_t skip = std::size_t(degree - 1) / 2;
    for (std::size_t j = 0; j < count; ++j) k.push_back(t[1 + skip + j]);
  } else {
    const std::size_t skip = std::size_t(degree) / 2;
    for (std::size_t j = 0; j < count; ++j) k.push_back(0.5 * (t[skip + j] + t[skip + j + 1]));
  }
  return k;
}

}  // namespace

DerivativeResult splinediff(const Signal& signal, const SplineSpec& spec) {
  if (spec.degree < 1 || spec.degree > 5) throw ValidationError("spline degree must be in [1, 5]");
  if (spec.iterations < 1) throw ValidationError("spline iterations must be >= 1");
  if (spec.mode == SplineMode::Lambda && !(spec.lambda >= 0.0)) throw ValidationError("spline lambda must be >= 0");
  if (spec.mode == SplineMode::Bound && !(spec.s >= 0.0)) throw ValidationError("spline bound s must be >= 0");
  const auto& t = signal.t();
  const std::size_t n = t.size();
  if (n < std::size_t(spec.degree) + 1) throw ValidationError("too few samples for spline degree");

  const auto candidates = candidate_knots(t, spec.degree);
  std::vector<double> y = signal.values();
  std::vector<double> val, der;
  DerivativeResult r;
  r.method = "splinediff";
  r.phi = {{"degree", spec.degree}, {"iterations", spec.iterations}};

  for (int it = 0; it < spec.iterations; ++it) {
    SplineFit f;
    if (spec.mode == SplineMode::Lambda) {
      f = fit(t, y, spec.degree, full_knots(t.front(), t.back(), spec.degree, candidates), spec.lambda);
    } else {
      std::set<std::size_t> used;
      auto knots_of = [&] {
        std::vector<double> in;
        for (std::size_t j : used) in.push_back(candidates[j]);
        return full_knots(t.front(), t.back(), spec.degree, in);
      };
      f = fit(t, y, spec.degree, knots_of(), 0.0);
      while (f.ssr > spec.s && used.size() < candidates.size()) {
        evaluate(f, spec.degree, t, val, der);
        std::size_t worst = 0;
        double wr = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double e = std::fabs(val[i] - y[i]);
          if (e > wr) {
            wr = e;
            worst = i;
          }
        }
        // Nearest unused candidate to the worst sample.
        std::size_t best = candidates.size();
        double bd = INFINITY;
        for (std::size_t j = 0; j < candidates.size(); ++j) {
          if (used.count(j)) continue;
          const double dd = std::fabs(candidates[j] - t[worst]);
          if (dd < bd) {
            bd = dd;
            best = j;
          }
        }
        used.insert(best);
        f = fit(t, y, spec.degree, knots_of(), 0.0);
      }
      if (f.ssr > spec.s) {
        r.diagnostics.converged = false;
        r.diagnostics.warnings.push_back("residual bound not met with the maximum knot count");
      }
      r.phi["knots"] = double(used.size());
    }
    evaluate(f, spec.degree, t, val, der);
    y = val;
  }
  if (spec.mode == SplineMode::Lambda)
    r.phi["lambda"] = spec.lambda;
  else
    r.phi["s"] = spec.s;
  r.smoothed = std::move(val);
  r.derivative = std::move(der);
  return r;
}

}  // namespace ndiff
