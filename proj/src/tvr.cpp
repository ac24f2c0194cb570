#include "ndiff/tvr.hpp"

#include <algorithm>
#include <cmath>

#include "ndiff/fd.hpp"
#include "ndiff/linalg.hpp"
#include "ndiff/simd.hpp"
#include "ndiff/smoothers.hpp"

namespace ndiff {

std::vector<double> BandRows::apply(std::span<const double> x) const {
  std::vector<double> out(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    const auto& v = values[i];
    out[i] = simd::dot(std::span<const double>(v), x.subspan(first[i], v.size()));
  }
  return out;
}

std::vector<double> BandRows::apply_transpose(std::span<const double> w) const {
  std::vector<double> out(cols, 0.0);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t k = 0; k < values[i].size(); ++k) out[first[i] + k] += values[i][k] * w[i];
  return out;
}

namespace {

BandRows multiply(const BandRows& a, const BandRows& b) {
  BandRows c;
  c.cols = b.cols;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::size_t lo = b.cols, hi = 0;
    for (std::size_t k = 0; k < a.values[i].size(); ++k) {
      const std::size_t r = a.first[i] + k;
      lo = std::min(lo, b.first[r]);
      hi = std::max(hi, b.first[r] + b.values[r].size());
    }
    std::vector<double> row(hi - lo, 0.0);
    for (std::size_t k = 0; k < a.values[i].size(); ++k) {
      const std::size_t r = a.first[i] + k;
      for (std::size_t j = 0; j < b.values[r].size(); ++j)
        row[b.first[r] + j - lo] += a.values[i][k] * b.values[r][j];
    }
    c.first.push_back(lo);
    c.values.push_back(std::move(row));
  }
  return c;
}

double l1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::fabs(x);
  return s;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

BandRows fd_matrix(std::size_t n) {
  if (n < 3) throw ValidationError("FD matrix needs at least 3 samples");
  BandRows d;
  d.cols = n;
  d.first.push_back(0);
  d.values.push_back({-1.5, 2.0, -0.5});
  for (std::size_t i = 1; i + 1 < n; ++i) {
    d.first.push_back(i - 1);
    d.values.push_back({-0.5, 0.0, 0.5});
  }
  d.first.push_back(n - 3);
  d.values.push_back({0.5, -2.0, 1.5});
  return d;
}

BandRows tv_operator(std::size_t n, int nu) {
  if (nu < 1 || nu > 3) throw ValidationError("tvr order nu must be 1, 2 or 3");
  const BandRows d = fd_matrix(n);
  BandRows g = d;
  for (int k = 1; k < nu; ++k) g = multiply(d, g);
  BandRows delta;
  delta.cols = n;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    delta.first.push_back(i);
    delta.values.push_back({-1.0, 1.0});
  }
  return multiply(delta, g);
}

double tvr_objective(const Signal& signal, std::span<const double> x, int nu, double gamma) {
  const std::size_t n = signal.size();
  const double dt = signal.grid().dt();
  const auto gx = tv_operator(n, nu).apply(x);
  return sq_dist(signal.values(), x) + gamma / (double(n) * std::pow(dt, nu)) * l1(gx);
}

namespace {

struct TvrSolve {
  std::vector<double> x;
  double gap = INFINITY;
  int iterations = 0;
  bool converged = false;
};

// Normalized problem: min ||y - x||^2 + kappa * ||G x||_1.
struct TvrProblem {
  const std::vector<double>& y;
  const BandRows& g;
  double kappa;
  double tol;
  int max_iter;

  double primal(std::span<const double> x) const { return sq_dist(y, x) + kappa * l1(g.apply(x)); }
  std::size_t n() const { return y.size(); }
  std::size_t m() const { return g.rows(); }
};

TvrSolve solve_admm(const TvrProblem& pr) {
  const auto& y = pr.y;
  const auto& g = pr.g;
  const double kappa = pr.kappa;
  const std::size_t n = pr.n(), m = pr.m();
  std::size_t bw = 0;
  for (std::size_t i = 0; i < m; ++i) bw = std::max(bw, g.values[i].size() - 1);

  auto factor = [&](double rho) {
    linalg::BandedSpd a(n, bw);
    for (std::size_t i = 0; i < n; ++i) a.add(i, i, 2.0);
    for (std::size_t i = 0; i < m; ++i) {
      const auto& v = g.values[i];
      for (std::size_t p = 0; p < v.size(); ++p)
        for (std::size_t q = 0; q <= p; ++q) a.add(g.first[i] + p, g.first[i] + q, rho * v[p] * v[q]);
    }
    a.factor();
    return a;
  };
  const auto gy = g.apply(y);

  std::vector<double> x = y, z = gy, u(m, 0.0), zprev(m), gx;
  double rho = 1.0;
  linalg::BandedSpd a = factor(rho);
  TvrSolve out;
  out.x = y;
  double best_p = pr.primal(y), best_dual = -INFINITY;
  const double res_tol = pr.tol * std::sqrt(double(n));
  int it = 0, since_rho = 0;

  for (it = 1; it <= pr.max_iter; ++it) {
    // x update: (2I + rho G'G) x = 2y + rho G'(z - u)
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) w[i] = z[i] - u[i];
    auto rhs = g.apply_transpose(w);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = 2.0 * y[i] + rho * rhs[i];
    a.solve_in_place(rhs);
    x = std::move(rhs);
    gx = g.apply(x);

    zprev = z;
    for (std::size_t i = 0; i < m; ++i) z[i] = gx[i] + u[i];
    simd::soft_threshold(z, kappa / rho, z);
    double rp = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = gx[i] - z[i];
      u[i] += e;
      rp += e * e;
    }
    rp = std::sqrt(rp);
    for (std::size_t i = 0; i < m; ++i) w[i] = z[i] - zprev[i];
    const auto gtw = g.apply_transpose(w);
    double rd = 0.0;
    for (double v : gtw) rd += v * v;
    rd = rho * std::sqrt(rd);

    if (it % 10 == 0 || it == pr.max_iter) {
      const double p = pr.primal(x);
      if (p < best_p) {
        best_p = p;
        out.x = x;
      }
      // Dual point from the scaled multiplier, clipped into the feasible box.
      std::vector<double> dw(m);
      for (std::size_t i = 0; i < m; ++i) dw[i] = std::clamp(rho * u[i], -kappa, kappa);
      const auto gtd = g.apply_transpose(dw);
      double quad = 0.0;
      for (double v : gtd) quad += v * v;
      const double dual = simd::dot(std::span<const double>(dw), std::span<const double>(gy)) - 0.25 * quad;
      best_dual = std::max(best_dual, dual);
      // The dual point also yields a primal candidate.
      std::vector<double> xd(n);
      for (std::size_t i = 0; i < n; ++i) xd[i] = y[i] - 0.5 * gtd[i];
      const double pd = pr.primal(xd);
      if (pd < best_p) {
        best_p = pd;
        out.x = xd;
      }
      out.gap = best_p - best_dual;
      if (out.gap <= pr.tol * (1.0 + std::fabs(best_p)) && rp <= res_tol && rd <= res_tol) {
        out.converged = true;
        break;
      }
    }

    // Residual balancing, rate limited since each change refactors.
    if (++since_rho >= 25) {
      double f = 1.0;
      if (rp > 10.0 * rd) f = 2.0;
      else if (rd > 10.0 * rp) f = 0.5;
      if (f != 1.0) {
        rho *= f;
        for (double& v : u) v /= f;
        a = factor(rho);
        since_rho = 0;
      }
    }
  }
  out.iterations = std::min(it, pr.max_iter);
  return out;
}

// Primal-dual interior point on the dual box QP
//   max b'w - 1/2 w'Hw  s.t. |w_i| <= kappa,  H = G G' / 2,  b = G y,
// with the primal recovered as x = y - G'w / 2. Each Newton step is one
// banded Cholesky of H plus a diagonal.
TvrSolve solve_interior_point(const TvrProblem& pr) {
  const auto& y = pr.y;
  const auto& g = pr.g;
  const double kappa = pr.kappa;
  const std::size_t n = pr.n(), m = pr.m();

  // Lower band of H.
  std::size_t bw = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m && g.first[j] < g.first[i] + g.values[i].size(); ++j) bw = std::max(bw, j - i);
  std::vector<double> hband(m * (bw + 1), 0.0);  // hband[i * (bw + 1) + (i - j)], j <= i
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i >= bw ? i - bw : 0; j <= i; ++j) {
      const std::size_t lo = std::max(g.first[i], g.first[j]);
      const std::size_t hi = std::min(g.first[i] + g.values[i].size(), g.first[j] + g.values[j].size());
      double s = 0.0;
      for (std::size_t c = lo; c < hi; ++c) s += g.values[i][c - g.first[i]] * g.values[j][c - g.first[j]];
      hband[i * (bw + 1) + (i - j)] = 0.5 * s;
    }
  auto hmul = [&](const std::vector<double>& w) {
    const auto gtw = g.apply_transpose(w);
    auto h = g.apply(gtw);
    for (double& v : h) v *= 0.5;
    return h;
  };

  const auto b = g.apply(y);
  std::vector<double> w(m, 0.0), mu1(m, 1.0), mu2(m, 1.0), f1(m, -kappa), f2(m, -kappa);
  auto hw = hmul(w);
  double t = 1e-10, step = INFINITY;
  constexpr double kAlpha = 0.01, kBeta = 0.5, kMu = 2.0;
  constexpr int kMaxLs = 40;

  auto residual = [&](const std::vector<double>& hw_, const std::vector<double>& w_, const std::vector<double>& m1,
                      const std::vector<double>& m2, double tt) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double rd = hw_[i] - b[i] + m1[i] - m2[i];
      const double c1 = -m1[i] * (w_[i] - kappa) - 1.0 / tt;
      const double c2 = -m2[i] * (-w_[i] - kappa) - 1.0 / tt;
      s += rd * rd + c1 * c1 + c2 * c2;
    }
    return std::sqrt(s);
  };

  TvrSolve out;
  out.x = y;
  double best_p = pr.primal(y), best_dual = 0.0;  // w = 0 is dual feasible with value 0
  std::vector<double> dw(m), dmu1(m), dmu2(m), xw(n);
  int it = 0;
  for (it = 1; it <= pr.max_iter; ++it) {
    const auto gtw = g.apply_transpose(w);
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      xw[i] = y[i] - 0.5 * gtw[i];
      quad += gtw[i] * gtw[i];
    }
    const double dual = simd::dot(std::span<const double>(b), std::span<const double>(w)) - 0.25 * quad;
    best_dual = std::max(best_dual, dual);
    const double p = pr.primal(xw);
    if (p < best_p) {
      best_p = p;
      out.x = xw;
    }
    out.gap = best_p - best_dual;
    // Relative gap; the data are scaled to unit range so the floor is absolute.
    if (out.gap <= pr.tol * std::max(std::fabs(best_p), 1e-8)) {
      out.converged = true;
      break;
    }
    if (step >= 0.2) t = std::max(2.0 * double(m) * kMu / std::max(out.gap, 1e-300), 1.2 * t);

    // Newton system (H + diag(-mu1/f1 - mu2/f2)) dw = b - Hw + (1/f1 - 1/f2) / t.
    linalg::BandedSpd a(m, bw);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k <= std::min(i, bw); ++k) {
        double v = hband[i * (bw + 1) + k];
        if (k == 0) v += -mu1[i] / f1[i] - mu2[i] / f2[i];
        if (v != 0.0) a.add(i, i - k, v);
      }
      dw[i] = b[i] - hw[i] + (1.0 / f1[i] - 1.0 / f2[i]) / t;
    }
    // Near the accuracy floor the barrier terms overflow; keep the best point.
    try {
      a.factor();
    } catch (const NumericError&) {
      break;
    }
    a.solve_in_place(dw);
    if (!std::all_of(dw.begin(), dw.end(), [](double v) { return std::isfinite(v); })) break;
    for (std::size_t i = 0; i < m; ++i) {
      dmu1[i] = -mu1[i] - 1.0 / (t * f1[i]) - mu1[i] * dw[i] / f1[i];
      dmu2[i] = -mu2[i] - 1.0 / (t * f2[i]) + mu2[i] * dw[i] / f2[i];
    }

    // Largest step keeping multipliers positive and the box strictly feasible.
    step = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (dmu1[i] < 0.0) step = std::min(step, -0.99 * mu1[i] / dmu1[i]);
      if (dmu2[i] < 0.0) step = std::min(step, -0.99 * mu2[i] / dmu2[i]);
      if (dw[i] > 0.0) step = std::min(step, -0.99 * f1[i] / dw[i]);
      if (dw[i] < 0.0) step = std::min(step, 0.99 * f2[i] / dw[i]);
    }
    const auto hdw = hmul(dw);
    const double r0 = residual(hw, w, mu1, mu2, t);
    std::vector<double> nw(m), nm1(m), nm2(m), nhw(m);
    for (int ls = 0; ls < kMaxLs; ++ls) {
      for (std::size_t i = 0; i < m; ++i) {
        nw[i] = w[i] + step * dw[i];
        nm1[i] = mu1[i] + step * dmu1[i];
        nm2[i] = mu2[i] + step * dmu2[i];
        nhw[i] = hw[i] + step * hdw[i];
      }
      if (residual(nhw, nw, nm1, nm2, t) <= (1.0 - kAlpha * step) * r0) break;
      step *= kBeta;
    }
    w.swap(nw);
    mu1.swap(nm1);
    mu2.swap(nm2);
    hw.swap(nhw);
    for (std::size_t i = 0; i < m; ++i) {
      f1[i] = w[i] - kappa;
      f2[i] = -w[i] - kappa;
    }
  }
  out.iterations = std::min(it, pr.max_iter);
  return out;
}

}  // namespace

DerivativeResult tvrdiff(const Signal& signal, const TvrSpec& spec) {
  require_uniform(signal, "tvrdiff");
  if (spec.nu < 1 || spec.nu > 3) throw ValidationError("tvr order nu must be 1, 2 or 3");
  if (!(spec.gamma > 0.0)) throw ValidationError("tvr gamma must be > 0");
  if (!(spec.tol > 0.0)) throw ValidationError("tvr tol must be > 0");
  if (spec.max_iter < 1) throw ValidationError("tvr max_iter must be >= 1");
  const std::size_t n = signal.size();
  if (n < std::size_t(spec.nu) + 3) throw ValidationError("too few samples for tvr order");
  const double dt = signal.grid().dt();
  const auto& y0 = signal.values();

  DerivativeResult r;
  r.method = "tvrdiff";
  r.phi = {{"nu", spec.nu}, {"gamma", spec.gamma}};

  // Work on a centered, unit-range copy; the penalty weight scales with it.
  const double shift = mean(y0);
  const auto [mn, mx] = std::minmax_element(y0.begin(), y0.end());
  const double scale = *mx - *mn;
  if (!(scale > 0.0)) {
    r.smoothed = y0;
    r.derivative.assign(n, 0.0);
    r.phi["gap"] = 0.0;
    return r;
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = (y0[i] - shift) / scale;
  const BandRows g = tv_operator(n, spec.nu);
  const TvrProblem pr{y, g, spec.gamma / (double(n) * std::pow(dt, spec.nu)) / scale, spec.tol, spec.max_iter};
  const TvrSolve sol = spec.solver == TvrSolver::Admm ? solve_admm(pr) : solve_interior_point(pr);

  r.diagnostics.iterations = sol.iterations;
  r.diagnostics.converged = sol.converged;
  if (!sol.converged) r.diagnostics.warnings.push_back("tvr solver stopped before the duality gap reached tol; returning best iterate");
  r.phi["gap"] = sol.gap * scale * scale;

  r.smoothed.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.smoothed[i] = sol.x[i] * scale + shift;
  r.derivative = fd_derivative(signal.with_values(r.smoothed), 1, 2).derivative;
  return r;
}

DerivativeResult smooth_accel_tvr(const Signal& signal, const TvrSpec& spec) {
  if (spec.nu != 2) throw ValidationError("smooth_accel_tvr requires nu = 2");
  auto r = tvrdiff(signal, spec);
  r.method = "smooth_accel_tvr";
  if (spec.soften_sigma) {
    if (*spec.soften_sigma < 0.0) throw ValidationError("soften_sigma must be >= 0");
    const auto taps = gaussian_taps(*spec.soften_sigma, 2 * signal.size() - 1);
    if (taps.size() > 1 && taps.size() / 2 < signal.size()) r.derivative = mirror_convolve(r.derivative, taps);
    r.phi["soften_sigma"] = *spec.soften_sigma;
  }
  return r;
}

}  // namespace ndiff
