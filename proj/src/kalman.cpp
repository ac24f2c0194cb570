#include "ndiff/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "ndiff/linalg.hpp"

namespace ndiff {

namespace {

void symmetrize(Mat& p) { p = 0.5 * (p + p.transpose()); }

void check_psd(const Mat& m, const char* name) {
  if (m.rows() != m.cols()) throw ValidationError(std::string(name) + " must be square");
  if (m.size() == 0) return;
  if (!m.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1e-300))
    throw ValidationError(std::string(name) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  const auto ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300))
    throw ValidationError(std::string(name) + " must be positive semidefinite");
}

/// Symmetric R^(-1/2). Throws NumericError when R is singular.
Mat inv_sqrt(const Mat& r, const char* name) {
  Eigen::SelfAdjointEigenSolver<Mat> es(r);
  const Vec ev = es.eigenvalues();
  const double mx = ev.cwiseAbs().maxCoeff();
  if (!(ev.minCoeff() > 1e-14 * mx)) throw NumericError(std::string(name) + " is singular; cannot whiten");
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

Eigen::LDLT<Mat> factor_spd(const Mat& s, const char* what) {
  Eigen::LDLT<Mat> f(s);
  if (f.info() != Eigen::Success || !f.isPositive() || !(f.rcond() > 1e-15)) {
    std::ostringstream os;
    os << what << " is singular or indefinite";
    throw NumericError(os.str());
  }
  return f;
}

Vec input_at(const std::vector<Vec>& u, std::size_t n, Eigen::Index m) {
  if (u.empty()) return Vec::Zero(m);
  return u[n];
}

void check_series(const LinearGaussianModel& model, const Dynamics& dyn, const std::vector<Vec>& y,
                  const std::vector<Vec>& u) {
  model.validate();
  const std::size_t n = y.size();
  if (n == 0) throw ValidationError("no measurements");
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i].size() != model.C.rows()) throw ValidationError("measurement dimension mismatch", std::ptrdiff_t(i));
    if (!y[i].allFinite()) throw ValidationError("non-finite measurement", std::ptrdiff_t(i));
  }
  if (!u.empty()) {
    if (u.size() != n) throw ValidationError("inputs must be empty or match the measurement count");
    for (std::size_t i = 0; i < n; ++i)
      if (u[i].size() != model.B.cols()) throw ValidationError("input dimension mismatch", std::ptrdiff_t(i));
  }
  if (dyn.A.size() != 1 && dyn.A.size() != n) throw ValidationError("per-step dynamics must match the step count");
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

void LinearGaussianModel::validate() const {
  const auto d = A.rows();
  if (A.cols() != d || d == 0) throw ValidationError("A must be square and non-empty");
  if (B.rows() != d) throw ValidationError("B must have as many rows as A");
  if (C.cols() != d || C.rows() == 0) throw ValidationError("C must have as many columns as A");
  if (Q.rows() != d || Q.cols() != d) throw ValidationError("Q must match A");
  if (R.rows() != C.rows() || R.cols() != C.rows()) throw ValidationError("R must match the measurement size");
  if (x0.size() != d) throw ValidationError("x0 must match A");
  if (P0.rows() != d || P0.cols() != d) throw ValidationError("P0 must match A");
  check_psd(Q, "Q");
  check_psd(R, "R");
  check_psd(P0, "P0");
}

Dynamics Dynamics::constant(const LinearGaussianModel& m) { return Dynamics{{m.A}, {m.B}, {m.Q}}; }

FilterResult kalman_filter(const LinearGaussianModel& model, const std::vector<Vec>& measurements,
                           const std::vector<Vec>& inputs) {
  return kalman_filter(model, Dynamics::constant(model), measurements, inputs);
}

FilterResult kalman_filter(const LinearGaussianModel& model, const Dynamics& dyn,
                           const std::vector<Vec>& measurements, const std::vector<Vec>& inputs) {
  check_series(model, dyn, measurements, inputs);
  const std::size_t n = measurements.size();
  const auto d = model.A.rows();
  const Mat I = Mat::Identity(d, d);
  FilterResult f;
  f.x.reserve(n);
  f.P.reserve(n);
  f.xp.reserve(n);
  f.Pp.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Vec xp;
    Mat Pp;
    if (k == 0) {
      xp = model.x0;
      Pp = model.P0;
    } else {
      const Mat& A = dyn.a(k);
      xp = A * f.x.back() + dyn.b(k) * input_at(inputs, k, model.B.cols());
      Pp = A * f.P.back() * A.transpose() + dyn.q(k);
      symmetrize(Pp);
    }
    const Mat S = model.C * Pp * model.C.transpose() + model.R;
    const auto ldlt = factor_spd(S, "innovation covariance");
    const Mat K = ldlt.solve(model.C * Pp).transpose();
    Vec x = xp + K * (measurements[k] - model.C * xp);
    Mat P = (I - K * model.C) * Pp;
    symmetrize(P);
    f.xp.push_back(std::move(xp));
    f.Pp.push_back(std::move(Pp));
    f.x.push_back(std::move(x));
    f.P.push_back(std::move(P));
  }
  return f;
}

SmoothResult rts_smooth(const LinearGaussianModel& model, const FilterResult& filter) {
  return rts_smooth(Dynamics::constant(model), filter);
}

SmoothResult rts_smooth(const Dynamics& dyn, const FilterResult& filter) {
  const std::size_t n = filter.x.size();
  if (n == 0) throw ValidationError("empty filter history");
  if (filter.P.size() != n || filter.xp.size() != n || filter.Pp.size() != n)
    throw ValidationError("inconsistent filter history");
  SmoothResult s;
  s.x.resize(n);
  s.P.resize(n);
  s.x[n - 1] = filter.x[n - 1];
  s.P[n - 1] = filter.P[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) {
    const Mat& A = dyn.a(k + 1);
    const auto ldlt = factor_spd(filter.Pp[k + 1], "a priori covariance");
    // L = P A' Pp^-1, computed as (Pp^-1 A P)'.
    const Mat L = ldlt.solve(A * filter.P[k]).transpose();
    s.x[k] = filter.x[k] + L * (s.x[k + 1] - filter.xp[k + 1]);
    s.P[k] = filter.P[k] + L * (s.P[k + 1] - filter.Pp[k + 1]) * L.transpose();
    symmetrize(s.P[k]);
  }
  return s;
}

LinearGaussianModel constant_derivative_model(int nu, double dt, double q, double r, double y0) {
  if (nu < 1 || nu > 3) throw ValidationError("constant-derivative order nu must be 1, 2 or 3");
  if (!(dt > 0.0) || !(q > 0.0) || !(r > 0.0)) throw ValidationError("dt, q and r must be > 0");
  const int d = nu + 1;
  LinearGaussianModel m;
  m.A = Mat::Zero(d, d);
  m.Q = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (j >= i) m.A(i, j) = std::pow(dt, j - i) / factorial(j - i);
      const int a = d - 1 - i, b = d - 1 - j;
      m.Q(i, j) = q * std::pow(dt, a + b + 1) / (factorial(a) * factorial(b) * (a + b + 1));
    }
  m.B = Mat::Zero(d, 0);
  m.C = Mat::Zero(1, d);
  m.C(0, 0) = 1.0;
  m.R = Mat::Constant(1, 1, r);
  m.x0 = Vec::Zero(d);
  m.x0(0) = y0;
  // Proportional to r so that only q / r matters; 10 I at r = 0.01.
  m.P0 = 1e3 * r * Mat::Identity(d, d);
  return m;
}

ContinuousModel constant_derivative_continuous(int nu, double q) {
  if (nu < 1 || nu > 3) throw ValidationError("constant-derivative order nu must be 1, 2 or 3");
  if (!(q > 0.0)) throw ValidationError("q must be > 0");
  const int d = nu + 1;
  ContinuousModel cm;
  cm.Ac = Mat::Zero(d, d);
  for (int i = 0; i + 1 < d; ++i) cm.Ac(i, i + 1) = 1.0;
  cm.Bc = Mat::Zero(d, 0);
  cm.Qc = Mat::Zero(d, d);
  cm.Qc(d - 1, d - 1) = q;
  return cm;
}

Mat expm(const Mat& a) {
  if (a.rows() != a.cols()) throw ValidationError("expm needs a square matrix");
  if (!a.allFinite()) throw NumericError("expm of a non-finite matrix");
  const auto n = a.rows();
  if (n == 0) return a;
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm > 0.5) s = int(std::ceil(std::log2(norm / 0.5)));
  const Mat x = a / std::ldexp(1.0, s);
  // [6/6] Pade: c_k = c_{k-1} (q - k + 1) / (k (2q - k + 1)).
  constexpr int q = 6;
  Mat num = Mat::Identity(n, n), den = Mat::Identity(n, n), term = Mat::Identity(n, n);
  double c = 1.0;
  for (int k = 1; k <= q; ++k) {
    c *= double(q - k + 1) / double(k * (2 * q - k + 1));
    term = term * x;
    num += c * term;
    den += (k % 2 ? -c : c) * term;
  }
  Eigen::PartialPivLU<Mat> lu(den);
  Mat e = lu.solve(num);
  for (int k = 0; k < s; ++k) e = e * e;
  if (!e.allFinite()) throw NumericError("matrix exponential overflowed");
  return e;
}

Discrete discretize(const ContinuousModel& cm, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be > 0");
  const auto d = cm.Ac.rows();
  if (cm.Ac.cols() != d) throw ValidationError("Ac must be square");
  if (cm.Qc.rows() != d || cm.Qc.cols() != d) throw ValidationError("Qc must match Ac");
  if (cm.Bc.rows() != d) throw ValidationError("Bc must have as many rows as Ac");
  Mat m = Mat::Zero(2 * d, 2 * d);
  m.topLeftCorner(d, d) = cm.Ac;
  m.topRightCorner(d, d) = cm.Qc;
  m.bottomRightCorner(d, d) = -cm.Ac.transpose();
  const Mat e = expm(m * dt);
  Discrete out;
  out.A = e.topLeftCorner(d, d);
  // Upper-right block is Q A^-T.
  out.Q = e.topRightCorner(d, d) * out.A.transpose();
  symmetrize(out.Q);
  const auto mi = cm.Bc.cols();
  if (mi == 0) {
    out.B = Mat::Zero(d, 0);
  } else {
    Mat mb = Mat::Zero(d + mi, d + mi);
    mb.topLeftCorner(d, d) = cm.Ac;
    mb.topRightCorner(d, mi) = cm.Bc;
    out.B = expm(mb * dt).topRightCorner(d, mi);
  }
  return out;
}

KalmanRun kalman_irregular(const ContinuousModel& cm, const Mat& C, const Mat& R, const Vec& x0, const Mat& P0,
                           const std::vector<double>& t, const std::vector<Vec>& measurements,
                           const std::vector<Vec>& inputs) {
  const std::size_t n = t.size();
  if (measurements.size() != n) throw ValidationError("timestamps and measurements differ in length");
  if (n == 0) throw ValidationError("no measurements");
  for (std::size_t i = 1; i < n; ++i)
    if (!(t[i] > t[i - 1])) throw ValidationError("timestamps must be strictly increasing", std::ptrdiff_t(i));
  Dynamics dyn;
  std::map<double, Discrete> cache;
  dyn.A.resize(n);
  dyn.B.resize(n);
  dyn.Q.resize(n);
  for (std::size_t i = 1; i < n; ++i) {
    const double h = t[i] - t[i - 1];
    auto it = cache.find(h);
    if (it == cache.end()) it = cache.emplace(h, discretize(cm, h)).first;
    dyn.A[i] = it->second.A;
    dyn.B[i] = it->second.B;
    dyn.Q[i] = it->second.Q;
  }
  const auto d = cm.Ac.rows();
  if (n == 1) {
    dyn.A.assign(1, Mat::Identity(d, d));
    dyn.B.assign(1, Mat::Zero(d, cm.Bc.cols()));
    dyn.Q.assign(1, Mat::Zero(d, d));
  } else {
    dyn.A[0] = dyn.A[1];
    dyn.B[0] = dyn.B[1];
    dyn.Q[0] = dyn.Q[1];
  }
  LinearGaussianModel model{dyn.A[0], dyn.B[0], C, dyn.Q[0], R, x0, P0};
  KalmanRun run;
  run.filter = kalman_filter(model, dyn, measurements, inputs);
  run.smooth = rts_smooth(dyn, run.filter);
  return run;
}

// --- robust MAP ---

double huber_scale(double m) {
  if (!(m > 0.0)) throw ValidationError("Huber radius must be > 0");
  const double e = std::exp(-0.5 * m * m);
  const double g = std::sqrt(2.0 * std::numbers::pi) * (2.0 * norm_cdf(m) - 1.0);
  return std::sqrt((4.0 * e * (1.0 + m * m) / (m * m * m) + g) / (2.0 * e / m + g));
}

namespace {
constexpr double kL1Eps = 1e-8;
}

double Loss::value(double r) const {
  switch (kind) {
    case LossKind::Quadratic: return 0.5 * r * r;
    case LossKind::L1: return std::numbers::sqrt2 * std::fabs(r);
    case LossKind::Huber: {
      const double a = std::fabs(r);
      return huber_scale(m) * (a <= m ? 0.5 * r * r : m * a - 0.5 * m * m);
    }
  }
  return 0.0;
}

double Loss::weight(double r) const {
  switch (kind) {
    case LossKind::Quadratic: return 1.0;
    case LossKind::L1: return std::numbers::sqrt2 / std::sqrt(r * r + kL1Eps);
    case LossKind::Huber: {
      const double a = std::fabs(r);
      return huber_scale(m) * (a <= m ? 1.0 : m / a);
    }
  }
  return 1.0;
}

RobustResult robust_map_smooth(const LinearGaussianModel& model, const std::vector<Vec>& measurements,
                               const std::vector<Vec>& inputs, const RobustSpec& spec) {
  return robust_map_smooth(model, Dynamics::constant(model), measurements, inputs, spec);
}

RobustResult robust_map_smooth(const LinearGaussianModel& model, const Dynamics& dyn,
                               const std::vector<Vec>& measurements, const std::vector<Vec>& inputs,
                               const RobustSpec& spec) {
  check_series(model, dyn, measurements, inputs);
  for (const Loss* l : {&spec.process_loss, &spec.measurement_loss})
    if (l->kind == LossKind::Huber && !(l->m > 0.0)) throw ValidationError("Huber radius must be > 0");
  if (!(spec.tol > 0.0) || spec.max_iter < 1) throw ValidationError("robust tol must be > 0 and max_iter >= 1");

  const std::size_t n = measurements.size();
  const std::size_t d = model.states();
  const auto p = model.C.rows();
  const Mat wr = inv_sqrt(model.R, "R");
  const Mat E = wr * model.C;  // whitened measurement map
  std::vector<Mat> wq(dyn.Q.size());
  for (std::size_t k = 0; k < dyn.Q.size(); ++k)
    if (dyn.Q.size() == 1 || k > 0) wq[k] = inv_sqrt(dyn.Q[k], "Q");
  auto wq_at = [&](std::size_t k) -> const Mat& { return wq.size() == 1 ? wq[0] : wq[k]; };
  const auto p0f = factor_spd(model.P0, "P0");
  const Mat p0inv = p0f.solve(Mat::Identity(Eigen::Index(d), Eigen::Index(d)));

  std::vector<Vec> wy(n), wbu(n);
  for (std::size_t k = 0; k < n; ++k) {
    wy[k] = wr * measurements[k];
    if (k > 0) wbu[k] = wq_at(k) * (dyn.b(k) * input_at(inputs, k, model.B.cols()));
  }

  auto meas_res = [&](const std::vector<Vec>& x, std::size_t k) -> Vec { return wy[k] - E * x[k]; };
  auto proc_res = [&](const std::vector<Vec>& x, std::size_t k) -> Vec {
    return wq_at(k) * (x[k] - dyn.a(k) * x[k - 1]) - wbu[k];
  };
  // Objective with each loss evaluated by `v`.
  auto total = [&](const std::vector<Vec>& x, auto&& v) {
    double f = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const Vec r = meas_res(x, k);
      for (Eigen::Index i = 0; i < r.size(); ++i) f += v(spec.measurement_loss, r(i));
      if (k > 0) {
        const Vec s = proc_res(x, k);
        for (Eigen::Index i = 0; i < s.size(); ++i) f += v(spec.process_loss, s(i));
      }
    }
    const Vec e = x[0] - model.x0;
    return f + 0.5 * e.dot(p0inv * e);
  };
  auto objective = [&](const std::vector<Vec>& x) {
    return total(x, [](const Loss& l, double r) { return l.value(r); });
  };

  // Newton step for sum_k phi(r_k) + prior, given per-residual slopes g and
  // curvatures c, as the banded least-squares problem
  // min sum_i (sqrt(c_i) J_i dx + g_i / sqrt(c_i))^2 + |P0^(-1/2) (x_0 + dx_0 - x0)|^2.
  // Working on the whitened Jacobian keeps the conditioning at the square
  // root of the normal equations'.
  const Mat p0w = inv_sqrt(model.P0, "P0");
  auto newton_step = [&](const std::vector<Vec>& x, const std::vector<Vec>& gm, const std::vector<Vec>& cm,
                         const std::vector<Vec>& gl, const std::vector<Vec>& cl) {
    linalg::BandedLeastSquares ls(n * d, 2 * d);
    std::vector<double> row(2 * d);
    const Vec e0 = p0w * (x[0] - model.x0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) row[j] = p0w(Eigen::Index(i), Eigen::Index(j));
      ls.add_row(0, std::span<const double>(row.data(), d), -e0(Eigen::Index(i)));
    }
    for (std::size_t k = 0; k < n; ++k) {
      for (Eigen::Index i = 0; i < p; ++i) {
        const double w = std::sqrt(cm[k](i));
        for (std::size_t j = 0; j < d; ++j) row[j] = -w * E(i, Eigen::Index(j));
        ls.add_row(k * d, std::span<const double>(row.data(), d), -gm[k](i) / w);
      }
      if (k == 0) continue;
      const Mat m1 = -wq_at(k) * dyn.a(k);  // acts on x_{k-1}
      const Mat& m2 = wq_at(k);             // acts on x_k
      for (std::size_t i = 0; i < d; ++i) {
        const double w = std::sqrt(cl[k](Eigen::Index(i)));
        for (std::size_t j = 0; j < d; ++j) {
          row[j] = w * m1(Eigen::Index(i), Eigen::Index(j));
          row[d + j] = w * m2(Eigen::Index(i), Eigen::Index(j));
        }
        ls.add_row((k - 1) * d, row, -gl[k](Eigen::Index(i)) / w);
      }
    }
    const auto v = ls.solve();
    std::vector<Vec> dx(n, Vec(Eigen::Index(d)));
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < d; ++i) dx[k](Eigen::Index(i)) = v[k * d + i];
    return dx;
  };
  // Directional derivative of the objective along dx: sum_i g_i J_i dx + prior.
  auto directional = [&](const std::vector<Vec>& x, const std::vector<Vec>& dx, const std::vector<Vec>& gm,
                         const std::vector<Vec>& gl) {
    double s = (x[0] - model.x0).dot(p0inv * dx[0]);
    for (std::size_t k = 0; k < n; ++k) {
      s -= gm[k].dot(E * dx[k]);
      if (k > 0) s += gl[k].dot(wq_at(k) * (dx[k] - dyn.a(k) * dx[k - 1]));
    }
    return s;
  };

  std::vector<Vec> gm(n), cm(n, Vec::Ones(p)), gl(n), cl(n, Vec::Ones(Eigen::Index(d)));
  // Quadratic start, one exact Newton step from zero: the RTS solution.
  std::vector<Vec> x(n, Vec::Zero(Eigen::Index(d)));
  for (std::size_t k = 0; k < n; ++k) {
    gm[k] = meas_res(x, k);
    gl[k] = k > 0 ? proc_res(x, k) : Vec::Zero(Eigen::Index(d));
  }
  x = newton_step(x, gm, cm, gl, cl);
  RobustResult res;
  res.x = x;
  res.objective = objective(x);
  res.diagnostics.iterations = 1;
  if (spec.process_loss.kind == LossKind::Quadratic && spec.measurement_loss.kind == LossKind::Quadratic)
    return res;

  // Damped Newton on the smoothed objective. The l1 smoothing starts wide and
  // shrinks to its final value; Huber curvature is floored by a fraction of
  // its reweighting weight to keep the system definite.
  double eps = 1e-2;
  auto smooth_value = [&](const Loss& l, double r) {
    return l.kind == LossKind::L1 ? std::numbers::sqrt2 * std::sqrt(r * r + eps) : l.value(r);
  };
  auto slope = [&](const Loss& l, double r) {
    switch (l.kind) {
      case LossKind::Quadratic: return r;
      case LossKind::L1: return std::numbers::sqrt2 * r / std::sqrt(r * r + eps);
      case LossKind::Huber: return huber_scale(l.m) * std::clamp(r, -l.m, l.m);
    }
    return r;
  };
  auto curvature = [&](const Loss& l, double r) {
    switch (l.kind) {
      case LossKind::Quadratic: return 1.0;
      case LossKind::L1: {
        const double s = r * r + eps;
        return std::numbers::sqrt2 * eps / (s * std::sqrt(s));
      }
      case LossKind::Huber: return std::fabs(r) <= l.m ? huber_scale(l.m) : 1e-6 * l.weight(r);
    }
    return 1.0;
  };

  bool converged = false;
  double f = total(x, smooth_value);
  for (int it = 2; it <= spec.max_iter; ++it) {
    res.diagnostics.iterations = it;
    for (std::size_t k = 0; k < n; ++k) {
      const Vec r = meas_res(x, k);
      for (Eigen::Index i = 0; i < p; ++i) {
        gm[k](i) = slope(spec.measurement_loss, r(i));
        cm[k](i) = curvature(spec.measurement_loss, r(i));
      }
      if (k > 0) {
        const Vec s = proc_res(x, k);
        for (Eigen::Index i = 0; i < s.size(); ++i) {
          gl[k](i) = slope(spec.process_loss, s(i));
          cl[k](i) = curvature(spec.process_loss, s(i));
        }
      }
    }
    const auto dx = newton_step(x, gm, cm, gl, cl);
    // Newton decrement.
    const double dec = -directional(x, dx, gm, gl);
    const bool final_eps = eps <= kL1Eps;
    if (!(dec >= 0.0) || !std::isfinite(dec)) break;
    if (dec <= (final_eps ? spec.tol : 1e-6) * (1.0 + std::fabs(f))) {
      if (final_eps) {
        converged = true;
        break;
      }
      eps = std::max(kL1Eps, eps * 1e-2);
      f = total(x, smooth_value);
      continue;
    }
    double a = 1.0;
    std::vector<Vec> xn(n);
    double fn = f;
    for (int bt = 0; bt < 60; ++bt, a *= 0.5) {
      for (std::size_t k = 0; k < n; ++k) xn[k] = x[k] + a * dx[k];
      fn = total(xn, smooth_value);
      if (fn <= f - 0.25 * a * dec) break;
    }
    if (!(fn < f)) {
      // No progress at this smoothing level.
      if (final_eps) {
        converged = dec <= 1e-6 * (1.0 + std::fabs(f));
        break;
      }
      eps = std::max(kL1Eps, eps * 1e-2);
      f = total(x, smooth_value);
      continue;
    }
    x = std::move(xn);
    f = fn;
    const double fx = objective(x);
    if (fx < res.objective || final_eps) {
      res.objective = fx;
      res.x = x;
    }
  }
  res.diagnostics.converged = converged;
  if (!converged) res.diagnostics.warnings.push_back("robust smoother stopped before convergence; returning best iterate");
  return res;
}

// --- differentiators ---

namespace {

std::vector<Vec> scalar_series(const std::vector<double>& y) {
  std::vector<Vec> out(y.size(), Vec(1));
  for (std::size_t i = 0; i < y.size(); ++i) out[i](0) = y[i];
  return out;
}

struct Setup {
  LinearGaussianModel model;
  Dynamics dyn;
};

Setup naive_setup(const Signal& signal, int nu, double q, double r) {
  const auto& t = signal.t();
  const double y0 = signal.values().front();
  if (signal.grid().is_uniform() && signal.size() > 1) {
    Setup s{constant_derivative_model(nu, signal.grid().dt(), q, r, y0), {}};
    s.dyn = Dynamics::constant(s.model);
    return s;
  }
  const auto cm = constant_derivative_continuous(nu, q);
  Setup s{constant_derivative_model(nu, signal.grid().mean_dt(), q, r, y0), {}};
  const std::size_t n = t.size();
  std::map<double, Discrete> cache;
  s.dyn.A.resize(n);
  s.dyn.B.resize(n);
  s.dyn.Q.resize(n);
  for (std::size_t i = 1; i < n; ++i) {
    const double h = t[i] - t[i - 1];
    auto it = cache.find(h);
    if (it == cache.end()) it = cache.emplace(h, discretize(cm, h)).first;
    s.dyn.A[i] = it->second.A;
    s.dyn.B[i] = it->second.B;
    s.dyn.Q[i] = it->second.Q;
  }
  s.dyn.A[0] = s.model.A;
  s.dyn.B[0] = s.model.B;
  s.dyn.Q[0] = s.model.Q;
  return s;
}

DerivativeResult slice(const std::vector<Vec>& x, const char* method, int nu, double q, double r) {
  DerivativeResult out;
  out.method = method;
  out.phi = {{"nu", nu}, {"q", q}, {"r", r}};
  out.smoothed.reserve(x.size());
  out.derivative.reserve(x.size());
  for (const auto& v : x) {
    out.smoothed.push_back(v(0));
    out.derivative.push_back(v(1));
  }
  return out;
}

}  // namespace

DerivativeResult rtsdiff(const Signal& signal, int nu, double q, double r) {
  if (signal.size() < 2) throw ValidationError("rtsdiff needs at least 2 samples");
  const auto s = naive_setup(signal, nu, q, r);
  const auto y = scalar_series(signal.values());
  const auto f = kalman_filter(s.model, s.dyn, y);
  const auto sm = rts_smooth(s.dyn, f);
  return slice(sm.x, "rtsdiff", nu, q, r);
}

DerivativeResult robustdiff(const Signal& signal, int nu, double q, double r, const RobustSpec& spec) {
  if (signal.size() < 2) throw ValidationError("robustdiff needs at least 2 samples");
  const auto s = naive_setup(signal, nu, q, r);
  const auto y = scalar_series(signal.values());
  auto res = robust_map_smooth(s.model, s.dyn, y, {}, spec);
  auto out = slice(res.x, "robustdiff", nu, q, r);
  out.diagnostics = res.diagnostics;
  return out;
}

}  // namespace ndiff
