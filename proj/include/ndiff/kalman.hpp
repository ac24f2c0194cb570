#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ndiff/core.hpp"

namespace ndiff {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct LinearGaussianModel {
  Mat A, B, C, Q, R;
  Vec x0;  // a priori estimate at the first step
  Mat P0;

  std::size_t states() const { return std::size_t(A.rows()); }
  /// Throws ValidationError on inconsistent shapes or indefinite covariances.
  void validate() const;
};

struct ContinuousModel {
  Mat Ac, Bc, Qc;
};

/// Per-step transition matrices. Entry n maps step n-1 to step n; entry 0 is
/// unused. A single entry means the same transition at every step.
struct Dynamics {
  std::vector<Mat> A, B, Q;

  static Dynamics constant(const LinearGaussianModel& m);
  const Mat& a(std::size_t n) const { return A.size() == 1 ? A[0] : A[n]; }
  const Mat& b(std::size_t n) const { return B.size() == 1 ? B[0] : B[n]; }
  const Mat& q(std::size_t n) const { return Q.size() == 1 ? Q[0] : Q[n]; }
};

struct FilterResult {
  std::vector<Vec> x;   // a posteriori
  std::vector<Mat> P;
  std::vector<Vec> xp;  // a priori
  std::vector<Mat> Pp;
};

struct SmoothResult {
  std::vector<Vec> x;
  std::vector<Mat> P;
};

/// Standard predict/update recursion. `inputs` may be empty (no input).
FilterResult kalman_filter(const LinearGaussianModel& model, const std::vector<Vec>& measurements,
                           const std::vector<Vec>& inputs = {});
FilterResult kalman_filter(const LinearGaussianModel& model, const Dynamics& dyn,
                           const std::vector<Vec>& measurements, const std::vector<Vec>& inputs = {});

/// Rauch-Tung-Striebel backward pass over a filter history.
SmoothResult rts_smooth(const LinearGaussianModel& model, const FilterResult& filter);
SmoothResult rts_smooth(const Dynamics& dyn, const FilterResult& filter);

/// Naive model for nu-th order constant-derivative dynamics: nu+1 states
/// (value and its first nu derivatives), white noise entering the highest one.
/// x0 = [y0, 0, ...] and P0 = 1000 r I, so scaling q and r together leaves
/// every estimate unchanged.
LinearGaussianModel constant_derivative_model(int nu, double dt, double q, double r, double y0 = 0.0);
/// The continuous-time chain behind constant_derivative_model.
ContinuousModel constant_derivative_continuous(int nu, double q);

/// Matrix exponential by scaling and squaring with a [6/6] Pade approximant.
Mat expm(const Mat& a);

struct Discrete {
  Mat A, B, Q;
};
Discrete discretize(const ContinuousModel& cm, double dt);

struct KalmanRun {
  FilterResult filter;
  SmoothResult smooth;
};

/// Filter and RTS on arbitrary increasing timestamps, discretizing per step.
KalmanRun kalman_irregular(const ContinuousModel& cm, const Mat& C, const Mat& R, const Vec& x0, const Mat& P0,
                           const std::vector<double>& t, const std::vector<Vec>& measurements,
                           const std::vector<Vec>& inputs = {});

enum class LossKind { Quadratic, L1, Huber };

struct Loss {
  LossKind kind = LossKind::Quadratic;
  double m = 1.0;  // Huber radius

  static Loss quadratic() { return {}; }
  static Loss l1() { return {LossKind::L1, 1.0}; }
  static Loss huber(double m) { return {LossKind::Huber, m}; }
  /// Loss of one whitened residual component.
  double value(double r) const;
  /// IRLS weight rho'(r) / r.
  double weight(double r) const;
};

/// Normalizing factor that puts the Huber loss on the same scale as 1/2 x^2
/// (large M) and sqrt(2)|x| (small M).
double huber_scale(double m);

struct RobustSpec {
  Loss process_loss;
  Loss measurement_loss;
  double tol = 1e-8;  // on the Newton decrement, relative to 1 + |objective|
  int max_iter = 200;
};

struct RobustResult {
  std::vector<Vec> x;
  double objective = 0.0;
  Diagnostics diagnostics;
};

/// Joint MAP estimate of all states under the chosen losses on whitened
/// process and measurement residuals, with a Gaussian prior on the first
/// state. The l1 loss is smoothed as sqrt(2) sqrt(r^2 + eps), eps shrinking to
/// 1e-8. Solved by damped Newton steps, each a banded least-squares problem
/// on the whitened residual Jacobian, so each iteration costs O(N d^3).
RobustResult robust_map_smooth(const LinearGaussianModel& model, const std::vector<Vec>& measurements,
                               const std::vector<Vec>& inputs, const RobustSpec& spec);
RobustResult robust_map_smooth(const LinearGaussianModel& model, const Dynamics& dyn,
                               const std::vector<Vec>& measurements, const std::vector<Vec>& inputs,
                               const RobustSpec& spec);

DerivativeResult rtsdiff(const Signal& signal, int nu, double q, double r);
DerivativeResult robustdiff(const Signal& signal, int nu, double q, double r, const RobustSpec& spec);

}  // namespace ndiff
