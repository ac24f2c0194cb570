#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ndiff/fd.hpp"
#include "ndiff/sims.hpp"
#include "ndiff/tvr.hpp"
#include "support.hpp"

using namespace ndiff;
using ndiff::test::Gen;

namespace {

// Dense unit-spacing derivative matrix: one-sided second-order rows at the
// ends, centered rows inside.
Eigen::MatrixXd dense_d(Eigen::Index n) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  d(0, 0) = -1.5, d(0, 1) = 2.0, d(0, 2) = -0.5;
  for (Eigen::Index i = 1; i + 1 < n; ++i) d(i, i - 1) = -0.5, d(i, i + 1) = 0.5;
  d(n - 1, n - 3) = 0.5, d(n - 1, n - 2) = -2.0, d(n - 1, n - 1) = 1.5;
  return d;
}

Eigen::MatrixXd dense_g(Eigen::Index n, int nu) {
  Eigen::MatrixXd dn = Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k < nu; ++k) dn = dense_d(n) * dn;
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n - 1, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) delta(i, i) = -1.0, delta(i, i + 1) = 1.0;
  return delta * dn;
}

double objective(const Eigen::VectorXd& y, const Eigen::VectorXd& x, const Eigen::MatrixXd& g, double kappa) {
  return (y - x).squaredNorm() + kappa * (g * x).lpNorm<1>();
}

// Independent oracle: damped Newton on ||y - x||^2 + kappa * sum sqrt((Gx)^2 + eps^2)
// with eps driven to 1e-13. The smoothing changes the objective by at most
// kappa * m * eps.
Eigen::VectorXd smoothed_newton(const Eigen::VectorXd& y, const Eigen::MatrixXd& g, double kappa) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd x = y;
  for (double eps = 1e-1; eps >= 1e-13; eps *= 0.1) {
    auto f = [&](const Eigen::VectorXd& v) {
      const Eigen::VectorXd r = g * v;
      return (y - v).squaredNorm() + kappa * (r.array().square() + eps * eps).sqrt().sum();
    };
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXd r = g * x;
      const Eigen::ArrayXd s = (r.array().square() + eps * eps).sqrt();
      const Eigen::VectorXd grad = 2.0 * (x - y) + kappa * g.transpose() * (r.array() / s).matrix();
      const Eigen::VectorXd curv = (eps * eps / s.cube()).matrix();
      const Eigen::MatrixXd h = 2.0 * Eigen::MatrixXd::Identity(n, n) + kappa * g.transpose() * curv.asDiagonal() * g;
      const Eigen::VectorXd step = h.ldlt().solve(-grad);
      const double dec = -grad.dot(step);
      if (dec < 1e-20 * std::max(1.0, f(x))) break;
      double a = 1.0;
      const double f0 = f(x);
      while (f(x + a * step) > f0 - 0.25 * a * dec && a > 1e-12) a *= 0.5;
      x += a * step;
    }
  }
  return x;
}

Signal noisy_triangles(std::uint64_t seed) {
  const auto sim = simulate({"triangles", 4.0, 0.01});
  return add_noise(sim.grid, sim.x, {NoiseFamily::Normal, 1.0, false, seed});
}

}  // namespace

TEST_CASE("sparse operators match dense constructions") {
  for (std::size_t n : {5u, 12u, 33u})
    for (int nu = 1; nu <= 3; ++nu) {
      const auto g = tv_operator(n, nu);
      const Eigen::MatrixXd want = dense_g(Eigen::Index(n), nu);
      REQUIRE(g.rows() == n - 1);
      Eigen::MatrixXd got = Eigen::MatrixXd::Zero(Eigen::Index(n - 1), Eigen::Index(n));
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t k = 0; k < g.values[i].size(); ++k) got(Eigen::Index(i), Eigen::Index(g.first[i] + k)) = g.values[i][k];
      CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
      Gen r(61);
      const auto x = r.vec(n);
      const auto w = r.vec(n - 1);
      const auto gx = g.apply(x);
      const auto gtw = g.apply_transpose(w);
      const Eigen::VectorXd ex = want * Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(n));
      const Eigen::VectorXd ew = want.transpose() * Eigen::Map<const Eigen::VectorXd>(w.data(), Eigen::Index(n - 1));
      for (std::size_t i = 0; i + 1 < n; ++i) CHECK(gx[i] == doctest::Approx(ex(Eigen::Index(i))).scale(1.0));
      for (std::size_t i = 0; i < n; ++i) CHECK(gtw[i] == doctest::Approx(ew(Eigen::Index(i))).scale(1.0));
    }
  const auto d = fd_matrix(6);
  CHECK(d.values.front() == std::vector<double>{-1.5, 2.0, -0.5});
  CHECK(d.values.back() == std::vector<double>{0.5, -2.0, 1.5});
}

TEST_CASE("property: small solves match an independent convex oracle") {
  Gen g(62);
  for (int trial = 0; trial < 24; ++trial) {
    const std::size_t n = std::size_t(g.integer(8, 40));
    const int nu = 1 + trial % 3;
    const double dt = g.uniform(0.02, 0.2);
    const Grid grid = Grid::uniform(0.0, dt, n);
    std::vector<double> y(n);
    const double f = g.uniform(0.5, 2.0);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(f * grid[i]) + g.normal(0.1);
    const double kappa = std::pow(10.0, g.uniform(-2, 1));
    // gamma such that the penalty weight gamma / (N dt^nu) equals kappa.
    const double gamma = kappa * double(n) * std::pow(dt, nu);
    const Eigen::Map<const Eigen::VectorXd> ey(y.data(), Eigen::Index(n));
    const Eigen::MatrixXd gd = dense_g(Eigen::Index(n), nu);
    const double want = objective(ey, smoothed_newton(ey, gd, kappa), gd, kappa);

    for (auto solver : {TvrSolver::InteriorPoint, TvrSolver::Admm}) {
      if (solver == TvrSolver::Admm && nu > 1) continue;
      TvrSpec spec;
      spec.nu = nu;
      spec.gamma = gamma;
      spec.solver = solver;
      const auto r = tvrdiff(Signal(grid, y), spec);
      const double got = tvr_objective(Signal(grid, y), r.smoothed, nu, gamma);
      INFO("n=" << n << " nu=" << nu << " kappa=" << kappa << " solver=" << int(solver));
      CHECK(r.diagnostics.converged);
      CHECK(std::fabs(got - want) <= 1e-5 * std::fabs(want));
      CHECK(got == doctest::Approx(objective(ey, Eigen::Map<const Eigen::VectorXd>(r.smoothed.data(), Eigen::Index(n)), gd, kappa)));
    }
  }
}

TEST_CASE("limits in gamma") {
  Gen g(63);
  const Grid grid = Grid::uniform(0.0, 0.01, 200);
  std::vector<double> y(200);
  for (std::size_t i = 0; i < 200; ++i) y[i] = std::sin(3 * grid[i]) + g.normal(0.1);
  for (int nu = 1; nu <= 3; ++nu) {
    TvrSpec spec;
    spec.nu = nu;
    spec.gamma = 1e-12;
    const auto r = tvrdiff(Signal(grid, y), spec);
    CHECK(test::max_abs_diff(r.smoothed, y) < 1e-6);
  }
  TvrSpec big;
  big.gamma = 1e6;
  const auto r = tvrdiff(Signal(grid, y), big);
  const auto [lo, hi] = std::minmax_element(r.derivative.begin(), r.derivative.end());
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  CHECK(*hi - *lo < 1e-3 * (*yhi - *ylo) / (grid.back() - grid.front()));
}

TEST_CASE("nu = 1 on noisy triangles gives a few derivative plateaus") {
  const auto s = noisy_triangles(7);
  TvrSpec spec;
  spec.gamma = 100.0;
  const auto r = tvrdiff(s, spec);
  CHECK(r.diagnostics.converged);
  const auto& d = r.derivative;
  const double range = *std::max_element(d.begin(), d.end()) - *std::min_element(d.begin(), d.end());
  // Plateau samples: derivative equal to a neighbour's within solver accuracy.
  std::vector<double> flat;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const bool l = i > 0 && std::fabs(d[i] - d[i - 1]) <= 1e-4 * range;
    const bool rr = i + 1 < d.size() && std::fabs(d[i] - d[i + 1]) <= 1e-4 * range;
    if (l || rr) flat.push_back(d[i]);
  }
  std::sort(flat.begin(), flat.end());
  std::vector<std::size_t> clusters;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (i == 0 || flat[i] - flat[i - 1] > 0.05 * range) clusters.push_back(0);
    ++clusters.back();
  }
  std::sort(clusters.rbegin(), clusters.rend());
  std::size_t covered = 0;
  for (std::size_t k = 0; k < std::min<std::size_t>(4, clusters.size()); ++k) covered += clusters[k];
  INFO("clusters " << clusters.size() << " coverage " << double(covered) / double(d.size()));
  CHECK(double(covered) >= 0.95 * double(d.size()));
}

TEST_CASE("property: TV of the regularized derivative is monotone in gamma") {
  Gen g(64);
  for (int nu = 1; nu <= 3; ++nu) {
    const Grid grid = Grid::uniform(0.0, 0.02, 120);
    std::vector<double> y(120);
    for (std::size_t i = 0; i < 120; ++i) y[i] = std::cos(2 * grid[i]) + g.normal(0.1);
    const auto op = tv_operator(120, nu);
    double prev = INFINITY;
    for (double gamma = 1e-6; gamma <= 1e2; gamma *= 4) {
      TvrSpec spec;
      spec.nu = nu;
      spec.gamma = gamma;
      spec.tol = 1e-11;
      const auto r = tvrdiff(Signal(grid, y), spec);
      double tv = 0.0;
      for (double v : op.apply(r.smoothed)) tv += std::fabs(v);
      INFO("nu " << nu << " gamma " << gamma);
      CHECK(tv <= prev + 1e-8 * std::max(1.0, prev));
      prev = tv;
    }
  }
}

TEST_CASE("property: translation equivariance") {
  Gen g(65);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = std::size_t(g.integer(20, 150));
    const Grid grid = Grid::uniform(0.0, 0.01, n);
    const auto y = g.vec(n);
    const double b = g.uniform(-50, 50);
    std::vector<double> z(y);
    for (double& v : z) v += b;
    TvrSpec spec;
    spec.nu = 1 + trial % 3;
    spec.gamma = std::pow(10.0, g.uniform(-4, 0));
    const auto ry = tvrdiff(Signal(grid, y), spec), rz = tvrdiff(Signal(grid, z), spec);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(rz.smoothed[i] - b == doctest::Approx(ry.smoothed[i]).epsilon(1e-9).scale(1.0));
      CHECK(rz.derivative[i] == doctest::Approx(ry.derivative[i]).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("derivative output is the FD derivative of the smoothed signal") {
  const auto s = noisy_triangles(3);
  const auto r = tvrdiff(s, {});
  const auto fd = fd_derivative(s.with_values(r.smoothed), 1, 2);
  CHECK(test::max_abs_diff(r.derivative, fd.derivative) < 1e-12);
  CHECK(r.phi.at("gap") >= 0.0);
}

TEST_CASE("smooth_accel_tvr") {
  const auto s = noisy_triangles(5);
  TvrSpec spec;
  spec.nu = 2;
  spec.gamma = 1e-3;
  const auto base = tvrdiff(s, spec);
  spec.soften_sigma = 0.0;
  const auto zero = smooth_accel_tvr(s, spec);
  CHECK(zero.derivative == base.derivative);
  spec.soften_sigma = 3.0;
  const auto soft = smooth_accel_tvr(s, spec);
  auto curvature = [](const std::vector<double>& d) {
    double m = 0.0;
    for (std::size_t i = 1; i + 1 < d.size(); ++i) m = std::max(m, std::fabs(d[i + 1] - 2 * d[i] + d[i - 1]));
    return m;
  };
  CHECK(curvature(soft.derivative) < curvature(base.derivative));
  const auto flat = smooth_accel_tvr(s.with_values(std::vector<double>(s.size(), 1.0)), spec);
  CHECK(test::max_abs(flat.derivative) == 0.0);
  spec.nu = 1;
  CHECK_THROWS_AS(smooth_accel_tvr(s, spec), ValidationError);
}

TEST_CASE("tvr validation") {
  const Signal s(Grid::uniform(0, 0.1, 20), std::vector<double>(20, 0.0));
  TvrSpec bad;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(tvrdiff(s, bad), ValidationError);
  bad = {};
  bad.nu = 4;
  CHECK_THROWS_AS(tvrdiff(s, bad), ValidationError);
  bad = {};
  bad.tol = 0.0;
  CHECK_THROWS_AS(tvrdiff(s, bad), ValidationError);
  std::vector<double> t = s.t();
  t[3] += 0.01;
  CHECK_THROWS_AS(tvrdiff(Signal(t, s.values()), {}), UnsupportedMethodError);
}

TEST_CASE("iteration cap returns the best iterate with a flag") {
  const auto s = noisy_triangles(9);
  TvrSpec spec;
  spec.nu = 2;
  spec.max_iter = 2;
  const auto r = tvrdiff(s, spec);
  CHECK_FALSE(r.diagnostics.converged);
  CHECK_FALSE(r.diagnostics.warnings.empty());
  CHECK(r.smoothed.size() == s.size());
}
