#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ndiff/fd.hpp"
#include "support.hpp"

using namespace ndiff;
using ndiff::test::Gen;

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Dense Taylor-matrix solve: row p holds s_j^p, rhs nu! at row nu.
std::vector<double> vandermonde_oracle(const std::vector<double>& s, int nu) {
  const Eigen::Index n = Eigen::Index(s.size());
  Eigen::MatrixXd v(n, n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index j = 0; j < n; ++j) v(p, j) = std::pow(s[std::size_t(j)], double(p));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(nu) = factorial(nu);
  const Eigen::VectorXd c = v.fullPivLu().solve(rhs);
  return {c.data(), c.data() + n};
}

// First-derivative weights from differentiating the Lagrange basis at 0.
std::vector<double> lagrange_first_derivative(const std::vector<double>& s) {
  const std::size_t n = s.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j) continue;
      double term = 1.0 / (s[j] - s[k]);
      for (std::size_t m = 0; m < n; ++m)
        if (m != j && m != k) term *= (0.0 - s[m]) / (s[j] - s[m]);
      c[j] += term;
    }
  return c;
}

Signal sampled(const std::vector<double>& t, double (*f)(double)) { return Signal(t, test::map(t, f)); }

}  // namespace

TEST_CASE("second-order schemes from the reference table") {
  const double dx = 0.1;
  auto check = [&](std::vector<double> s, int nu, std::vector<double> want) {
    const auto c = stencil_coefficients(s, nu, dx).c;
    REQUIRE(c.size() == want.size());
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-12).scale(1.0));
  };
  check({-1, 0, 1}, 1, {-1 / (2 * dx), 0.0, 1 / (2 * dx)});
  check({0, 1, 2}, 1, {-3 / (2 * dx), 4 / (2 * dx), -1 / (2 * dx)});
  check({-2, -1, 0}, 1, {1 / (2 * dx), -4 / (2 * dx), 3 / (2 * dx)});
  const double d2 = dx * dx, d3 = d2 * dx, d4 = d2 * d2;
  check({-1, 0, 1}, 2, {1 / d2, -2 / d2, 1 / d2});
  check({0, 1, 2, 3}, 2, {2 / d2, -5 / d2, 4 / d2, -1 / d2});
  check({-2, -1, 0, 1, 2}, 3, {-1 / (2 * d3), 2 / (2 * d3), 0.0, -2 / (2 * d3), 1 / (2 * d3)});
  check({-2, -1, 0, 1, 2}, 4, {1 / d4, -4 / d4, 6 / d4, -4 / d4, 1 / d4});
}

TEST_CASE("stencil validation and conditioning") {
  CHECK_THROWS_AS(stencil_coefficients(std::vector<double>{-1, 1}, 2, 1.0), ValidationError);
  CHECK_THROWS_AS(irregular_coefficients(std::vector<double>{-1, 0, 0}, 1), ValidationError);
  const auto ok = stencil_coefficients(std::vector<double>{-1, 0, 1}, 1, 1.0);
  CHECK_FALSE(ok.ill_conditioned);
  // Nearly coincident distances trip the condition flag instead of failing.
  const auto bad = irregular_coefficients(std::vector<double>{0.0, 1e-7, 2e-7, 3e-7, 1.0, 1.0 + 1e-7}, 1);
  CHECK(bad.ill_conditioned);
  CHECK(bad.condition > kStencilConditionWarn);
}

TEST_CASE("irregular coefficients") {
  const double h = 0.37;
  const auto c = irregular_coefficients(std::vector<double>{-h, 0, h}, 1).c;
  CHECK(c[0] == doctest::Approx(-1 / (2 * h)));
  CHECK(std::fabs(c[1]) < 1e-12);
  CHECK(c[2] == doctest::Approx(1 / (2 * h)));

  const std::vector<double> s{-1, 0, 2};
  const auto got = irregular_coefficients(s, 1).c;
  const auto want = vandermonde_oracle(s, 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  // y = t^2 sampled at the stencil; dy/dt(0) = 0.
  CHECK(std::fabs(got[0] * 1.0 + got[1] * 0.0 + got[2] * 4.0) < 1e-12);
}

TEST_CASE("property: coefficients agree with two independent oracles") {
  Gen g(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::size_t(g.integer(2, 7));
    std::vector<double> s;
    while (s.size() < n) {
      const double v = g.uniform(-3, 3);
      bool far = true;
      for (double u : s) far = far && std::fabs(u - v) > 0.2;
      if (far) s.push_back(v);
    }
    const auto c = irregular_coefficients(s, 1).c;
    const auto lag = lagrange_first_derivative(s);
    for (std::size_t i = 0; i < n; ++i) CHECK(c[i] == doctest::Approx(lag[i]).epsilon(1e-8).scale(1.0));
    const int nu = g.integer(1, int(n) - 1);
    const auto c2 = irregular_coefficients(s, nu).c;
    const auto o2 = vandermonde_oracle(s, nu);
    for (std::size_t i = 0; i < n; ++i) CHECK(c2[i] == doctest::Approx(o2[i]).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("property: irregular solve on equispaced distances matches the uniform solve") {
  Gen g(22);
  for (int trial = 0; trial < 100; ++trial) {
    const double dx = g.uniform(0.01, 2.0);
    const int lo = -g.integer(0, 3), hi = g.integer(1, 3);
    std::vector<double> off, dist;
    for (int k = lo; k <= hi; ++k) {
      off.push_back(k);
      dist.push_back(k * dx);
    }
    const int nu = g.integer(1, int(off.size()) - 1);
    const auto a = stencil_coefficients(off, nu, dx).c;
    const auto b = irregular_coefficients(dist, nu).c;
    const double scale = test::max_abs(a);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) <= 1e-12 * std::max(1.0, scale) * 10);
  }
}

TEST_CASE("property: schemes reproduce polynomial derivatives below the stencil length") {
  Gen g(23);
  for (int trial = 0; trial < 100; ++trial) {
    const int order = 2 * g.integer(1, 4);
    const std::size_t n = 40;
    const double dt = g.uniform(0.05, 0.2);
    const auto t = test::arange(g.uniform(-1, 1), dt, n);
    const int deg = order;  // centered stencil has order + 1 points
    std::vector<double> a(std::size_t(deg) + 1);
    for (double& v : a) v = g.uniform(-1, 1);
    auto poly = [&](double x, int d) {
      double s = 0.0;
      for (int k = d; k <= deg; ++k) s += a[std::size_t(k)] * factorial(k) / factorial(k - d) * std::pow(x, k - d);
      return s;
    };
    std::vector<double> y(n), dy(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = poly(t[i], 0);
      dy[i] = poly(t[i], 1);
    }
    const auto r = fd_derivative(Signal(t, y), 1, order);
    const std::size_t p = std::size_t(order / 2);
    const double sc = std::max(1.0, test::max_abs(dy));
    for (std::size_t i = p; i + p < n; ++i) CHECK(std::fabs(r.derivative[i] - dy[i]) <= 1e-9 * sc);
  }
}

TEST_CASE("fd_derivative exact cases") {
  Gen g(24);
  const auto tu = test::arange(0.0, 0.1, 30);
  const auto ti = g.grid(30);
  for (const auto& t : {tu, ti}) {
    const auto r = fd_derivative(Signal(t, test::map(t, [](double x) { return 3 * x + 1; })), 1, 2);
    for (double d : r.derivative) CHECK(d == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(r.smoothed == test::map(t, [](double x) { return 3 * x + 1; }));
    // Quadratics are exact everywhere, edges included, on either grid.
    const auto q = fd_derivative(Signal(t, test::map(t, [](double x) { return x * x; })), 1, 2);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(q.derivative[i] == doctest::Approx(2 * t[i]).epsilon(1e-9).scale(1.0));
  }
  const auto c = fd_derivative(Signal(tu, test::map(tu, [](double x) { return x * x * x; })), 2, 2);
  for (std::size_t i = 1; i + 1 < tu.size(); ++i) CHECK(c.derivative[i] == doctest::Approx(6 * tu[i]).epsilon(1e-8));
  CHECK_THROWS_AS(fd_derivative(Signal(std::vector<double>{0, 1}, std::vector<double>{0, 1}), 1, 2), ValidationError);
  CHECK_THROWS_AS(fd_derivative(Signal(tu, std::vector<double>(30, 0.0)), 1, 3), ValidationError);
}

TEST_CASE("order of accuracy on a smooth function") {
  for (int order : {2, 4, 6}) {
    const std::size_t n1 = order == 2 ? 100 : 40;
    auto interior_error = [&](std::size_t n) {
      const auto t = test::linspace(0.0, 2 * M_PI, n);
      const auto r = fd_derivative(sampled(t, [](double x) { return std::sin(x); }), 1, order);
      const std::size_t p = std::size_t(order / 2);
      double e = 0.0;
      for (std::size_t i = p; i + p < n; ++i) e = std::max(e, std::fabs(r.derivative[i] - std::cos(t[i])));
      return e;
    };
    // Halving dx on [0, 2 pi] with endpoints: n -> 2n - 1.
    const double ratio = interior_error(n1) / interior_error(2 * n1 - 1);
    const double want = std::pow(2.0, order);
    INFO("order " << order << " ratio " << ratio);
    CHECK(ratio >= 0.75 * want);
    CHECK(ratio <= 1.25 * want);
  }
}

TEST_CASE("iterated FD") {
  const auto t = test::arange(0.0, 0.05, 60);
  Gen g(25);
  std::vector<double> y = g.vec(60);
  const Signal s(t, y);

  const auto zero = iterated_fd(s, 2, 0);
  const auto plain = fd_derivative(s, 1, 2);
  CHECK(zero.derivative == plain.derivative);
  CHECK(zero.smoothed == y);

  const auto flat = iterated_fd(Signal(t, std::vector<double>(60, 2.5)), 4, 3);
  CHECK(test::max_abs(flat.derivative) < 1e-12);
  for (double v : flat.smoothed) CHECK(v == doctest::Approx(2.5));

  // One centered order-2 pass plus trapezoid integration is the IIR recursion
  // x[n] = x[n-1] + (y[n+1] + y[n] - y[n-1] - y[n-2]) / 4.
  const auto one = iterated_fd(s, 2, 1);
  for (std::size_t n = 2; n + 1 < y.size(); ++n) {
    const double step = 0.25 * (y[n + 1] + y[n] - y[n - 1] - y[n - 2]);
    CHECK(one.smoothed[n] - one.smoothed[n - 1] == doctest::Approx(step).epsilon(1e-10).scale(1.0));
  }
  // The mean-offset anchor keeps the mean of the input.
  CHECK(mean(one.smoothed) == doctest::Approx(mean(y)).epsilon(1e-12).scale(1.0));

  std::vector<double> tt(t);
  tt[5] += 0.01;
  CHECK_THROWS_AS(iterated_fd(Signal(tt, y), 2, 1), UnsupportedMethodError);
}

TEST_CASE("property: smoothing-pass edge coefficients stay bounded") {
  for (int order : {2, 4, 6, 8})
    for (std::size_t n : {9u, 10u, 31u})
      for (double dt : {0.001, 0.1, 3.0})
        for (std::size_t i = 0; i < n; ++i) {
          const auto st = iterated_fd_pass_stencil(i, n, order, dt).second;
          for (double c : st) CHECK(std::fabs(c * dt) <= 1.0 + 1e-12);
        }
}
