#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "ndiff/core.hpp"
#include "ndiff/fft.hpp"
#include "ndiff/linalg.hpp"
#include "support.hpp"

using namespace ndiff;
using ndiff::test::Gen;

TEST_CASE("banded Cholesky matches a dense solve") {
  Gen g(3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = std::size_t(g.integer(1, 40));
    const std::size_t bw = std::size_t(g.integer(0, 5));
    // Random band matrix made diagonally dominant.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    linalg::BandedSpd b(n, bw);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = (i >= bw ? i - bw : 0); j < i; ++j) {
        const double v = g.uniform(-1, 1);
        a(Eigen::Index(i), Eigen::Index(j)) = a(Eigen::Index(j), Eigen::Index(i)) = v;
        b.add(i, j, v);
      }
    for (std::size_t i = 0; i < n; ++i) {
      const double d = 2.0 * double(bw) + g.uniform(0.5, 2.0);
      a(Eigen::Index(i), Eigen::Index(i)) = d;
      b.add(i, i, d);
    }
    CHECK(b.get(0, 0) == a(0, 0));
    const auto rhs = g.vec(n);
    b.factor();
    const auto x = b.solve(rhs);
    const Eigen::VectorXd want = a.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), Eigen::Index(n)));
    for (std::size_t i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(want(Eigen::Index(i))).epsilon(1e-10));
  }
}

TEST_CASE("banded Cholesky rejects indefinite matrices") {
  linalg::BandedSpd b(3, 1);
  b.add(0, 0, 1.0);
  b.add(1, 1, 1.0);
  b.add(2, 2, 1.0);
  b.add(1, 0, 2.0);
  CHECK_THROWS_AS(b.factor(), NumericError);
}

TEST_CASE("banded least squares matches normal equations") {
  Gen g(4);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = std::size_t(g.integer(1, 25));
    const std::size_t w = std::size_t(g.integer(1, 4));
    const std::size_t rows = m + std::size_t(g.integer(0, 30));
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(Eigen::Index(rows + m), Eigen::Index(m));
    Eigen::VectorXd rhs(Eigen::Index(rows + m));
    linalg::BandedLeastSquares ls(m, w);
    std::size_t r = 0;
    // One well-conditioned row per unknown guarantees full rank.
    for (std::size_t i = 0; i < m; ++i, ++r) {
      const std::size_t first = std::min(i, m - std::min(w, m));
      std::vector<double> v(std::min(w, m));
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = (first + k == i ? 3.0 : 0.0) + g.uniform(-0.3, 0.3);
      rhs(Eigen::Index(r)) = g.uniform(-1, 1);
      for (std::size_t k = 0; k < v.size(); ++k) dense(Eigen::Index(r), Eigen::Index(first + k)) = v[k];
      ls.add_row(first, v, rhs(Eigen::Index(r)));
    }
    for (std::size_t q = 0; q < rows; ++q, ++r) {
      const std::size_t len = std::min(w, m);
      const std::size_t first = std::size_t(g.integer(0, int(m - len)));
      std::vector<double> v = g.vec(len);
      rhs(Eigen::Index(r)) = g.uniform(-1, 1);
      for (std::size_t k = 0; k < len; ++k) dense(Eigen::Index(r), Eigen::Index(first + k)) = v[k];
      ls.add_row(first, v, rhs(Eigen::Index(r)));
    }
    const auto x = ls.solve();
    const Eigen::VectorXd want = dense.colPivHouseholderQr().solve(rhs);
    for (std::size_t i = 0; i < m; ++i) CHECK(x[i] == doctest::Approx(want(Eigen::Index(i))).epsilon(1e-9));
    const double ssr = (dense * want - rhs).squaredNorm();
    CHECK(ls.residual_ss() == doctest::Approx(ssr).epsilon(1e-9).scale(1.0));
    CHECK(ls.condition_estimate() >= 1.0);
  }
}

TEST_CASE("banded least squares reports rank deficiency") {
  linalg::BandedLeastSquares ls(3, 2);
  ls.add_row(0, std::vector<double>{1.0, 1.0}, 1.0);
  ls.add_row(0, std::vector<double>{2.0, 2.0}, 2.0);
  CHECK_THROWS_AS(ls.solve(), NumericError);
}

TEST_CASE("FFT against a direct DFT sum") {
  Gen g(5);
  for (std::size_t n : {1u, 2u, 5u, 16u, 37u}) {
    const auto x = g.vec(n);
    const auto y = fft::forward(x);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += x[j] * std::polar(1.0, -2.0 * M_PI * double(k * j) / double(n));
      CHECK(std::abs(y[k] - s) <= 1e-12 * double(n));
    }
    const auto back = fft::inverse_real(y);
    CHECK(test::max_abs_diff(back, x) <= 1e-13);
  }
}

TEST_CASE("DCT-I against its defining sum, and the 2(N-1) round trip") {
  Gen g(6);
  for (std::size_t n : {2u, 3u, 8u, 33u}) {
    const auto x = g.vec(n);
    const auto y = fft::dct1(x);
    for (std::size_t k = 0; k < n; ++k) {
      double s = x[0] + ((k % 2) ? -x[n - 1] : x[n - 1]);
      for (std::size_t j = 1; j + 1 < n; ++j) s += 2.0 * x[j] * std::cos(M_PI * double(k * j) / double(n - 1));
      CHECK(y[k] == doctest::Approx(s).epsilon(1e-12).scale(1.0));
    }
    const auto z = fft::dct1(y);
    for (std::size_t k = 0; k < n; ++k) CHECK(z[k] == doctest::Approx(2.0 * double(n - 1) * x[k]).epsilon(1e-11));
  }
}
