#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "ndiff/core.hpp"
#include "ndiff/parallel.hpp"
#include "ndiff/rng.hpp"
#include "support.hpp"

using namespace ndiff;
using ndiff::test::Gen;

TEST_CASE("cumtrapz examples") {
  {
    const auto s = Signal(Grid::uniform(0.0, 0.1, 5), std::vector<double>(5, 1.0));
    const auto c = cumtrapz(s);
    const double want[] = {0.0, 0.1, 0.2, 0.3, 0.4};
    for (int i = 0; i < 5; ++i) CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-14));
  }
  {
    const std::vector<double> t{0, 1, 2};
    const auto c = cumtrapz(t, t);
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 0.5);
    CHECK(c[2] == 2.0);
  }
  {
    // irregular, hand trapezoid sums
    const std::vector<double> t{0, 0.5, 2}, v{0, 0.25, 4};
    const auto c = cumtrapz(t, v);
    CHECK(c[1] == doctest::Approx(0.0625));
    CHECK(c[2] == doctest::Approx(3.25));
  }
}

TEST_CASE("cumtrapz rejects non-finite input") {
  const std::vector<double> t{0, 1, 2}, v{0, NAN, 1};
  CHECK_THROWS_AS(cumtrapz(t, v), ValidationError);
}

TEST_CASE("total_variation examples") {
  CHECK(total_variation(std::vector<double>{1, 2, 3}) == doctest::Approx(2.0 / 3.0));
  CHECK(total_variation(std::vector<double>(7, 4.2)) == 0.0);
  CHECK(total_variation(std::vector<double>{0, 1, 0, 1}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(total_variation(std::vector<double>{1}), ValidationError);
}

TEST_CASE("validate reports the first violated invariant") {
  CHECK_NOTHROW(validate(Signal(Grid::uniform(0, 0.1, 10), std::vector<double>(10, 0.0))));
  try {
    validate_samples(std::vector<double>{0, 1, 1, 2}, std::vector<double>{0, 0, 0, 0});
    FAIL("expected error");
  } catch (const ValidationError& e) {
    CHECK(e.index() == 2);
  }
  try {
    validate_samples(std::vector<double>{0, 1, 2, 3}, std::vector<double>{0, 0, 0, NAN});
    FAIL("expected error");
  } catch (const ValidationError& e) {
    CHECK(e.index() == 3);
  }
  CHECK_THROWS_AS(validate_samples(std::vector<double>{0}, std::vector<double>{0}), ValidationError);
  CHECK_THROWS_AS(Signal(std::vector<double>{0, 1, 2}, std::vector<double>{0, 1}), ValidationError);
}

TEST_CASE("grid uniformity detection") {
  const Grid u = Grid::uniform(0.0, 0.01, 400);
  CHECK(u.is_uniform());
  CHECK(u.dt() == doctest::Approx(0.01));
  auto p = u.points();
  p[200] += 1e-6;  // 1e-4 relative to dt
  const Grid v(p);
  CHECK_FALSE(v.is_uniform());
  CHECK_THROWS_AS((void)v.dt(), UnsupportedMethodError);
  CHECK(v.mean_dt() == doctest::Approx(0.01));
  // Perturbations inside the tolerance stay uniform.
  p = u.points();
  p[200] += 1e-13;
  CHECK(Grid(p).is_uniform());
}

TEST_CASE("method config validation") {
  MethodConfig c{"x", {{"window", 5, 3, 9, Scale::Integer}, {"q", 1.0, 1e-3, 1e3, Scale::Log}}};
  CHECK_NOTHROW(c.validate());
  c.params[0].value = 5.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.params[0].value = 11;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.params[0].value = 7;
  CHECK(c.values().at("window") == 7);
}

TEST_CASE("property: cumtrapz is linear") {
  Gen g(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::size_t(g.integer(2, 60));
    const auto t = g.grid(n, g.uniform(-5, 5));
    const auto u = g.vec(n), v = g.vec(n);
    const double a = g.uniform(-3, 3), b = g.uniform(-3, 3);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = a * u[i] + b * v[i];
    const auto cu = cumtrapz(t, u), cv = cumtrapz(t, v), cw = cumtrapz(t, w);
    for (std::size_t i = 0; i < n; ++i) {
      const double want = a * cu[i] + b * cv[i];
      CHECK(std::fabs(cw[i] - want) <= 1e-12 * std::max(1.0, std::fabs(want)));
    }
  }
}

TEST_CASE("property: cumtrapz is exact for degree-1 polynomials") {
  Gen g(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::size_t(g.integer(2, 80));
    const auto t = g.grid(n, g.uniform(-2, 2), 0.001, 1.0);
    const double a = g.uniform(-4, 4), b = g.uniform(-4, 4);
    const auto v = test::map(t, [&](double x) { return a + b * x; });
    const auto c = cumtrapz(t, v);
    for (std::size_t i = 0; i < n; ++i) {
      const double exact = a * (t[i] - t[0]) + 0.5 * b * (t[i] * t[i] - t[0] * t[0]);
      CHECK(std::fabs(c[i] - exact) <= 1e-12 * std::max(1.0, std::fabs(exact)));
    }
  }
}

TEST_CASE("property: total_variation under reversal and scaling") {
  Gen g(13);
  for (int trial = 0; trial < 100; ++trial) {
    auto v = g.vec(std::size_t(g.integer(2, 50)), -10, 10);
    const double tv = total_variation(v);
    const double k = g.uniform(-5, 5);
    std::vector<double> s(v);
    for (double& x : s) x *= k;
    CHECK(total_variation(s) == doctest::Approx(std::fabs(k) * tv).epsilon(1e-12));
    std::reverse(v.begin(), v.end());
    CHECK(total_variation(v) == doctest::Approx(tv).epsilon(1e-12));
  }
}

TEST_CASE("mean and median") {
  CHECK(mean(std::vector<double>{1, 2, 6}) == 3.0);
  CHECK(median(std::vector<double>{5, 1, 3}) == 3.0);
  CHECK(median(std::vector<double>{4, 1, 3, 2}) == 2.5);
  CHECK_THROWS_AS(median(std::vector<double>{}), ValidationError);
}

TEST_CASE("keyed streams are pure functions of key and counter") {
  KeyedStream a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(KeyedStream(42).at(7) == KeyedStream(42).at(7));
  CHECK(KeyedStream(42).at(7) != KeyedStream(43).at(7));
  const auto n1 = KeyedStream(1).substream("noise"), o1 = KeyedStream(1).substream("outliers");
  CHECK(n1.at(0) != o1.at(0));
  CHECK(stream_key(1, "sine_sum", "fd", 0.5, 0) == stream_key(1, "sine_sum", "fd", 0.5, 0));
  CHECK(stream_key(1, "sine_sum", "fd", 0.5, 0) != stream_key(1, "sine_sum", "fd", 0.5, 1));
  CHECK(stream_key(1, "sine_sum", "fd", 0.5, 0) != stream_key(1, "triangles", "fd", 0.5, 0));
}

TEST_CASE("keyed stream moments") {
  KeyedStream s(2024);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0, sl2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    CHECK_MESSAGE((u >= 0.0 && u < 1.0), "uniform out of range");
    su += u;
    su2 += u * u;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
    const double l = s.laplace(0.5);
    sl2 += l * l;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(su2 / n - (su / n) * (su / n) == doctest::Approx(1.0 / 12.0).epsilon(0.02));
  CHECK(std::fabs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sl2 / n == doctest::Approx(2 * 0.25).epsilon(0.03));  // var = 2 b^2
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto k = s.below(7);
    CHECK(k < 7);
    seen.insert(k);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("parallel_for visits every index once") {
  for (unsigned threads : {1u, 2u, 4u}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    bool ok = true;
    for (auto& h : hits) ok = ok && h.load() == 1;
    CHECK(ok);
  }
  CHECK(worker_count() >= 1);
}
