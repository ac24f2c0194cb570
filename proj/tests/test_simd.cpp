#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "ndiff/simd.hpp"
#include "support.hpp"

using namespace ndiff;
using ndiff::test::Gen;

namespace {

// Naive loops written independently of the library's reference kernels.
std::vector<double> naive_correlate(const std::vector<double>& x, const std::vector<double>& taps) {
  std::vector<double> out(x.size() - taps.size() + 1, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < taps.size(); ++j) out[i] += taps[j] * x[i + j];
  return out;
}

std::vector<const simd::KernelTable*> tables() {
  std::vector<const simd::KernelTable*> t{&simd::scalar_kernels()};
  if (auto* a = simd::avx2_kernels()) t.push_back(a);
  if (auto* n = simd::neon_kernels()) t.push_back(n);
  return t;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("scalar kernels against naive loops") {
  Gen g(1);
  const auto& s = simd::scalar_kernels();
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::size_t(g.integer(1, 300));
    const std::size_t k = std::size_t(g.integer(1, int(std::min<std::size_t>(n, 41))));
    const auto x = g.vec(n), taps = g.vec(k);
    std::vector<double> out(n - k + 1);
    s.correlate(x.data(), n, taps.data(), k, out.data());
    CHECK(test::max_abs_diff(out, naive_correlate(x, taps)) <= 1e-12);

    double sad = 0.0, dot = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) sad += std::fabs(x[i] - x[i + 1]);
    for (std::size_t i = 0; i < n; ++i) dot += x[i] * x[i];
    CHECK(s.sum_abs_diff(x.data(), n) == doctest::Approx(sad).epsilon(1e-12));
    CHECK(s.dot(x.data(), x.data(), n) == doctest::Approx(dot).epsilon(1e-12));

    const double kappa = g.uniform(0, 0.8);
    std::vector<double> st(n);
    s.soft_threshold(x.data(), n, kappa, st.data());
    for (std::size_t i = 0; i < n; ++i) {
      const double want = x[i] > kappa ? x[i] - kappa : (x[i] < -kappa ? x[i] + kappa : 0.0);
      CHECK(st[i] == want);
    }
  }
}

TEST_CASE("vector variants are bit-identical to the scalar reference") {
  Gen g(2);
  const auto& ref = simd::scalar_kernels();
  for (const auto* t : tables()) {
    INFO("isa = " << t->isa);
    for (int trial = 0; trial < 200; ++trial) {
      // Lengths straddle the vector width and unroll boundaries.
      const std::size_t n = std::size_t(g.integer(1, 70));
      const std::size_t k = std::size_t(g.integer(1, int(n)));
      const auto x = g.vec(n, -1e3, 1e3), y = g.vec(n), taps = g.vec(k);
      std::vector<double> a(n - k + 1), b(n - k + 1);
      ref.correlate(x.data(), n, taps.data(), k, a.data());
      t->correlate(x.data(), n, taps.data(), k, b.data());
      bool eq = true;
      for (std::size_t i = 0; i < a.size(); ++i) eq = eq && same_bits(a[i], b[i]);
      CHECK(eq);
      CHECK(same_bits(ref.sum_abs_diff(x.data(), n), t->sum_abs_diff(x.data(), n)));
      CHECK(same_bits(ref.dot(x.data(), y.data(), n), t->dot(x.data(), y.data(), n)));
      std::vector<double> sa(n), sb(n);
      const double kappa = g.uniform(0, 500);
      ref.soft_threshold(x.data(), n, kappa, sa.data());
      t->soft_threshold(x.data(), n, kappa, sb.data());
      eq = true;
      for (std::size_t i = 0; i < n; ++i) eq = eq && same_bits(sa[i], sb[i]);
      CHECK(eq);
    }
  }
}

TEST_CASE("soft threshold works in place and on signed zeros") {
  std::vector<double> v{-2.0, -0.5, 0.0, 0.5, 2.0};
  simd::soft_threshold(v, 1.0, v);
  CHECK(v[0] == -1.0);
  CHECK(v[1] == 0.0);
  CHECK(v[2] == 0.0);
  CHECK(v[3] == 0.0);
  CHECK(v[4] == 1.0);
}

TEST_CASE("empty and short inputs") {
  CHECK(simd::dot(std::vector<double>{}, std::vector<double>{}) == 0.0);
  CHECK(simd::sum_abs_diff(std::vector<double>{3.0}) == 0.0);
  for (const auto* t : tables()) {
    const double x[] = {1.0, 2.0, 4.0};
    CHECK(t->sum_abs_diff(x, 3) == 3.0);
    CHECK(t->dot(x, x, 3) == 21.0);
  }
}

TEST_CASE("dispatch reports a known instruction set") {
  const auto isa = simd::active().isa;
  CHECK((isa == "scalar" || isa == "avx2" || isa == "neon"));
}
