#pragma once

// Small helpers shared by the unit tests: a seeded generator for property
// runs and a few vector utilities. The generator is std::mt19937_64 on
// purpose, so property inputs do not depend on the library's own RNG.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ndiff::test {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

  std::vector<double> vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform(lo, hi);
    return v;
  }

  // Strictly increasing points starting at t0, steps in [lo, hi].
  std::vector<double> grid(std::size_t n, double t0 = 0.0, double lo = 0.05, double hi = 0.2) {
    std::vector<double> t(n);
    t[0] = t0;
    for (std::size_t i = 1; i < n; ++i) t[i] = t[i - 1] + uniform(lo, hi);
    return t;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * double(i) / double(n - 1);
  return v;
}

inline std::vector<double> arange(double t0, double dt, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = t0 + dt * double(i);
  return v;
}

template <class F>
std::vector<double> map(std::span<const double> t, F f) {
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = f(t[i]);
  return v;
}

}  // namespace ndiff::test
