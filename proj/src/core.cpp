#include "ndiff/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ndiff/simd.hpp"

namespace ndiff {

namespace {

std::string at(const char* what, std::size_t i) {
  std::ostringstream os;
  os << what << " at index " << i;
  return os.str();
}

void validate_points(std::span<const double> t) {
  if (t.size() < 2) throw ValidationError("grid needs at least 2 points");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) throw ValidationError(at("non-finite timestamp", i), std::ptrdiff_t(i));
    if (i > 0 && !(t[i] > t[i - 1]))
      throw ValidationError(at("timestamps not strictly increasing", i), std::ptrdiff_t(i));
  }
}

void validate_values(std::span<const double> y) {
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i])) throw ValidationError(at("non-finite value", i), std::ptrdiff_t(i));
}

}  // namespace

// --- Grid ---

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
  validate_points(points_);
  const std::size_t n = points_.size();
  const double step = (points_.back() - points_.front()) / double(n - 1);
  double worst = 0.0;
  for (std::size_t i = 1; i < n; ++i)
    worst = std::max(worst, std::fabs((points_[i] - points_[i - 1]) - step));
  uniform_ = worst <= kUniformTol * step;
  dt_ = uniform_ ? step : 0.0;
}

Grid Grid::uniform(double t0, double dt, std::size_t n) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("uniform grid needs dt > 0");
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = t0 + double(i) * dt;
  return Grid(std::move(p));
}

double Grid::dt() const {
  if (!uniform_) throw UnsupportedMethodError("grid is not uniform");
  return dt_;
}

double Grid::mean_dt() const noexcept {
  return (points_.back() - points_.front()) / double(points_.size() - 1);
}

// --- Signal ---

Signal::Signal(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw ValidationError("signal length " + std::to_string(values_.size()) +
                          " does not match grid length " + std::to_string(grid_.size()));
  validate_values(values_);
}

Signal::Signal(std::vector<double> t, std::vector<double> values)
    : Signal(Grid(std::move(t)), std::move(values)) {}

Signal Signal::with_values(std::vector<double> values) const { return Signal(grid_, std::move(values)); }

// --- MethodConfig ---

Params MethodConfig::values() const {
  Params p;
  for (const auto& s : params) p[s.name] = s.value;
  return p;
}

void MethodConfig::validate() const {
  for (const auto& s : params) {
    if (!(s.value >= s.lo && s.value <= s.hi))
      throw ValidationError("parameter '" + s.name + "' = " + std::to_string(s.value) +
                            " outside [" + std::to_string(s.lo) + ", " + std::to_string(s.hi) + "]");
    if (s.scale == Scale::Integer && s.value != std::round(s.value))
      throw ValidationError("parameter '" + s.name + "' must be an integer");
    if (s.scale == Scale::Log && !(s.lo > 0.0))
      throw ValidationError("log-scaled parameter '" + s.name + "' needs a positive lower bound");
  }
}

// --- validation ---

void validate_samples(std::span<const double> t, std::span<const double> y) {
  validate_points(t);
  if (y.size() != t.size())
    throw ValidationError("value count " + std::to_string(y.size()) + " does not match timestamp count " +
                          std::to_string(t.size()));
  validate_values(y);
}

void validate(const Signal& signal) { validate_samples(signal.t(), signal.values()); }

void require_uniform(const Signal& signal, const char* method) {
  if (!signal.grid().is_uniform())
    throw UnsupportedMethodError(std::string(method) + " requires a uniform grid");
}

// --- primitives ---

std::vector<double> cumtrapz(std::span<const double> t, std::span<const double> v) {
  if (t.size() != v.size()) throw ValidationError("cumtrapz: length mismatch");
  validate_values(v);
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t n = 1; n < v.size(); ++n) out[n] = out[n - 1] + 0.5 * (v[n] + v[n - 1]) * (t[n] - t[n - 1]);
  return out;
}

std::vector<double> cumtrapz(const Signal& signal) { return cumtrapz(signal.t(), signal.values()); }

double total_variation(std::span<const double> v) {
  if (v.size() < 2) throw ValidationError("total_variation needs at least 2 values");
  return simd::sum_abs_diff(v) / double(v.size());
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double median(std::span<const double> v) {
  if (v.empty()) throw ValidationError("median of empty sequence");
  std::vector<double> c(v.begin(), v.end());
  const std::size_t mid = c.size() / 2;
  std::nth_element(c.begin(), c.begin() + std::ptrdiff_t(mid), c.end());
  const double hi = c[mid];
  if (c.size() % 2 == 1) return hi;
  const double lo = *std::max_element(c.begin(), c.begin() + std::ptrdiff_t(mid));
  return 0.5 * (lo + hi);
}

}  // namespace ndiff
