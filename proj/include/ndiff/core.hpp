#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ndiff {

// --- errors ---

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition. `index()` is the offending
/// sample when one exists, otherwise -1.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::ptrdiff_t index = -1)
      : Error(what), index_(index) {}
  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  std::ptrdiff_t index_;
};

/// Method cannot run on this kind of input (e.g. FFT methods on irregular grids).
class UnsupportedMethodError : public Error {
 public:
  using Error::Error;
};

/// A factorization, exponentiation or solve broke down.
class NumericError : public Error {
 public:
  using Error::Error;
};

// --- data model ---

/// Relative tolerance used to classify a grid as uniform.
inline constexpr double kUniformTol = 1e-9;

class Grid {
 public:
  explicit Grid(std::vector<double> points);
  static Grid uniform(double t0, double dt, std::size_t n);

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t i) const noexcept { return points_[i]; }
  bool is_uniform() const noexcept { return uniform_; }
  /// Step of a uniform grid; throws UnsupportedMethodError otherwise.
  double dt() const;
  /// Mean step, defined for any grid.
  double mean_dt() const noexcept;
  double front() const noexcept { return points_.front(); }
  double back() const noexcept { return points_.back(); }

 private:
  std::vector<double> points_;
  bool uniform_ = false;
  double dt_ = 0.0;
};

class Signal {
 public:
  Signal(Grid grid, std::vector<double> values);
  Signal(std::vector<double> t, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<double>& t() const noexcept { return grid_.points(); }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Same grid, new values (validated).
  Signal with_values(std::vector<double> values) const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

using Params = std::map<std::string, double>;

struct Diagnostics {
  bool converged = true;
  int iterations = 0;
  std::vector<std::string> warnings;
};

struct DerivativeResult {
  std::vector<double> smoothed;
  std::vector<double> derivative;
  std::string method;
  Params phi;
  Diagnostics diagnostics;
};

enum class Scale { Log, Linear, Integer };

struct ParamSpec {
  std::string name;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  Scale scale = Scale::Linear;
  bool tunable = true;  // false: held at `value` during tuning
};

struct MethodConfig {
  std::string method;
  std::vector<ParamSpec> params;

  Params values() const;
  /// Throws ValidationError if a value is out of bounds or a non-integral integer.
  void validate() const;
};

// --- validation ---

void validate_samples(std::span<const double> t, std::span<const double> y);
void validate(const Signal& signal);
/// Throws UnsupportedMethodError naming `method` when the grid is irregular.
void require_uniform(const Signal& signal, const char* method);

// --- primitives ---

std::vector<double> cumtrapz(std::span<const double> t, std::span<const double> v);
std::vector<double> cumtrapz(const Signal& signal);

/// (1/N) * sum |v[n] - v[n+1]|, N = v.size().
double total_variation(std::span<const double> v);

double mean(std::span<const double> v);
/// Median of a copy; v must be non-empty.
double median(std::span<const double> v);

}  // namespace ndiff
