#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ndiff::linalg {

/// Symmetric positive definite band matrix, lower triangle stored by row.
/// Factor once, solve many times.
class BandedSpd {
 public:
  BandedSpd(std::size_t n, std::size_t bandwidth);

  std::size_t size() const noexcept { return n_; }
  std::size_t bandwidth() const noexcept { return bw_; }

  /// Accumulate into A(i, j); the symmetric partner is implied. |i - j| <= bandwidth.
  void add(std::size_t i, std::size_t j, double v);
  double get(std::size_t i, std::size_t j) const;

  /// In-place Cholesky. Throws NumericError on a non-positive pivot.
  void factor();
  bool factored() const noexcept { return factored_; }
  void solve_in_place(std::span<double> b) const;
  std::vector<double> solve(std::span<const double> b) const;

 private:
  double& ref(std::size_t i, std::size_t j) { return a_[i * (bw_ + 1) + (j + bw_ - i)]; }
  double cref(std::size_t i, std::size_t j) const { return a_[i * (bw_ + 1) + (j + bw_ - i)]; }

  std::size_t n_, bw_;
  std::vector<double> a_;
  bool factored_ = false;
};

/// Least squares min ||M x - b|| for M with at most `width` contiguous nonzeros
/// per row, by Givens rotations row by row. Memory and time are linear in the
/// number of unknowns.
class BandedLeastSquares {
 public:
  BandedLeastSquares(std::size_t unknowns, std::size_t width);

  /// Adds the row M[first .. first + values.size()) = values with target rhs.
  void add_row(std::size_t first, std::span<const double> values, double rhs);

  /// Sum of squared residuals of the least-squares solution.
  double residual_ss() const noexcept { return resid_ss_; }
  /// max |R_ii| / min |R_ii|, a cheap lower bound on the 2-norm condition.
  double condition_estimate() const;
  /// Back substitution. Throws NumericError if the system is rank deficient.
  std::vector<double> solve() const;

 private:
  std::size_t m_, w_;
  std::vector<double> r_;   // row i holds R(i, i .. i + w - 1)
  std::vector<double> qtb_;
  double resid_ss_ = 0.0;
};

}  // namespace ndiff::linalg
