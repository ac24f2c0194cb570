#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ndiff/core.hpp"

namespace ndiff {

enum class TvrSolver { InteriorPoint, Admm };

struct TvrSpec {
  int nu = 1;
  double gamma = 1.0;
  double tol = 1e-6;
  int max_iter = 20000;
  std::optional<double> soften_sigma;  // samples
  TvrSolver solver = TvrSolver::InteriorPoint;
};

/// Sparse row-banded matrix: row i holds values for columns first[i] ...
struct BandRows {
  std::size_t cols = 0;
  std::vector<std::size_t> first;
  std::vector<std::vector<double>> values;

  std::size_t rows() const noexcept { return first.size(); }
  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply_transpose(std::span<const double> w) const;
};

/// First-derivative matrix with unit spacing: centered interior rows, the
/// 3-point one-sided scheme at both ends.
BandRows fd_matrix(std::size_t n);

/// Forward difference of the nu-fold FD derivative, with unit spacing:
/// (N-1) x N. The TV penalty is (1/N) * ||G x||_1 / dt^nu.
BandRows tv_operator(std::size_t n, int nu);

/// Objective ||y - x||^2 + gamma * TV(D^nu x) with TV normalized by N.
double tvr_objective(const Signal& signal, std::span<const double> x, int nu, double gamma);

/// Minimizes ||y - x||^2 + gamma * TV(D^nu x). The default solver is a
/// primal-dual interior point method on the dual box QP, stopping on a
/// duality gap below tol * |objective|. The ADMM solver uses a cached banded
/// factorization and stops on a gap below tol * (1 + |objective|) with primal
/// and dual residuals below tol * sqrt(N). phi["gap"] holds the final certified gap.
DerivativeResult tvrdiff(const Signal& signal, const TvrSpec& spec);

/// tvrdiff with nu = 2, then the derivative convolved with a Gaussian of
/// soften_sigma samples.
DerivativeResult smooth_accel_tvr(const Signal& signal, const TvrSpec& spec);

}  // namespace ndiff
