#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ndiff/core.hpp"

namespace ndiff {

/// Condition number above which a stencil solve is flagged.
inline constexpr double kStencilConditionWarn = 1e12;

struct StencilCoefficients {
  std::vector<double> c;
  double condition = 1.0;  // 2-norm condition of the scaled Vandermonde system
  bool ill_conditioned = false;
};

/// Weights c with sum_j c_j y(t + s_j dx) ~ y^(nu)(t), error O(dx^(S - nu)).
StencilCoefficients stencil_coefficients(std::span<const double> offsets, int nu, double dx);

/// Same system on raw distances (in units of t) from the evaluation point.
StencilCoefficients irregular_coefficients(std::span<const double> distances, int nu);

/// Sample index range [first, last] used for point i by fd_derivative.
/// Centered where the scheme fits, shrunk centered near edges, and the
/// nu+2 point one-sided scheme at the outermost samples.
std::pair<std::size_t, std::size_t> fd_stencil_range(std::size_t i, std::size_t n, int nu, int order);

/// nu-th derivative with even accuracy order 2..8. Works on irregular grids.
DerivativeResult fd_derivative(const Signal& signal, int nu, int order = 2);

/// Coefficients of the bounded-edge first-derivative pass used inside
/// iterated_fd at sample i (offsets relative to i), scaled by 1/dt.
std::pair<std::vector<int>, std::vector<double>> iterated_fd_pass_stencil(std::size_t i, std::size_t n,
                                                                           int order, double dt);

/// Alternate FD and trapezoidal integration `iterations` times, then one
/// ordinary FD pass. Uniform grids only.
DerivativeResult iterated_fd(const Signal& signal, int order, int iterations);

}  // namespace ndiff
