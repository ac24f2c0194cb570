#include "ndiff/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ndiff/core.hpp"

namespace ndiff::linalg {

// --- BandedSpd ---

BandedSpd::BandedSpd(std::size_t n, std::size_t bandwidth)
    : n_(n), bw_(std::min(bandwidth, n == 0 ? 0 : n - 1)), a_(n * (bw_ + 1), 0.0) {}

void BandedSpd::add(std::size_t i, std::size_t j, double v) {
  if (i < j) std::swap(i, j);
  if (i - j > bw_ || i >= n_) throw std::out_of_range("BandedSpd::add outside band");
  ref(i, j) += v;
  factored_ = false;
}

double BandedSpd::get(std::size_t i, std::size_t j) const {
  if (i < j) std::swap(i, j);
  if (i - j > bw_ || i >= n_) return 0.0;
  return cref(i, j);
}

void BandedSpd::factor() {
  for (std::size_t j = 0; j < n_; ++j) {
    const std::size_t k0 = j > bw_ ? j - bw_ : 0;
    double d = cref(j, j);
    for (std::size_t k = k0; k < j; ++k) d -= cref(j, k) * cref(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      std::ostringstream os;
      os << "banded Cholesky: non-positive pivot " << d << " at row " << j;
      throw NumericError(os.str());
    }
    const double ljj = std::sqrt(d);
    ref(j, j) = ljj;
    const std::size_t iend = std::min(n_ - 1, j + bw_);
    for (std::size_t i = j + 1; i <= iend; ++i) {
      const std::size_t ks = i > bw_ ? i - bw_ : 0;
      double s = cref(i, j);
      for (std::size_t k = std::max(ks, k0); k < j; ++k) s -= cref(i, k) * cref(j, k);
      ref(i, j) = s / ljj;
    }
  }
  factored_ = true;
}

void BandedSpd::solve_in_place(std::span<double> b) const {
  if (!factored_) throw std::logic_error("BandedSpd::solve before factor");
  if (b.size() != n_) throw std::invalid_argument("BandedSpd::solve size mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t k0 = i > bw_ ? i - bw_ : 0;
    double s = b[i];
    for (std::size_t k = k0; k < i; ++k) s -= cref(i, k) * b[k];
    b[i] = s / cref(i, i);
  }
  for (std::size_t ii = n_; ii-- > 0;) {
    const std::size_t kend = std::min(n_ - 1, ii + bw_);
    double s = b[ii];
    for (std::size_t k = ii + 1; k <= kend; ++k) s -= cref(k, ii) * b[k];
    b[ii] = s / cref(ii, ii);
  }
}

std::vector<double> BandedSpd::solve(std::span<const double> b) const {
  std::vector<double> x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

// --- BandedLeastSquares ---

BandedLeastSquares::BandedLeastSquares(std::size_t unknowns, std::size_t width)
    : m_(unknowns), w_(width), r_(unknowns * width, 0.0), qtb_(unknowns, 0.0) {
  if (width == 0) throw std::invalid_argument("BandedLeastSquares: zero width");
}

void BandedLeastSquares::add_row(std::size_t first, std::span<const double> values, double rhs) {
  if (values.size() > w_) throw std::invalid_argument("BandedLeastSquares: row wider than band");
  if (first + values.size() > m_) throw std::out_of_range("BandedLeastSquares: row outside matrix");
  // Work row aligned so that h[k] is column `col + k`.
  std::vector<double> h(w_, 0.0);
  std::copy(values.begin(), values.end(), h.begin());
  std::size_t col = first;
  double b = rhs;
  while (col < m_) {
    const double piv = h[0];
    double* ri = &r_[col * w_];
    if (piv != 0.0) {
      if (ri[0] == 0.0) {
        // Empty row of R: the incoming row takes its place.
        std::copy(h.begin(), h.end(), ri);
        qtb_[col] = b;
        return;
      }
      const double rr = std::hypot(ri[0], piv);
      const double c = ri[0] / rr;
      const double s = piv / rr;
      ri[0] = rr;
      for (std::size_t k = 1; k < w_; ++k) {
        const double a = ri[k];
        const double z = h[k];
        ri[k] = c * a + s * z;
        h[k] = -s * a + c * z;
      }
      const double qa = qtb_[col];
      qtb_[col] = c * qa + s * b;
      b = -s * qa + c * b;
    }
    // Shift the work row one column to the right.
    bool any = false;
    for (std::size_t k = 0; k + 1 < w_; ++k) {
      h[k] = h[k + 1];
      any = any || h[k] != 0.0;
    }
    h[w_ - 1] = 0.0;
    ++col;
    if (!any) break;
  }
  resid_ss_ += b * b;
}

double BandedLeastSquares::condition_estimate() const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    const double d = std::fabs(r_[i * w_]);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

std::vector<double> BandedLeastSquares::solve() const {
  double hi = 0.0;
  for (std::size_t i = 0; i < m_; ++i) hi = std::max(hi, std::fabs(r_[i * w_]));
  std::vector<double> x(m_, 0.0);
  for (std::size_t ii = m_; ii-- > 0;) {
    const double* ri = &r_[ii * w_];
    if (!(std::fabs(ri[0]) > 1e-14 * hi)) {
      std::ostringstream os;
      os << "banded least squares is rank deficient at column " << ii
         << " (condition estimate " << condition_estimate() << ")";
      throw NumericError(os.str());
    }
    double s = qtb_[ii];
    for (std::size_t k = 1; k < w_ && ii + k < m_; ++k) s -= ri[k] * x[ii + k];
    x[ii] = s / ri[0];
  }
  return x;
}

}  // namespace ndiff::linalg
