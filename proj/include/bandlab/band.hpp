// Band-matrix shapes, index sets and structural validation.
//
// A bandwidth-b matrix keeps entries within b of the diagonal; the periodic
// variant also wraps around the corners, so every row holds exactly
// 2b+1 = row_budget() positions. Index-set functions speak the 1-based row /
// column convention of the underlying math; the `allows` predicate is 0-based
// for use in Eigen loops.
#pragma once

#include <cstdlib>
#include <vector>

#include "bandlab/types.hpp"

namespace bandlab {

struct BandShape {
  int n = 0;          // matrix dimension
  int bandwidth = 0;  // b: entries with |i-j| > b (mod wrap) vanish
  bool periodic = true;

  static BandShape make(int n, int bandwidth, bool periodic) {
    if (n < 1) throw std::invalid_argument("BandShape: n must be >= 1");
    if (bandwidth < 0) throw std::invalid_argument("BandShape: bandwidth must be >= 0");
    if (2 * bandwidth + 1 > n)
      throw std::invalid_argument("BandShape: band 2b+1 = " +
                                  std::to_string(2 * bandwidth + 1) +
                                  " does not fit n = " + std::to_string(n));
    return BandShape{n, bandwidth, periodic};
  }

  // c = 2b+1, the per-row budget of nonzero positions (exact for periodic
  // shapes, an upper bound for non-periodic ones).
  int row_budget() const { return 2 * bandwidth + 1; }

  // 0-based support predicate.
  bool allows(int i, int j) const {
    const int d = std::abs(i - j);
    if (d <= bandwidth) return true;
    return periodic && d >= n - bandwidth;
  }

  bool operator==(const BandShape&) const = default;
};

// Sorted 1-based positions in [1, n].
using IndexSet = std::vector<int>;

namespace detail {
inline void check_position(const BandShape& shape, int pos, const char* what) {
  if (pos < 1 || pos > shape.n)
    throw std::invalid_argument(std::string(what) + " index " + std::to_string(pos) +
                                " out of range [1, " + std::to_string(shape.n) + "]");
}
}  // namespace detail

// Columns allowed to be nonzero in row j (1-based). Periodic shapes always
// yield row_budget() positions.
inline IndexSet row_index_set(const BandShape& shape, int row) {
  detail::check_position(shape, row, "row");
  IndexSet out;
  out.reserve(shape.row_budget());
  for (int col = 1; col <= shape.n; ++col)
    if (shape.allows(row - 1, col - 1)) out.push_back(col);
  return out;
}

// Rows allowed to be nonzero in column k; the band predicate is symmetric in
// (i, j), so this mirrors row_index_set.
inline IndexSet column_index_set(const BandShape& shape, int col) {
  detail::check_position(shape, col, "column");
  IndexSet out;
  out.reserve(shape.row_budget());
  for (int row = 1; row <= shape.n; ++row)
    if (shape.allows(row - 1, col - 1)) out.push_back(row);
  return out;
}

// Closed-form row count for non-periodic shapes (1-based row). Matches
// |row_index_set| whenever 2b+1 < n; for the degenerate full band 2b+1 = n it
// is only an upper bound.
inline int nonperiodic_row_count(const BandShape& shape, int row) {
  detail::check_position(shape, row, "row");
  const int b = shape.bandwidth, n = shape.n;
  int count = b;
  if (row <= b + 1) count += row;
  if (b + 1 < row && row < n - b) count += b + 1;
  if (row >= n - b) count += n + 1 - row;
  return count;
}

// Dense matrix paired with the band shape its support is supposed to respect.
// The support condition is an invariant checked by `validate`, not a storage
// format: downstream Gram spectra are dense regardless, and truncation of
// singular values legitimately produces off-band entries.
template <typename Scalar>
struct BandMatrixT {
  BandShape shape;
  DenseMatrix<Scalar> entries;

  static BandMatrixT zero(const BandShape& shape) {
    return {shape, DenseMatrix<Scalar>::Zero(shape.n, shape.n)};
  }
};

using BandMatrix = BandMatrixT<Complex>;
using RealBandMatrix = BandMatrixT<double>;

struct BandViolation {
  int row = 0, col = 0;  // 1-based
  bool operator==(const BandViolation&) const = default;
};

// All positions holding a nonzero outside the allowed band. Empty = valid.
template <typename Derived>
std::vector<BandViolation> band_violations(const BandShape& shape,
                                           const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != shape.n || m.cols() != shape.n)
    throw std::invalid_argument("band_violations: matrix is not n x n for its shape");
  std::vector<BandViolation> out;
  for (int j = 0; j < shape.n; ++j)
    for (int i = 0; i < shape.n; ++i)
      if (m(i, j) != typename Derived::Scalar(0) && !shape.allows(i, j))
        out.push_back({i + 1, j + 1});
  return out;
}

template <typename Scalar>
std::vector<BandViolation> validate(const BandMatrixT<Scalar>& m) {
  return band_violations(m.shape, m.entries);
}

}  // namespace bandlab
