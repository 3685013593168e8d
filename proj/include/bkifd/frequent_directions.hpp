#pragma once

#include <cstddef>

#include "bkifd/core_numerics.hpp"

namespace bkifd {

/// Fast Frequent Directions over a 2*ell x d buffer.
///
/// Rows are written into the next zero row; when the last free row is taken
/// the buffer is shrunk: with B = U S V^T and delta = s_ell^2, B becomes
/// sqrt(max(S^2 - delta, 0)) V^T, leaving at most ell-1 nonzero rows. The
/// finalized sketch B ((ell-1) x d) satisfies, for every k < ell,
///
///   ||A^T A - B^T B||_2 <= ||A - A_k||_F^2 / (ell - k).
///
/// Single owner; not internally synchronized.
class FrequentDirections {
 public:
  FrequentDirections(Index ell, Index d);

  /// Appends rows in order, shrinking whenever the buffer fills.
  /// Throws ArgumentError on a width mismatch or non-finite entry.
  void insert(const DenseMatrix& rows);
  void insert(const SparseMatrix& rows);

  /// Shrinks at the current fill level. s_ell is taken as 0 when the buffer
  /// has fewer than ell singular values.
  void shrink();

  /// (ell-1) x d sketch. Shrinks a copy first if ell or more rows are occupied.
  DenseMatrix finalize() const;

  Index ell() const noexcept { return ell_; }
  Index dim() const noexcept { return d_; }
  Index filled() const noexcept { return filled_; }
  const DenseMatrix& buffer() const noexcept { return buffer_; }
  std::size_t shrink_count() const noexcept { return shrinks_; }
  /// delta subtracted by the most recent shrink.
  double last_delta() const noexcept { return last_delta_; }

 private:
  template <typename RowExpr>
  void push_row(const RowExpr& row);

  Index ell_;
  Index d_;
  DenseMatrix buffer_;
  Index filled_ = 0;
  std::size_t shrinks_ = 0;
  double last_delta_ = 0.0;
};

}  // namespace bkifd
