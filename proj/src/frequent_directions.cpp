#include "bkifd/frequent_directions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bkifd/errors.hpp"

namespace bkifd {

FrequentDirections::FrequentDirections(Index ell, Index d) : ell_(ell), d_(d) {
  if (ell < 2) throw ArgumentError("FrequentDirections: ell must be >= 2 (got " + std::to_string(ell) + ")");
  if (d < 1) throw ArgumentError("FrequentDirections: d must be >= 1");
  buffer_ = DenseMatrix::Zero(2 * ell, d);
}

template <typename RowExpr>
void FrequentDirections::push_row(const RowExpr& row) {
  buffer_.row(filled_) = row;
  ++filled_;
  if (filled_ == buffer_.rows()) shrink();
}

void FrequentDirections::insert(const DenseMatrix& rows) {
  if (rows.cols() != d_) {
    throw ArgumentError("FrequentDirections::insert: expected " + std::to_string(d_) +
                        " columns, got " + std::to_string(rows.cols()));
  }
  require_finite(rows, "FrequentDirections::insert");
  for (Index i = 0; i < rows.rows(); ++i) push_row(rows.row(i));
}

void FrequentDirections::insert(const SparseMatrix& rows) {
  if (rows.cols() != d_) {
    throw ArgumentError("FrequentDirections::insert: expected " + std::to_string(d_) +
                        " columns, got " + std::to_string(rows.cols()));
  }
  const auto rp = rows.row_ptr();
  const auto ci = rows.col_idx();
  const auto vals = rows.values();
  Eigen::RowVectorXd dense(d_);
  for (Index i = 0; i < rows.rows(); ++i) {
    dense.setZero();
    for (Index p = rp[i]; p < rp[i + 1]; ++p) dense[ci[p]] = vals[p];
    push_row(dense);
  }
}

void FrequentDirections::shrink() {
  ++shrinks_;
  if (filled_ == 0) {
    last_delta_ = 0.0;
    return;
  }
  // Rows at and beyond filled_ are zero, so they do not change the factorization.
  const SvdFactors f = svd_thin(buffer_.topRows(filled_));
  const Index r = f.s.size();
  const double delta = r >= ell_ ? f.s[ell_ - 1] * f.s[ell_ - 1] : 0.0;
  last_delta_ = delta;

  buffer_.setZero();
  const Index keep = std::min(r, ell_ - 1);
  for (Index i = 0; i < keep; ++i) {
    const double shrunk = std::sqrt(std::max(f.s[i] * f.s[i] - delta, 0.0));
    buffer_.row(i) = shrunk * f.vt.row(i);
  }
  filled_ = std::min(filled_, ell_ - 1);
}

DenseMatrix FrequentDirections::finalize() const {
  if (filled_ >= ell_) {
    FrequentDirections copy = *this;
    copy.shrink();
    return copy.buffer_.topRows(ell_ - 1);
  }
  return buffer_.topRows(ell_ - 1);
}

}  // namespace bkifd
