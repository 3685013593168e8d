#include "bkifd/core_numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bkifd/errors.hpp"

namespace bkifd {

namespace {

std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void require_inner(Index a_cols, Index b_rows, const char* op) {
  if (a_cols != b_rows) {
    throw ArgumentError(std::string(op) + ": inner dimensions differ (" + std::to_string(a_cols) +
                        " vs " + std::to_string(b_rows) + ")");
  }
}

}  // namespace

void require_finite(const DenseMatrix& a, std::string_view what) {
  if (!a.allFinite()) {
    throw ArgumentError(std::string(what) + ": non-finite entry");
  }
}

// ---------------------------------------------------------------------------
// SparseMatrix

SparseMatrix::SparseMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), row_ptr_(static_cast<std::size_t>(rows) + 1, 0) {
  if (rows < 0 || cols < 0) throw ArgumentError("SparseMatrix: negative shape");
}

SparseMatrix SparseMatrix::from_csr(Index rows, Index cols, std::vector<Index> row_ptr,
                                    std::vector<Index> col_idx, std::vector<double> values) {
  if (rows < 0 || cols < 0) throw ArgumentError("SparseMatrix: negative shape");
  if (row_ptr.size() != static_cast<std::size_t>(rows) + 1 || row_ptr.front() != 0) {
    throw ArgumentError("SparseMatrix: row_ptr must have rows+1 entries starting at 0");
  }
  if (col_idx.size() != values.size() ||
      row_ptr.back() != static_cast<Index>(values.size())) {
    throw ArgumentError("SparseMatrix: row_ptr[rows] must equal nnz");
  }
  for (Index i = 0; i < rows; ++i) {
    const Index lo = row_ptr[i];
    const Index hi = row_ptr[i + 1];
    if (hi < lo) throw ArgumentError("SparseMatrix: row_ptr must be nondecreasing");
    for (Index p = lo; p < hi; ++p) {
      if (col_idx[p] < 0 || col_idx[p] >= cols) {
        throw ArgumentError("SparseMatrix: column index out of range in row " + std::to_string(i));
      }
      if (p > lo && col_idx[p] <= col_idx[p - 1]) {
        throw ArgumentError("SparseMatrix: column indices not strictly increasing in row " +
                            std::to_string(i));
      }
      if (!std::isfinite(values[p]) || values[p] == 0.0) {
        throw ArgumentError("SparseMatrix: stored values must be finite and nonzero");
      }
    }
  }
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_ = std::move(row_ptr);
  m.col_idx_ = std::move(col_idx);
  m.values_ = std::move(values);
  return m;
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& a) {
  require_finite(a, "SparseMatrix::from_dense");
  SparseMatrix m(0, a.cols());
  std::vector<Index> cols;
  std::vector<double> vals;
  for (Index i = 0; i < a.rows(); ++i) {
    cols.clear();
    vals.clear();
    for (Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != 0.0) {
        cols.push_back(j);
        vals.push_back(a(i, j));
      }
    }
    m.push_row(cols, vals);
  }
  return m;
}

void SparseMatrix::push_row(std::span<const Index> cols, std::span<const double> values) {
  if (cols.size() != values.size()) throw ArgumentError("push_row: index/value length mismatch");
  for (std::size_t p = 0; p < cols.size(); ++p) {
    if (cols[p] < 0 || cols[p] >= cols_) throw ArgumentError("push_row: column index out of range");
    if (p > 0 && cols[p] <= cols[p - 1]) {
      throw ArgumentError("push_row: column indices not strictly increasing");
    }
    if (!std::isfinite(values[p])) throw ArgumentError("push_row: non-finite value");
    if (values[p] == 0.0) continue;
    col_idx_.push_back(cols[p]);
    values_.push_back(values[p]);
  }
  row_ptr_.push_back(static_cast<Index>(values_.size()));
  ++rows_;
}

SparseMatrix SparseMatrix::slice_rows(Index begin, Index end) const {
  if (begin < 0 || end > rows_ || begin > end) throw ArgumentError("slice_rows: bad range");
  SparseMatrix out;
  out.rows_ = end - begin;
  out.cols_ = cols_;
  const Index base = row_ptr_[begin];
  out.row_ptr_.resize(static_cast<std::size_t>(out.rows_) + 1);
  for (Index i = 0; i <= out.rows_; ++i) out.row_ptr_[i] = row_ptr_[begin + i] - base;
  out.col_idx_.assign(col_idx_.begin() + base, col_idx_.begin() + row_ptr_[end]);
  out.values_.assign(values_.begin() + base, values_.begin() + row_ptr_[end]);
  return out;
}

SparseMatrix SparseMatrix::pad_rows(Index extra) const {
  SparseMatrix out = *this;
  out.rows_ += extra;
  out.row_ptr_.resize(static_cast<std::size_t>(out.rows_) + 1, nnz());
  return out;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d = DenseMatrix::Zero(rows_, cols_);
  for (Index i = 0; i < rows_; ++i) {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_idx_[p]) = values_[p];
  }
  return d;
}

// ---------------------------------------------------------------------------
// Factorizations

SvdFactors svd_thin(const DenseMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw ArgumentError("svd_thin: empty matrix");
  const Eigen::MatrixXd work = a;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(work, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
    throw NumericalError("svd_thin: SVD did not converge for " + shape_str(a.rows(), a.cols()) +
                         " matrix");
  }
  const Vector& sv = svd.singularValues();
  const Index r = sv.size();
  std::vector<Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return sv[x] > sv[y]; });

  SvdFactors f;
  f.u.resize(a.rows(), r);
  f.s.resize(r);
  f.vt.resize(r, a.cols());
  for (Index i = 0; i < r; ++i) {
    const Index src = order[static_cast<std::size_t>(i)];
    f.s[i] = std::max(sv[src], 0.0);
    f.u.col(i) = svd.matrixU().col(src);
    f.vt.row(i) = svd.matrixV().col(src).transpose();
  }
  return f;
}

SvdFactors truncated_svd(const DenseMatrix& a, Index k) {
  const Index r = std::min(a.rows(), a.cols());
  if (k < 1 || k > r) {
    throw ArgumentError("truncated_svd: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(r) + "]");
  }
  SvdFactors full = svd_thin(a);
  if (k == r) return full;
  SvdFactors f;
  f.u = full.u.leftCols(k);
  f.s = full.s.head(k);
  f.vt = full.vt.topRows(k);
  return f;
}

Vector singular_values(const DenseMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw ArgumentError("singular_values: empty matrix");
  const Eigen::MatrixXd work = a;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(work);
  if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
    throw NumericalError("singular_values: SVD did not converge for " +
                         shape_str(a.rows(), a.cols()) + " matrix");
  }
  Vector s = svd.singularValues();
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

double default_ortho_tol(Index rows, Index cols) noexcept {
  return 1e-12 * static_cast<double>(std::max(rows, cols));
}

DenseMatrix orthonormalize_columns(const DenseMatrix& k, double tol) {
  if (k.rows() == 0 || k.cols() == 0) throw ArgumentError("orthonormalize_columns: empty matrix");
  const double threshold = tol * k.norm();
  const Index n = k.rows();
  if (threshold == 0.0 && k.isZero(0.0)) return DenseMatrix(n, 0);

  Eigen::MatrixXd q(n, std::min(n, k.cols()));
  Index r = 0;
  Vector v(n);
  Vector h;
  for (Index j = 0; j < k.cols() && r < n; ++j) {
    v = k.col(j);
    for (int pass = 0; pass < 2 && r > 0; ++pass) {
      h.noalias() = q.leftCols(r).transpose() * v;
      v.noalias() -= q.leftCols(r) * h;
    }
    const double norm = v.norm();
    if (norm > threshold) q.col(r++) = v / norm;
  }
  return q.leftCols(r);
}

DenseMatrix orthonormalize_columns(const DenseMatrix& k) {
  return orthonormalize_columns(k, default_ortho_tol(k.rows(), k.cols()));
}

SpectralEstimate spectral_norm_symmetric(const DenseMatrix& m, double rel_tol,
                                         std::size_t max_iter, Seed seed) {
  if (m.rows() != m.cols()) throw ArgumentError("spectral_norm_symmetric: matrix not square");
  if (m.rows() == 0) return {0.0, true, 0};
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw ArgumentError("spectral_norm_symmetric: matrix not symmetric");
  }

  CounterRng rng(seed);
  Vector x(m.rows());
  for (Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
  x.normalize();

  SpectralEstimate est;
  Vector y(m.rows());
  double prev = -1.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    y.noalias() = m * x;
    const double value = y.norm();
    est.iterations = it;
    est.value = std::max(est.value, value);
    if (value == 0.0) {
      est.converged = true;
      return est;
    }
    if (prev >= 0.0 && std::abs(value - prev) <= rel_tol * value) {
      est.converged = true;
      return est;
    }
    prev = value;
    x = y / value;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Products

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, OpCounter* ctr) {
  require_inner(a.cols(), b.rows(), "matmul");
  DenseMatrix out(a.rows(), b.cols());
  out.noalias() = a * b;
  if (ctr) ctr->add(static_cast<std::uint64_t>(a.rows() * a.cols() * b.cols()));
  return out;
}

DenseMatrix matmul(const SparseMatrix& a, const DenseMatrix& b, OpCounter* ctr) {
  require_inner(a.cols(), b.rows(), "matmul");
  DenseMatrix out = DenseMatrix::Zero(a.rows(), b.cols());
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto vals = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index p = rp[i]; p < rp[i + 1]; ++p) out.row(i) += vals[p] * b.row(ci[p]);
  }
  if (ctr) ctr->add(static_cast<std::uint64_t>(a.nnz() * b.cols()));
  return out;
}

DenseMatrix matmul_transposed(const DenseMatrix& a, const DenseMatrix& b, OpCounter* ctr) {
  require_inner(a.rows(), b.rows(), "matmul_transposed");
  DenseMatrix out(a.cols(), b.cols());
  out.noalias() = a.transpose() * b;
  if (ctr) ctr->add(static_cast<std::uint64_t>(a.rows() * a.cols() * b.cols()));
  return out;
}

DenseMatrix matmul_transposed(const SparseMatrix& a, const DenseMatrix& b, OpCounter* ctr) {
  require_inner(a.rows(), b.rows(), "matmul_transposed");
  DenseMatrix out = DenseMatrix::Zero(a.cols(), b.cols());
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto vals = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index p = rp[i]; p < rp[i + 1]; ++p) out.row(ci[p]) += vals[p] * b.row(i);
  }
  if (ctr) ctr->add(static_cast<std::uint64_t>(a.nnz() * b.cols()));
  return out;
}

DenseMatrix gram(const DenseMatrix& a) {
  DenseMatrix g(a.cols(), a.cols());
  g.noalias() = a.transpose() * a;
  return g;
}

DenseMatrix gram(const SparseMatrix& a) {
  DenseMatrix g = DenseMatrix::Zero(a.cols(), a.cols());
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto vals = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index p = rp[i]; p < rp[i + 1]; ++p) {
      for (Index r = rp[i]; r < rp[i + 1]; ++r) g(ci[p], ci[r]) += vals[p] * vals[r];
    }
  }
  return g;
}

double frobenius_norm(const DenseMatrix& a) { return a.norm(); }

double frobenius_norm(const SparseMatrix& a) {
  double sum = 0.0;
  for (double v : a.values()) sum += v * v;
  return std::sqrt(sum);
}

}  // namespace bkifd
