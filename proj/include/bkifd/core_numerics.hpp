#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bkifd/op_counter.hpp"
#include "bkifd/rng.hpp"

namespace bkifd {

using Index = Eigen::Index;

/// Row-major dense matrix of doubles. Entry points that accept external data
/// validate finiteness with require_finite().
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Throws ArgumentError naming `what` if any entry is NaN or infinite.
void require_finite(const DenseMatrix& a, std::string_view what);

/// Compressed sparse row matrix. Column indices are strictly increasing within
/// each row and every stored value is finite and nonzero.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Empty (all-zero) rows x cols matrix.
  SparseMatrix(Index rows, Index cols);

  /// Validates the CSR invariants and throws ArgumentError on violation.
  static SparseMatrix from_csr(Index rows, Index cols, std::vector<Index> row_ptr,
                               std::vector<Index> col_idx, std::vector<double> values);
  /// Stores every nonzero of `a`.
  static SparseMatrix from_dense(const DenseMatrix& a);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nnz() const noexcept { return static_cast<Index>(values_.size()); }

  std::span<const Index> row_ptr() const noexcept { return row_ptr_; }
  std::span<const Index> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Rows [begin, end) as a new matrix.
  SparseMatrix slice_rows(Index begin, Index end) const;
  /// Appends `extra` empty rows at the bottom.
  SparseMatrix pad_rows(Index extra) const;
  DenseMatrix to_dense() const;

  /// Appends one row given sorted, strictly increasing column indices.
  /// Zero values are skipped.
  void push_row(std::span<const Index> cols, std::span<const double> values);

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

/// Thin SVD: u is rows x r, s descending (length r), vt is r x cols,
/// r = min(rows, cols).
struct SvdFactors {
  DenseMatrix u;
  Vector s;
  DenseMatrix vt;
};

/// Thin SVD. Throws ArgumentError on empty input and NumericalError (with the
/// shape) if the kernel reports failure.
SvdFactors svd_thin(const DenseMatrix& a);

/// Top-k singular triplets of svd_thin(a); equal singular values keep their
/// original index order.
SvdFactors truncated_svd(const DenseMatrix& a, Index k);

/// Singular values only, descending.
Vector singular_values(const DenseMatrix& a);

/// 1e-12 * max(rows, cols).
double default_ortho_tol(Index rows, Index cols) noexcept;

/// Orthonormal basis for the numerical column space of `k` by classical
/// Gram-Schmidt with one reorthogonalization pass. A column is dropped when
/// its residual norm after projection is <= tol * ||k||_F. An all-zero
/// input yields a rows x 0 matrix.
DenseMatrix orthonormalize_columns(const DenseMatrix& k, double tol);
DenseMatrix orthonormalize_columns(const DenseMatrix& k);

struct SpectralEstimate {
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

inline constexpr double kSpectralRelTol = 1e-9;
inline constexpr std::size_t kSpectralMaxIter = 10000;

/// Largest |eigenvalue| of a symmetric matrix by power iteration from a seeded
/// Gaussian start. The estimate is ||M x|| for the current unit iterate
/// (the square root of the Rayleigh quotient of M^2), which is monotone in the
/// iteration count. Stops when successive estimates agree to rel_tol.
SpectralEstimate spectral_norm_symmetric(const DenseMatrix& m, double rel_tol = kSpectralRelTol,
                                         std::size_t max_iter = kSpectralMaxIter,
                                         Seed seed = Seed{0x5eed});

// Products. All throw ArgumentError on inner-dimension mismatch and, when a
// counter is supplied, add the multiply-adds performed against `a`.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, OpCounter* ctr = nullptr);
DenseMatrix matmul(const SparseMatrix& a, const DenseMatrix& b, OpCounter* ctr = nullptr);
/// a^T * b without forming a^T.
DenseMatrix matmul_transposed(const DenseMatrix& a, const DenseMatrix& b, OpCounter* ctr = nullptr);
DenseMatrix matmul_transposed(const SparseMatrix& a, const DenseMatrix& b, OpCounter* ctr = nullptr);

/// a^T a as a dense cols x cols matrix.
DenseMatrix gram(const DenseMatrix& a);
DenseMatrix gram(const SparseMatrix& a);

double frobenius_norm(const DenseMatrix& a);
double frobenius_norm(const SparseMatrix& a);

}  // namespace bkifd
