#include "bkifd/rbki.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bkifd/errors.hpp"

namespace bkifd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Drops columns that are exactly zero. A zero column of A X stays zero under
// every power of A A^T, so the Krylov span is unchanged.
DenseMatrix drop_zero_columns(const DenseMatrix& x) {
  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    if (!x.col(j).isZero(0.0)) keep.push_back(j);
  }
  if (static_cast<Index>(keep.size()) == x.cols()) return x;
  DenseMatrix out(x.rows(), static_cast<Index>(keep.size()));
  for (Index j = 0; j < out.cols(); ++j) out.col(j) = x.col(keep[j]);
  return out;
}

template <typename Matrix>
std::vector<DenseMatrix> krylov_blocks(const Matrix& a, DenseMatrix start, Index q,
                                       OpCounter* ctr, bool reorthogonalize) {
  std::vector<DenseMatrix> blocks;
  blocks.reserve(static_cast<std::size_t>(q) + 1);
  blocks.push_back(std::move(start));
  for (Index j = 1; j <= q; ++j) {
    const DenseMatrix& prev = blocks.back();
    DenseMatrix base = reorthogonalize && prev.cols() > 0 ? orthonormalize_columns(prev) : prev;
    DenseMatrix next = matmul(a, matmul_transposed(a, base, ctr), ctr);
    blocks.push_back(std::move(next));
  }
  return blocks;
}

DenseMatrix concat_columns(const std::vector<DenseMatrix>& blocks, Index rows) {
  Index cols = 0;
  for (const auto& b : blocks) cols += b.cols();
  DenseMatrix k(rows, cols);
  Index at = 0;
  for (const auto& b : blocks) {
    k.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return k;
}

template <typename Matrix>
DenseMatrix start_block(const Matrix& a, const DenseMatrix& x, OpCounter* ctr) {
  return matmul(a, x, ctr);
}

template <typename Matrix>
DenseMatrix start_block(const Matrix& a, const CountSketchMap& x, OpCounter* ctr) {
  return apply_countsketch(a, x, ctr);
}

template <typename Matrix, typename Start>
DenseMatrix krylov_block_impl(const Matrix& a, const Start& x, Index q, OpCounter* ctr) {
  if (q < 0) throw ArgumentError("krylov_block: q must be >= 0");
  const auto blocks = krylov_blocks(a, start_block(a, x, ctr), q, ctr, false);
  return concat_columns(blocks, a.rows());
}

template <typename Matrix>
BkiOutput rbki_impl(const Matrix& a, const RbkiConfig& cfg, OpCounter* ctr) {
  validate(cfg);
  const Index b = a.rows();
  const Index d = a.cols();
  if (b < 1 || d < 1) throw ArgumentError("rbki: empty batch");

  BkiOutput out;
  const auto t_krylov = Clock::now();
  DenseMatrix start = cfg.kind == SketchKind::Gaussian
                          ? matmul(a, gaussian_block(d, cfg.m, cfg.seed), ctr)
                          : apply_countsketch(a, countsketch_map(d, cfg.m, cfg.seed), ctr);
  start = drop_zero_columns(start);

  DenseMatrix q_basis(b, 0);
  if (start.cols() > 0) {
    auto blocks = krylov_blocks(a, std::move(start), cfg.q, ctr, cfg.reorthogonalize_blocks);
    DenseMatrix k = concat_columns(blocks, b);
    // Column scaling leaves the span unchanged and keeps the drop threshold
    // from being dominated by the highest power.
    for (Index j = 0; j < k.cols(); ++j) {
      const double norm = k.col(j).norm();
      if (norm > 0.0) k.col(j) /= norm;
    }
    const double tol = cfg.ortho_tol > 0.0 ? cfg.ortho_tol : default_ortho_tol(k.rows(), k.cols());
    q_basis = orthonormalize_columns(k, tol);
  }
  out.krylov_seconds = seconds_since(t_krylov);

  const auto t_gram = Clock::now();
  const Index r = q_basis.cols();
  const Index keep = std::min(r, cfg.ell);
  out.rank = keep;
  out.rank_deficient = r < cfg.ell;
  out.p = DenseMatrix::Zero(cfg.ell, d);
  out.z = DenseMatrix(b, keep);
  if (r > 0) {
    // W = A^T Q, so M = Q^T A A^T Q = W^T W and P = Ubar^T Q^T A = (W Ubar)^T.
    const DenseMatrix w = matmul_transposed(a, q_basis, ctr);
    Eigen::MatrixXd m = w.transpose() * w;
    m = 0.5 * (m + m.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) {
      throw NumericalError("rbki: eigendecomposition failed for " + std::to_string(r) + "x" +
                           std::to_string(r) + " Gram matrix");
    }
    // Eigenvalues ascend; take the last `keep` in reverse.
    Eigen::MatrixXd top(r, keep);
    for (Index i = 0; i < keep; ++i) top.col(i) = eig.eigenvectors().col(r - 1 - i);
    out.z.noalias() = q_basis * top;
    out.p.topRows(keep) = (w * top).transpose();
  }
  out.gram_seconds = seconds_since(t_gram);
  return out;
}

}  // namespace

std::string_view to_string(SketchKind kind) noexcept {
  return kind == SketchKind::Gaussian ? "gaussian" : "countsketch";
}

void validate(const RbkiConfig& cfg) {
  if (cfg.ell < 1) throw ArgumentError("rbki: ell must be >= 1");
  if (cfg.m < cfg.ell) {
    throw ArgumentError("rbki: m must be >= ell (m=" + std::to_string(cfg.m) +
                        ", ell=" + std::to_string(cfg.ell) + ")");
  }
  if (cfg.q < 0) throw ArgumentError("rbki: q must be >= 0");
}

Index q_from_error(double varsigma, double d) {
  if (!(varsigma > 0.0 && varsigma < 1.0)) {
    throw ArgumentError("q_from_error: varsigma must lie in (0, 1)");
  }
  if (!(d >= 2.0)) throw ArgumentError("q_from_error: d must be >= 2");
  const double q = std::log(d) / std::sqrt(varsigma);
  // Values within 1e-8 (relative) of an integer round to it.
  const double nearest = std::round(q);
  if (std::abs(q - nearest) <= 1e-8 * std::max(1.0, nearest)) {
    return std::max<Index>(1, static_cast<Index>(nearest));
  }
  return std::max<Index>(1, static_cast<Index>(std::ceil(q)));
}

DenseMatrix krylov_block(const DenseMatrix& a, const DenseMatrix& x, Index q, OpCounter* ctr) {
  return krylov_block_impl(a, x, q, ctr);
}
DenseMatrix krylov_block(const SparseMatrix& a, const DenseMatrix& x, Index q, OpCounter* ctr) {
  return krylov_block_impl(a, x, q, ctr);
}
DenseMatrix krylov_block(const DenseMatrix& a, const CountSketchMap& x, Index q, OpCounter* ctr) {
  return krylov_block_impl(a, x, q, ctr);
}
DenseMatrix krylov_block(const SparseMatrix& a, const CountSketchMap& x, Index q, OpCounter* ctr) {
  return krylov_block_impl(a, x, q, ctr);
}

BkiOutput rbki(const DenseMatrix& a, const RbkiConfig& cfg, OpCounter* ctr) {
  return rbki_impl(a, cfg, ctr);
}
BkiOutput rbki(const SparseMatrix& a, const RbkiConfig& cfg, OpCounter* ctr) {
  return rbki_impl(a, cfg, ctr);
}

}  // namespace bkifd
