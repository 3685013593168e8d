#include "bkifd/sketch_random.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "bkifd/errors.hpp"

namespace bkifd {

DenseMatrix gaussian_block(Index d, Index m, Seed seed) {
  if (d < 1 || m < 1) throw ArgumentError("gaussian_block: d and m must be >= 1");
  CounterRng rng(seed);
  DenseMatrix x(d, m);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < m; ++j) x(i, j) = rng.normal();
  }
  return x;
}

DenseMatrix CountSketchMap::materialize() const {
  DenseMatrix x = DenseMatrix::Zero(d, m);
  for (Index i = 0; i < d; ++i) x(i, bucket[i]) = sign[i];
  return x;
}

CountSketchMap countsketch_map(Index d, Index m, Seed seed) {
  if (d < 1 || m < 1) throw ArgumentError("countsketch_map: d and m must be >= 1");
  CounterRng rng(seed);
  CountSketchMap cs;
  cs.d = d;
  cs.m = m;
  cs.bucket.resize(static_cast<std::size_t>(d));
  cs.sign.resize(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    cs.bucket[i] = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
    cs.sign[i] = rng.sign();
  }
  return cs;
}

namespace {

void require_width(Index cols, const CountSketchMap& cs) {
  if (cols != cs.d) {
    throw ArgumentError("apply_countsketch: matrix has " + std::to_string(cols) +
                        " columns, sketch expects " + std::to_string(cs.d));
  }
}

}  // namespace

DenseMatrix apply_countsketch(const DenseMatrix& a, const CountSketchMap& cs, OpCounter* ctr) {
  require_width(a.cols(), cs);
  DenseMatrix out = DenseMatrix::Zero(a.rows(), cs.m);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out(i, cs.bucket[j]) += cs.sign[j] * a(i, j);
  }
  if (ctr) ctr->add(static_cast<std::uint64_t>(a.rows() * a.cols()));
  return out;
}

DenseMatrix apply_countsketch(const SparseMatrix& a, const CountSketchMap& cs, OpCounter* ctr) {
  require_width(a.cols(), cs);
  DenseMatrix out = DenseMatrix::Zero(a.rows(), cs.m);
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto vals = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index p = rp[i]; p < rp[i + 1]; ++p) {
      out(i, cs.bucket[ci[p]]) += cs.sign[ci[p]] * vals[p];
      if (ctr) ctr->add(1);
    }
  }
  return out;
}

DenseMatrix random_orthonormal(Index d, Index cols, Seed seed) {
  if (cols > d) throw ArgumentError("random_orthonormal: cols exceeds d");
  DenseMatrix q = orthonormalize_columns(gaussian_block(d, cols, seed));
  if (q.cols() != cols) throw NumericalError("random_orthonormal: Gaussian block lost rank");
  return q;
}

Index countsketch_min_width(Index cols, double eps, double p) {
  if (!(eps > 0.0 && eps < 1.0) || !(p > 0.0 && p < 1.0)) {
    throw ArgumentError("countsketch_min_width: eps and p must lie in (0, 1)");
  }
  const double k = static_cast<double>(cols);
  const double bound = (k * k + k) / (eps * eps * p);
  // Absorb representation error so exact quotients such as 30/0.05 do not round up.
  return static_cast<Index>(std::ceil(bound * (1.0 - 1e-12)));
}

EmbeddingTrial subspace_embedding_trial(Index d, Index cols, double eps, double p, Seed seed,
                                        Index m_override) {
  if (cols < 1 || cols > d) throw ArgumentError("subspace_embedding_trial: need 1 <= cols <= d");
  EmbeddingTrial t;
  t.m = m_override > 0 ? m_override : countsketch_min_width(cols, eps, p);
  const DenseMatrix u = random_orthonormal(d, cols, derive_seed(seed, 1));
  const CountSketchMap cs = countsketch_map(d, t.m, derive_seed(seed, 2));
  // X^T U is (U^T X)^T; U^T X X^T U = (X^T U)^T (X^T U).
  const DenseMatrix ut_x = apply_countsketch(DenseMatrix(u.transpose()), cs);
  DenseMatrix gap = ut_x * ut_x.transpose();
  gap -= DenseMatrix::Identity(cols, cols);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(gap),
                                                     Eigen::EigenvaluesOnly);
  t.distortion = eig.eigenvalues().cwiseAbs().maxCoeff();
  t.success = t.distortion <= eps;
  return t;
}

}  // namespace bkifd
