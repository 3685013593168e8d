#pragma once

#include <cstdint>
#include <vector>

#include "bkifd/core_numerics.hpp"
#include "bkifd/op_counter.hpp"
#include "bkifd/rng.hpp"

namespace bkifd {

/// d x m matrix of i.i.d. standard normals (unit variance, no 1/sqrt(m)
/// scaling; downstream orthonormalization is invariant to column scale).
DenseMatrix gaussian_block(Index d, Index m, Seed seed);

/// CountSketch embedding X = D Phi^T in R^{d x m}, stored as bucket and sign
/// arrays. Row i of X has a single nonzero sign[i] in column bucket[i].
struct CountSketchMap {
  Index d = 0;
  Index m = 0;
  std::vector<Index> bucket;
  std::vector<double> sign;

  /// Dense d x m form; tests and oracles only.
  DenseMatrix materialize() const;
};

CountSketchMap countsketch_map(Index d, Index m, Seed seed);

/// A * X by scatter: output column bucket[j] accumulates sign[j] * A(:, j).
/// The sparse overload adds exactly nnz(a) to the counter, the dense one
/// rows*cols.
DenseMatrix apply_countsketch(const DenseMatrix& a, const CountSketchMap& cs,
                              OpCounter* ctr = nullptr);
DenseMatrix apply_countsketch(const SparseMatrix& a, const CountSketchMap& cs,
                              OpCounter* ctr = nullptr);

/// Haar-distributed d x cols matrix with orthonormal columns.
DenseMatrix random_orthonormal(Index d, Index cols, Seed seed);

/// Smallest CountSketch width for which the subspace-embedding guarantee
/// ||U^T X X^T U - I||_2 <= eps holds with probability 1 - p for a
/// cols-dimensional subspace: ceil((cols^2 + cols) / (eps^2 p)).
Index countsketch_min_width(Index cols, double eps, double p);

struct EmbeddingTrial {
  Index m = 0;
  double distortion = 0.0;  // ||U^T X X^T U - I||_2
  bool success = false;
};

/// One draw of the CountSketch subspace-embedding experiment with m from
/// countsketch_min_width(). `m_override` > 0 replaces that width.
EmbeddingTrial subspace_embedding_trial(Index d, Index cols, double eps, double p, Seed seed,
                                        Index m_override = 0);

}  // namespace bkifd
