#pragma once

#include <string_view>

#include "bkifd/core_numerics.hpp"
#include "bkifd/op_counter.hpp"
#include "bkifd/rng.hpp"
#include "bkifd/sketch_random.hpp"

namespace bkifd {

enum class SketchKind { Gaussian, CountSketch };

std::string_view to_string(SketchKind kind) noexcept;

struct RbkiConfig {
  Index m = 0;    // random block width, m >= ell
  Index ell = 0;  // output rank
  Index q = 2;    // Krylov depth
  SketchKind kind = SketchKind::Gaussian;
  Seed seed{};
  /// Column-drop tolerance for orthonormalization; <= 0 selects
  /// default_ortho_tol() for the Krylov matrix shape.
  double ortho_tol = 0.0;
  /// Orthonormalize each Krylov block before the next power. Same span in
  /// exact arithmetic; for ill-conditioned inputs with large q.
  bool reorthogonalize_blocks = false;
};

/// Throws ArgumentError unless ell >= 1, m >= ell and q >= 0.
void validate(const RbkiConfig& cfg);

/// Krylov depth ceil(ln(d) / sqrt(varsigma)) for relative error varsigma in (0, 1).
Index q_from_error(double varsigma, double d);

/// [A X, (A A^T) A X, ..., (A A^T)^q A X] as a b x (q+1)m matrix, formed by
/// alternating products with A^T and A.
DenseMatrix krylov_block(const DenseMatrix& a, const DenseMatrix& x, Index q,
                         OpCounter* ctr = nullptr);
DenseMatrix krylov_block(const SparseMatrix& a, const DenseMatrix& x, Index q,
                         OpCounter* ctr = nullptr);
/// CountSketch start: A X is formed by scatter in O(nnz(A)).
DenseMatrix krylov_block(const DenseMatrix& a, const CountSketchMap& x, Index q,
                         OpCounter* ctr = nullptr);
DenseMatrix krylov_block(const SparseMatrix& a, const CountSketchMap& x, Index q,
                         OpCounter* ctr = nullptr);

struct BkiOutput {
  DenseMatrix z;  // b x rank, orthonormal columns
  DenseMatrix p;  // ell x d; rows beyond `rank` are zero
  Index rank = 0;
  /// The Krylov space had fewer than ell numerically independent directions.
  bool rank_deficient = false;
  double krylov_seconds = 0.0;
  double gram_seconds = 0.0;
};

/// Compresses a b x d batch into P = Z^T A with Z the top-ell eigenvectors of
/// Q^T A A^T Q lifted by Q, Q an orthonormal basis of the Krylov matrix.
BkiOutput rbki(const DenseMatrix& a, const RbkiConfig& cfg, OpCounter* ctr = nullptr);
BkiOutput rbki(const SparseMatrix& a, const RbkiConfig& cfg, OpCounter* ctr = nullptr);

}  // namespace bkifd
