#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bkifd/batch_source.hpp"
#include "bkifd/core_numerics.hpp"
#include "bkifd/frequent_directions.hpp"
#include "bkifd/op_counter.hpp"
#include "bkifd/rbki.hpp"

namespace bkifd {

struct RbkifdConfig {
  RbkiConfig bki;
  Index batch_rows = 0;
  Index d = 0;
};

/// Throws ArgumentError unless ell >= 2, batch_rows >= ell, d >= 1 and the
/// rbki settings are valid.
void validate(const RbkifdConfig& cfg);

/// Gaussian for dense batches, CountSketch for sparse ones.
SketchKind default_kind(bool sparse_input) noexcept;

/// The rbki settings used for batch `index` (0-based): the base config with
/// an independent derived seed.
RbkiConfig batch_config(const RbkifdConfig& cfg, std::size_t index);

struct StageTimes {
  double krylov_s = 0.0;
  double gram_s = 0.0;
  double fd_shrink_s = 0.0;
};

struct SketchResult {
  DenseMatrix b_matrix;  // (ell-1) x d
  std::size_t batches_processed = 0;
  StageTimes wall_times;
  OpCounter op_counts;
  std::vector<std::string> flags;
  /// Peak rows of width d held by the driver: merge buffer plus one batch.
  Index peak_live_rows = 0;
};

/// Streaming sketch that compresses each batch with rbki and merges the
/// compressed rows with Frequent Directions shrinkage.
///
/// The first batch initializes the buffer to its P (ell rows, no shrink).
/// Every later batch appends its P, shrinks by the ell-th squared singular
/// value and keeps ell-1 rows. Single owner.
class RbkifdSketcher {
 public:
  explicit RbkifdSketcher(RbkifdConfig cfg);

  /// Batches shorter than batch_rows are zero-padded; taller ones and
  /// width mismatches throw ArgumentError.
  void push_batch(const DenseMatrix& batch);
  void push_batch(const SparseMatrix& batch);
  void push_batch(const Batch& batch);

  /// Throws StateError before the first batch.
  SketchResult finalize() const;

  std::size_t batches_processed() const noexcept { return batches_; }
  const RbkifdConfig& config() const noexcept { return cfg_; }

 private:
  template <typename Matrix>
  void push_impl(const Matrix& batch);
  void merge(const BkiOutput& compressed);

  RbkifdConfig cfg_;
  FrequentDirections fd_;
  std::size_t batches_ = 0;
  StageTimes times_;
  OpCounter ops_;
  std::vector<std::string> flags_;
  Index peak_live_rows_ = 0;
};

/// Pushes every batch of `source` and finalizes.
SketchResult rbkifd_run_stream(BatchSource& source, const RbkifdConfig& cfg);

}  // namespace bkifd
