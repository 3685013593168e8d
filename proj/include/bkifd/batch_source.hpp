#pragma once

#include <cstddef>
#include <optional>
#include <variant>

#include "bkifd/core_numerics.hpp"

namespace bkifd {

using Batch = std::variant<DenseMatrix, SparseMatrix>;

Index batch_rows(const Batch& b) noexcept;
Index batch_cols(const Batch& b) noexcept;
bool is_sparse(const Batch& b) noexcept;

/// Pull-based stream of fixed-height row batches. The final batch is
/// zero-padded to the full height.
class BatchSource {
 public:
  virtual ~BatchSource() = default;

  virtual std::optional<Batch> next() = 0;
  virtual Index cols() const = 0;
  /// Largest number of data rows held in memory at once.
  virtual Index peak_rows_held() const = 0;
};

/// Splits an in-memory matrix into ceil(n / batch_rows) batches.
class MatrixBatchSource : public BatchSource {
 public:
  MatrixBatchSource(Batch matrix, Index batch_rows);

  std::optional<Batch> next() override;
  Index cols() const override { return batch_cols(matrix_); }
  Index peak_rows_held() const override { return batch_rows(matrix_); }

 private:
  Batch matrix_;
  Index batch_rows_;
  Index cursor_ = 0;
};

}  // namespace bkifd
