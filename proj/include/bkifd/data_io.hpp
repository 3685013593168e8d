#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>

#include "bkifd/batch_source.hpp"
#include "bkifd/core_numerics.hpp"
#include "bkifd/rng.hpp"

namespace bkifd {

enum class Decay { Linear, Fast, Slow };

std::string_view to_string(Decay decay) noexcept;
/// "linear", "fast" or "slow"; throws ArgumentError otherwise.
Decay parse_decay(std::string_view name);

/// Dense synthetic A = S D U + N / zeta with S (n x k) and N (n x d) standard
/// normal, U (k x d) with orthonormal rows and D diagonal:
///   Linear: D_ii = 1 - (i-1)/k,  Fast: 2^-i,  Slow: i^-1/2.
/// zeta = +infinity drops the noise term.
struct SyntheticSpec {
  Index n = 0;
  Index d = 0;
  Index k = 0;
  double zeta = 10.0;
  Decay decay = Decay::Linear;
  Seed seed{};
};

/// Diagonal of D for `spec`.
Vector decay_profile(Decay decay, Index k);
DenseMatrix gen_dense(const SyntheticSpec& spec);

/// Sparse synthetic: each entry is present independently with probability
/// `density` (a Binomial(d, density) count per row at uniform positions),
/// values Uniform(0, 1].
struct SparseSpec {
  Index n = 0;
  Index d = 0;
  double density = 0.001;
  Seed seed{};
};

SparseMatrix gen_sparse(const SparseSpec& spec);

struct LibsvmOptions {
  /// Column count; defaults to the largest index seen.
  std::optional<Index> cols;
  /// Drop features with (1-based) index above this.
  std::optional<Index> max_cols;
};

/// Reads "label idx:val idx:val ..." lines with 1-based, strictly increasing
/// indices. Labels are discarded. Throws ParseError with the line number.
SparseMatrix load_libsvm(const std::filesystem::path& path, const LibsvmOptions& opts = {});
/// Writes every row with label 0 and 17 significant digits.
void write_libsvm(const std::filesystem::path& path, const SparseMatrix& a);

/// Rectangular comma-separated numbers, optional single header row.
DenseMatrix load_csv_dense(const std::filesystem::path& path, bool has_header = false);
/// LF line endings, 17 significant digits (exact round trip for doubles).
void write_csv(const std::filesystem::path& path, const DenseMatrix& rows,
               const std::string& header = {});

/// Shortest round-trip text for a double at 17 significant digits.
std::string format_double(double v);

/// Streams a dense CSV in batches without loading the whole file.
class CsvBatchSource : public BatchSource {
 public:
  CsvBatchSource(const std::filesystem::path& path, Index batch_rows, bool has_header = false);

  std::optional<Batch> next() override;
  Index cols() const override { return cols_; }
  Index peak_rows_held() const override { return peak_rows_; }

 private:
  std::ifstream in_;
  Index batch_rows_;
  Index cols_ = 0;
  std::size_t line_no_ = 0;
  std::optional<std::string> pending_;
  Index peak_rows_ = 0;
};

/// Streams a LIBSVM file in batches. Without an explicit column count the
/// file is pre-scanned once for the largest index (no rows retained).
class LibsvmBatchSource : public BatchSource {
 public:
  LibsvmBatchSource(const std::filesystem::path& path, Index batch_rows, LibsvmOptions opts = {});

  std::optional<Batch> next() override;
  Index cols() const override { return cols_; }
  Index peak_rows_held() const override { return peak_rows_; }

 private:
  std::ifstream in_;
  Index batch_rows_;
  LibsvmOptions opts_;
  Index cols_ = 0;
  std::size_t line_no_ = 0;
  Index peak_rows_ = 0;
};

}  // namespace bkifd
