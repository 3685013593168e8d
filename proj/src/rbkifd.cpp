#include "bkifd/rbkifd.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "bkifd/errors.hpp"

namespace bkifd {

namespace {

DenseMatrix pad_to(const DenseMatrix& m, Index rows) {
  if (m.rows() == rows) return m;
  DenseMatrix out = DenseMatrix::Zero(rows, m.cols());
  out.topRows(m.rows()) = m;
  return out;
}

SparseMatrix pad_to(const SparseMatrix& m, Index rows) {
  return m.rows() == rows ? m : m.pad_rows(rows - m.rows());
}

}  // namespace

// ---------------------------------------------------------------------------
// Batch sources

Index batch_rows(const Batch& b) noexcept {
  return std::visit([](const auto& m) { return m.rows(); }, b);
}

Index batch_cols(const Batch& b) noexcept {
  return std::visit([](const auto& m) { return m.cols(); }, b);
}

bool is_sparse(const Batch& b) noexcept { return std::holds_alternative<SparseMatrix>(b); }

MatrixBatchSource::MatrixBatchSource(Batch matrix, Index batch_rows)
    : matrix_(std::move(matrix)), batch_rows_(batch_rows) {
  if (batch_rows < 1) throw ArgumentError("MatrixBatchSource: batch_rows must be >= 1");
}

std::optional<Batch> MatrixBatchSource::next() {
  const Index n = batch_rows(matrix_);
  if (cursor_ >= n) return std::nullopt;
  const Index end = std::min(n, cursor_ + batch_rows_);
  Batch out = std::visit(
      [&](const auto& m) -> Batch {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, SparseMatrix>) {
          return pad_to(m.slice_rows(cursor_, end), batch_rows_);
        } else {
          return pad_to(DenseMatrix(m.middleRows(cursor_, end - cursor_)), batch_rows_);
        }
      },
      matrix_);
  cursor_ = end;
  return out;
}

// ---------------------------------------------------------------------------
// Driver

void validate(const RbkifdConfig& cfg) {
  validate(cfg.bki);
  if (cfg.bki.ell < 2) throw ArgumentError("rbkifd: ell must be >= 2");
  if (cfg.d < 1) throw ArgumentError("rbkifd: d must be >= 1");
  if (cfg.batch_rows < cfg.bki.ell) {
    throw ArgumentError("rbkifd: batch_rows (" + std::to_string(cfg.batch_rows) +
                        ") must be >= ell (" + std::to_string(cfg.bki.ell) + ")");
  }
}

SketchKind default_kind(bool sparse_input) noexcept {
  return sparse_input ? SketchKind::CountSketch : SketchKind::Gaussian;
}

RbkiConfig batch_config(const RbkifdConfig& cfg, std::size_t index) {
  RbkiConfig out = cfg.bki;
  out.seed = derive_seed(cfg.bki.seed, index);
  return out;
}

RbkifdSketcher::RbkifdSketcher(RbkifdConfig cfg)
    : cfg_((validate(cfg), cfg)), fd_(cfg.bki.ell, cfg.d) {}

template <typename Matrix>
void RbkifdSketcher::push_impl(const Matrix& batch) {
  if (batch.cols() != cfg_.d) {
    throw ArgumentError("rbkifd: batch has " + std::to_string(batch.cols()) +
                        " columns, expected " + std::to_string(cfg_.d));
  }
  if (batch.rows() > cfg_.batch_rows) {
    throw ArgumentError("rbkifd: batch has " + std::to_string(batch.rows()) +
                        " rows, more than batch_rows=" + std::to_string(cfg_.batch_rows));
  }
  if (batch.rows() == 0) throw ArgumentError("rbkifd: empty batch");
  if constexpr (std::is_same_v<Matrix, DenseMatrix>) require_finite(batch, "rbkifd batch");

  const Matrix padded = pad_to(batch, cfg_.batch_rows);
  const BkiOutput compressed = rbki(padded, batch_config(cfg_, batches_), &ops_);
  times_.krylov_s += compressed.krylov_seconds;
  times_.gram_s += compressed.gram_seconds;
  if (compressed.rank_deficient) {
    flags_.push_back("batch " + std::to_string(batches_) + ": Krylov rank " +
                     std::to_string(compressed.rank) + " < ell");
  }
  peak_live_rows_ = std::max(peak_live_rows_, fd_.filled() + cfg_.bki.ell + cfg_.batch_rows);
  merge(compressed);
}

void RbkifdSketcher::merge(const BkiOutput& compressed) {
  const auto t0 = std::chrono::steady_clock::now();
  fd_.insert(compressed.p);
  // The first batch seeds the buffer unshrunk. For later batches the insert
  // auto-shrinks only when it lands exactly on 2*ell rows.
  if (batches_ > 0 && fd_.filled() > cfg_.bki.ell - 1) fd_.shrink();
  ++batches_;
  times_.fd_shrink_s +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void RbkifdSketcher::push_batch(const DenseMatrix& batch) { push_impl(batch); }
void RbkifdSketcher::push_batch(const SparseMatrix& batch) { push_impl(batch); }
void RbkifdSketcher::push_batch(const Batch& batch) {
  std::visit([this](const auto& m) { push_impl(m); }, batch);
}

SketchResult RbkifdSketcher::finalize() const {
  if (batches_ == 0) throw StateError("rbkifd: finalize called before any batch was pushed");
  SketchResult r;
  r.b_matrix = fd_.buffer().topRows(cfg_.bki.ell - 1);
  r.batches_processed = batches_;
  r.wall_times = times_;
  r.op_counts = ops_;
  r.flags = flags_;
  r.peak_live_rows = peak_live_rows_;
  return r;
}

SketchResult rbkifd_run_stream(BatchSource& source, const RbkifdConfig& cfg) {
  RbkifdSketcher sketcher(cfg);
  while (auto batch = source.next()) sketcher.push_batch(*batch);
  return sketcher.finalize();
}

}  // namespace bkifd
