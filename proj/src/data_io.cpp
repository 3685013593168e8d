#include "bkifd/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <vector>

#include "bkifd/errors.hpp"
#include "bkifd/sketch_random.hpp"

namespace bkifd {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_number(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_index(std::string_view text, Index& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

// One LIBSVM record. Returns false for blank or comment-only lines.
bool parse_libsvm_line(std::string_view line, std::size_t line_no, std::vector<Index>& idx,
                       std::vector<double>& vals) {
  idx.clear();
  vals.clear();
  if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  line = trim(line);
  if (line.empty()) return false;

  std::size_t pos = 0;
  bool first = true;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= line.size()) break;
    auto end = line.find_first_of(" \t", pos);
    if (end == std::string_view::npos) end = line.size();
    const std::string_view token = line.substr(pos, end - pos);
    pos = end;

    const auto colon = token.find(':');
    if (first) {
      first = false;
      if (colon != std::string_view::npos) throw ParseError("libsvm: missing label", line_no);
      continue;
    }
    if (colon == std::string_view::npos) {
      throw ParseError("libsvm: expected idx:val, got '" + std::string(token) + "'", line_no);
    }
    Index i = 0;
    double v = 0.0;
    if (!parse_index(token.substr(0, colon), i) || i < 1) {
      throw ParseError("libsvm: bad feature index in '" + std::string(token) + "'", line_no);
    }
    if (!parse_number(token.substr(colon + 1), v) || !std::isfinite(v)) {
      throw ParseError("libsvm: bad value in '" + std::string(token) + "'", line_no);
    }
    if (!idx.empty() && i <= idx.back() + 1) {
      throw ParseError("libsvm: feature indices must be strictly increasing", line_no);
    }
    idx.push_back(i - 1);
    vals.push_back(v);
  }
  return true;
}

void split_csv(std::string_view line, std::vector<std::string_view>& cells) {
  cells.clear();
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Parses one CSV data line into `row`; returns false for a blank line.
bool parse_csv_line(std::string_view line, std::size_t line_no, std::vector<std::string_view>& cells,
                    std::vector<double>& row) {
  if (trim(line).empty()) return false;
  split_csv(line, cells);
  row.resize(cells.size());
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (!parse_number(cells[j], row[j]) || !std::isfinite(row[j])) {
      throw ParseError("csv: non-numeric cell " + std::to_string(j + 1) + " '" +
                           std::string(trim(cells[j])) + "'",
                       line_no);
    }
  }
  return true;
}

// Keeps features below the cap, shifting nothing.
void apply_max_cols(const LibsvmOptions& opts, std::vector<Index>& idx, std::vector<double>& vals) {
  if (!opts.max_cols) return;
  const auto cut = std::lower_bound(idx.begin(), idx.end(), *opts.max_cols);
  const auto n = static_cast<std::size_t>(cut - idx.begin());
  idx.resize(n);
  vals.resize(n);
}

}  // namespace

// ---------------------------------------------------------------------------
// Generators

std::string_view to_string(Decay decay) noexcept {
  switch (decay) {
    case Decay::Linear: return "linear";
    case Decay::Fast: return "fast";
    case Decay::Slow: return "slow";
  }
  return "linear";
}

Decay parse_decay(std::string_view name) {
  if (name == "linear") return Decay::Linear;
  if (name == "fast") return Decay::Fast;
  if (name == "slow") return Decay::Slow;
  throw ArgumentError("unknown decay profile '" + std::string(name) + "'");
}

Vector decay_profile(Decay decay, Index k) {
  Vector d(k);
  for (Index i = 1; i <= k; ++i) {
    const double x = static_cast<double>(i);
    switch (decay) {
      case Decay::Linear: d[i - 1] = 1.0 - (x - 1.0) / static_cast<double>(k); break;
      case Decay::Fast: d[i - 1] = std::exp2(-x); break;
      case Decay::Slow: d[i - 1] = 1.0 / std::sqrt(x); break;
    }
  }
  return d;
}

DenseMatrix gen_dense(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw ArgumentError("gen_dense: n and d must be >= 1");
  if (spec.k < 1 || spec.k > std::min(spec.n, spec.d)) {
    throw ArgumentError("gen_dense: need 1 <= k <= min(n, d)");
  }
  if (!(spec.zeta > 0.0)) throw ArgumentError("gen_dense: zeta must be > 0");

  const DenseMatrix s = gaussian_block(spec.n, spec.k, derive_seed(spec.seed, 1));
  const DenseMatrix u = random_orthonormal(spec.d, spec.k, derive_seed(spec.seed, 2)).transpose();
  const Vector profile = decay_profile(spec.decay, spec.k);
  DenseMatrix a = s * profile.asDiagonal() * u;
  if (std::isfinite(spec.zeta)) {
    a += gaussian_block(spec.n, spec.d, derive_seed(spec.seed, 3)) / spec.zeta;
  }
  return a;
}

SparseMatrix gen_sparse(const SparseSpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw ArgumentError("gen_sparse: n and d must be >= 1");
  if (!(spec.density > 0.0 && spec.density <= 1.0)) {
    throw ArgumentError("gen_sparse: density must lie in (0, 1]");
  }
  CounterRng rng(spec.seed);
  SparseMatrix a(0, spec.d);
  std::vector<Index> cols;
  std::vector<double> vals;
  const bool full = spec.density >= 1.0;
  const double log_miss = full ? 0.0 : std::log1p(-spec.density);
  for (Index i = 0; i < spec.n; ++i) {
    cols.clear();
    vals.clear();
    // Geometric gaps between hits of independent Bernoulli(density) trials.
    Index pos = -1;
    while (true) {
      Index gap = 0;
      if (!full) {
        const double u = 1.0 - rng.uniform();  // (0, 1]
        const double g = std::floor(std::log(u) / log_miss);
        gap = g >= static_cast<double>(spec.d) ? spec.d : static_cast<Index>(g);
      }
      pos += gap + 1;
      if (pos >= spec.d) break;
      cols.push_back(pos);
      vals.push_back(1.0 - rng.uniform());
    }
    a.push_row(cols, vals);
  }
  return a;
}

// ---------------------------------------------------------------------------
// LIBSVM

SparseMatrix load_libsvm(const fs::path& path, const LibsvmOptions& opts) {
  std::ifstream in = open_input(path);
  std::vector<Index> row_ptr{0};
  std::vector<Index> col_idx;
  std::vector<double> values;
  std::vector<Index> idx;
  std::vector<double> vals;
  Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!parse_libsvm_line(line, line_no, idx, vals)) continue;
    apply_max_cols(opts, idx, vals);
    for (std::size_t p = 0; p < idx.size(); ++p) {
      if (vals[p] == 0.0) continue;
      col_idx.push_back(idx[p]);
      values.push_back(vals[p]);
      max_index = std::max(max_index, idx[p] + 1);
    }
    row_ptr.push_back(static_cast<Index>(values.size()));
  }
  Index cols = max_index;
  if (opts.cols) {
    if (*opts.cols < max_index) {
      throw ArgumentError("load_libsvm: column override " + std::to_string(*opts.cols) +
                          " is below the largest index " + std::to_string(max_index));
    }
    cols = *opts.cols;
  }
  const auto rows = static_cast<Index>(row_ptr.size()) - 1;
  return SparseMatrix::from_csr(rows, cols, std::move(row_ptr), std::move(col_idx),
                                std::move(values));
}

void write_libsvm(const fs::path& path, const SparseMatrix& a) {
  std::ofstream out = open_output(path);
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto vals = a.values();
  std::string line;
  for (Index i = 0; i < a.rows(); ++i) {
    line = "0";
    for (Index p = rp[i]; p < rp[i + 1]; ++p) {
      line += ' ';
      line += std::to_string(ci[p] + 1);
      line += ':';
      line += format_double(vals[p]);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

DenseMatrix load_csv_dense(const fs::path& path, bool has_header) {
  std::ifstream in = open_input(path);
  std::vector<double> data;
  std::vector<double> row;
  std::vector<std::string_view> cells;
  std::string line;
  std::size_t line_no = 0;
  Index cols = -1;
  Index rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (has_header && line_no == 1) continue;
    if (!parse_csv_line(line, line_no, cells, row)) continue;
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
    } else if (static_cast<Index>(row.size()) != cols) {
      throw ParseError("csv: ragged row with " + std::to_string(row.size()) + " cells, expected " +
                           std::to_string(cols),
                       line_no);
    }
    data.insert(data.end(), row.begin(), row.end());
    ++rows;
  }
  if (cols < 0) return DenseMatrix(0, 0);
  return Eigen::Map<const DenseMatrix>(data.data(), rows, cols);
}

void write_csv(const fs::path& path, const DenseMatrix& rows, const std::string& header) {
  std::ofstream out = open_output(path);
  if (!header.empty()) out << header << '\n';
  std::string line;
  for (Index i = 0; i < rows.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < rows.cols(); ++j) {
      if (j > 0) line += ',';
      line += format_double(rows(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// File-backed batch sources

CsvBatchSource::CsvBatchSource(const fs::path& path, Index batch_rows, bool has_header)
    : in_(open_input(path)), batch_rows_(batch_rows) {
  if (batch_rows < 1) throw ArgumentError("CsvBatchSource: batch_rows must be >= 1");
  std::string line;
  std::vector<std::string_view> cells;
  std::vector<double> row;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (has_header && line_no_ == 1) continue;
    if (!parse_csv_line(line, line_no_, cells, row)) continue;
    cols_ = static_cast<Index>(row.size());
    pending_ = line;
    return;
  }
}

std::optional<Batch> CsvBatchSource::next() {
  if (!pending_) return std::nullopt;
  DenseMatrix batch = DenseMatrix::Zero(batch_rows_, cols_);
  std::vector<std::string_view> cells;
  std::vector<double> row;
  Index filled = 0;
  auto take = [&](const std::string& line, std::size_t line_no) {
    if (!parse_csv_line(line, line_no, cells, row)) return;
    if (static_cast<Index>(row.size()) != cols_) {
      throw ParseError("csv: ragged row with " + std::to_string(row.size()) +
                           " cells, expected " + std::to_string(cols_),
                       line_no);
    }
    batch.row(filled++) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), cols_);
  };
  take(*pending_, line_no_);
  pending_.reset();
  std::string line;
  while (filled < batch_rows_ && std::getline(in_, line)) {
    ++line_no_;
    take(line, line_no_);
  }
  peak_rows_ = std::max(peak_rows_, filled);
  // Look ahead so an exhausted file ends the stream without an empty batch.
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!trim(line).empty()) {
      pending_ = line;
      break;
    }
  }
  return Batch{std::move(batch)};
}

LibsvmBatchSource::LibsvmBatchSource(const fs::path& path, Index batch_rows, LibsvmOptions opts)
    : batch_rows_(batch_rows), opts_(opts) {
  if (batch_rows < 1) throw ArgumentError("LibsvmBatchSource: batch_rows must be >= 1");
  if (opts_.cols) {
    cols_ = *opts_.cols;
  } else {
    std::ifstream scan = open_input(path);
    std::vector<Index> idx;
    std::vector<double> vals;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(scan, line)) {
      ++line_no;
      if (!parse_libsvm_line(line, line_no, idx, vals)) continue;
      apply_max_cols(opts_, idx, vals);
      for (std::size_t p = 0; p < idx.size(); ++p) {
        if (vals[p] != 0.0) cols_ = std::max(cols_, idx[p] + 1);
      }
    }
  }
  in_ = open_input(path);
}

std::optional<Batch> LibsvmBatchSource::next() {
  SparseMatrix batch(0, cols_);
  std::vector<Index> idx;
  std::vector<double> vals;
  std::string line;
  while (batch.rows() < batch_rows_ && std::getline(in_, line)) {
    ++line_no_;
    if (!parse_libsvm_line(line, line_no_, idx, vals)) continue;
    apply_max_cols(opts_, idx, vals);
    if (!idx.empty() && idx.back() >= cols_) {
      throw ParseError("libsvm: index " + std::to_string(idx.back() + 1) + " exceeds column count " +
                           std::to_string(cols_),
                       line_no_);
    }
    batch.push_row(idx, vals);
  }
  if (batch.rows() == 0) return std::nullopt;
  peak_rows_ = std::max(peak_rows_, batch.rows());
  if (batch.rows() < batch_rows_) batch = batch.pad_rows(batch_rows_ - batch.rows());
  return Batch{std::move(batch)};
}

}  // namespace bkifd
