#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bkifd/batch_source.hpp"
#include "bkifd/rbkifd.hpp"

namespace bkifd {

enum class Method { FD, GA_BKIFD, CS_BKIFD };

std::string_view to_string(Method method) noexcept;
/// Accepts "fd", "ga", "cs" and the upper-case names, case-insensitively.
Method parse_method(std::string_view name);

struct MethodParams {
  Method method = Method::FD;
  Index ell = 0;
  Index m = 0;  // ignored by FD
  Index q = 2;  // ignored by FD
  Index batch_rows = 0;
  Seed seed{};
};

/// Runs one sketching method over a stream. FD inserts every batch row in
/// order; the BKIFD variants go through RbkifdSketcher with the kind implied
/// by the method.
SketchResult run_method(BatchSource& source, const MethodParams& params);
SketchResult run_method(const Batch& a, const MethodParams& params);

/// "20,30,40" or start:step:stop ("50:10:150", inclusive).
std::vector<Index> parse_ell_list(std::string_view text);

struct SweepPlan {
  std::vector<Method> methods;
  std::vector<Index> ell_values;  // strictly increasing
  Index k = 20;
  Index m_offset = 10;  // m = ell + m_offset
  Index q = 2;
  Index batch_rows = 0;
  Index trials = 1;
  Seed base_seed{};
};

void validate(const SweepPlan& plan);

struct SweepRow {
  Method method = Method::FD;
  Index ell = 0;
  Index trial = 0;
  double cov_err = 0.0;
  double proj_err = 0.0;
  double wall_s = 0.0;
  std::uint64_t nnz_ops = 0;
  std::string error;  // empty on success
};

inline constexpr std::string_view kSweepHeader = "method,ell,trial,cov_err,proj_err,wall_s,nnz_ops";

struct SweepOptions {
  unsigned threads = 1;
  /// Record wall-clock time; false writes 0 so output bytes are reproducible.
  bool record_timing = true;
};

/// Every (method, ell, trial) cell, sorted by method, ell and trial regardless
/// of the schedule. Cell failures are captured in SweepRow::error.
std::vector<SweepRow> run_sweep(const Batch& a, const SweepPlan& plan, const SweepOptions& opts = {});

struct AggregateRow {
  Method method = Method::FD;
  Index ell = 0;
  Index trials = 0;  // successful trials
  double cov_err_mean = 0.0;
  double cov_err_median = 0.0;
  double proj_err_mean = 0.0;
  double proj_err_median = 0.0;
  double wall_s_mean = 0.0;
  double wall_s_median = 0.0;
  double nnz_ops_mean = 0.0;
};

inline constexpr std::string_view kAggregateHeader =
    "method,ell,trials,cov_err_mean,cov_err_median,proj_err_mean,proj_err_median,"
    "wall_s_mean,wall_s_median,nnz_ops_mean";

std::vector<AggregateRow> aggregate(const std::vector<SweepRow>& rows);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
/// method,ell,trial,error for failed cells (header only when none failed).
std::string sweep_errors_csv(const std::vector<SweepRow>& rows);
/// Parses sweep_csv() output; throws ParseError on schema mismatch.
std::vector<SweepRow> parse_sweep_csv(std::string_view text);

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

/// Minimal line chart: axes, five ticks per axis, one polyline per series,
/// legend. Output bytes depend only on the arguments.
std::string render_line_chart(std::string_view title, std::string_view x_label,
                              std::string_view y_label, const std::vector<Series>& series);

/// Writes sweep.csv, aggregate.csv, sweep_errors.csv and the three charts
/// (cov_err.svg, proj_err.svg, time.svg) into `dir`.
void write_sweep_outputs(const std::filesystem::path& dir, const std::vector<SweepRow>& rows);

}  // namespace bkifd
