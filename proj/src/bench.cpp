#include "bkifd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <thread>
#include <tuple>

#include "bkifd/data_io.hpp"
#include "bkifd/errors.hpp"
#include "bkifd/frequent_directions.hpp"
#include "bkifd/metrics.hpp"

namespace bkifd {

namespace fs = std::filesystem;

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::FD: return "FD";
    case Method::GA_BKIFD: return "GA_BKIFD";
    case Method::CS_BKIFD: return "CS_BKIFD";
  }
  return "FD";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "fd") return Method::FD;
  if (lower == "ga" || lower == "ga_bkifd" || lower == "ga-bkifd") return Method::GA_BKIFD;
  if (lower == "cs" || lower == "cs_bkifd" || lower == "cs-bkifd") return Method::CS_BKIFD;
  throw ArgumentError("unknown method '" + std::string(name) + "' (expected fd, ga or cs)");
}

// ---------------------------------------------------------------------------
// Method runner

SketchResult run_method(BatchSource& source, const MethodParams& params) {
  if (params.method == Method::FD) {
    FrequentDirections fd(params.ell, source.cols());
    SketchResult r;
    const auto t0 = std::chrono::steady_clock::now();
    while (auto batch = source.next()) {
      std::visit([&](const auto& m) { fd.insert(m); }, *batch);
      ++r.batches_processed;
      r.peak_live_rows = std::max(r.peak_live_rows, 2 * params.ell + batch_rows(*batch));
    }
    r.b_matrix = fd.finalize();
    r.wall_times.fd_shrink_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }
  RbkifdConfig cfg;
  cfg.bki.ell = params.ell;
  cfg.bki.m = params.m;
  cfg.bki.q = params.q;
  cfg.bki.seed = params.seed;
  cfg.bki.kind = params.method == Method::GA_BKIFD ? SketchKind::Gaussian : SketchKind::CountSketch;
  cfg.batch_rows = params.batch_rows;
  cfg.d = source.cols();
  return rbkifd_run_stream(source, cfg);
}

SketchResult run_method(const Batch& a, const MethodParams& params) {
  const Index rows = params.batch_rows > 0 ? params.batch_rows : std::max<Index>(batch_rows(a), 1);
  MatrixBatchSource source(a, rows);
  return run_method(source, params);
}

std::vector<Index> parse_ell_list(std::string_view text) {
  auto parse_one = [&](std::string_view tok) {
    Index v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ArgumentError("bad sketch-size list '" + std::string(text) + "'");
    }
    return v;
  };
  std::vector<Index> out;
  if (text.find(':') != std::string_view::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw ArgumentError("range must be start:step:stop");
    const Index start = parse_one(text.substr(0, c1));
    const Index step = parse_one(text.substr(c1 + 1, c2 - c1 - 1));
    const Index stop = parse_one(text.substr(c2 + 1));
    if (step < 1) throw ArgumentError("range step must be >= 1");
    for (Index v = start; v <= stop; v += step) out.push_back(v);
  } else {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto comma = text.find(',', pos);
      if (comma == std::string_view::npos) comma = text.size();
      out.push_back(parse_one(text.substr(pos, comma - pos)));
      pos = comma + 1;
    }
  }
  if (out.empty()) throw ArgumentError("empty sketch-size list");
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

void validate(const SweepPlan& plan) {
  if (plan.methods.empty()) throw ArgumentError("sweep: no methods");
  if (plan.ell_values.empty()) throw ArgumentError("sweep: no sketch sizes");
  for (std::size_t i = 1; i < plan.ell_values.size(); ++i) {
    if (plan.ell_values[i] <= plan.ell_values[i - 1]) {
      throw ArgumentError("sweep: sketch sizes must be strictly increasing");
    }
  }
  if (plan.trials < 1) throw ArgumentError("sweep: trials must be >= 1");
  if (plan.k < 1) throw ArgumentError("sweep: k must be >= 1");
}

std::vector<SweepRow> run_sweep(const Batch& a, const SweepPlan& plan, const SweepOptions& opts) {
  validate(plan);
  const DenseMatrix dense =
      is_sparse(a) ? std::get<SparseMatrix>(a).to_dense() : std::get<DenseMatrix>(a);
  const Spectrum spec = spectrum_of(dense);
  const Index batch = plan.batch_rows > 0 ? plan.batch_rows : dense.cols();

  struct Cell {
    Method method;
    Index ell;
    Index trial;
  };
  std::vector<Cell> cells;
  for (Method method : plan.methods) {
    for (Index ell : plan.ell_values) {
      for (Index t = 0; t < plan.trials; ++t) cells.push_back({method, ell, t});
    }
  }
  std::vector<SweepRow> rows(cells.size());

  auto run_cell = [&](std::size_t i) {
    const Cell& c = cells[i];
    SweepRow& row = rows[i];
    row.method = c.method;
    row.ell = c.ell;
    row.trial = c.trial;
    try {
      MethodParams params;
      params.method = c.method;
      params.ell = c.ell;
      params.m = c.ell + plan.m_offset;
      params.q = plan.q;
      params.batch_rows = std::max(batch, c.ell);
      params.seed = derive_seed(plan.base_seed, static_cast<std::uint64_t>(c.trial));
      const auto t0 = std::chrono::steady_clock::now();
      const SketchResult r = run_method(a, params);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (plan.k >= c.ell) throw ArgumentError("sweep: k must be < ell");
      const ErrorReport rep = evaluate(dense, r.b_matrix, plan.k, spec);
      row.cov_err = rep.covariance_error;
      row.proj_err = rep.projection_error;
      row.wall_s = opts.record_timing ? wall : 0.0;
      row.nnz_ops = r.op_counts.multiply_adds;
    } catch (const std::exception& e) {
      row.cov_err = std::numeric_limits<double>::quiet_NaN();
      row.proj_err = std::numeric_limits<double>::quiet_NaN();
      row.error = e.what();
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(cells.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
      });
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) {
    return std::tie(x.method, x.ell, x.trial) < std::tie(y.method, y.ell, y.trial);
  });
  return rows;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string csv_field(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string tick_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::vector<SweepRow>& rows) {
  struct Acc {
    std::vector<double> cov, proj, wall, ops;
  };
  std::map<std::pair<Method, Index>, Acc> groups;
  for (const SweepRow& r : rows) {
    Acc& acc = groups[{r.method, r.ell}];
    if (!r.error.empty()) continue;
    acc.cov.push_back(r.cov_err);
    acc.proj.push_back(r.proj_err);
    acc.wall.push_back(r.wall_s);
    acc.ops.push_back(static_cast<double>(r.nnz_ops));
  }
  std::vector<AggregateRow> out;
  for (const auto& [key, acc] : groups) {
    AggregateRow a;
    a.method = key.first;
    a.ell = key.second;
    a.trials = static_cast<Index>(acc.cov.size());
    a.cov_err_mean = mean_of(acc.cov);
    a.cov_err_median = median_of(acc.cov);
    a.proj_err_mean = mean_of(acc.proj);
    a.proj_err_median = median_of(acc.proj);
    a.wall_s_mean = mean_of(acc.wall);
    a.wall_s_median = median_of(acc.wall);
    a.nnz_ops_mean = mean_of(acc.ops);
    out.push_back(a);
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out(kSweepHeader);
  out += '\n';
  for (const SweepRow& r : rows) {
    out += std::string(to_string(r.method)) + ',' + std::to_string(r.ell) + ',' +
           std::to_string(r.trial) + ',' + format_double(r.cov_err) + ',' +
           format_double(r.proj_err) + ',' + format_double(r.wall_s) + ',' +
           std::to_string(r.nnz_ops) + '\n';
  }
  return out;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out(kAggregateHeader);
  out += '\n';
  for (const AggregateRow& a : rows) {
    out += std::string(to_string(a.method)) + ',' + std::to_string(a.ell) + ',' +
           std::to_string(a.trials) + ',' + format_double(a.cov_err_mean) + ',' +
           format_double(a.cov_err_median) + ',' + format_double(a.proj_err_mean) + ',' +
           format_double(a.proj_err_median) + ',' + format_double(a.wall_s_mean) + ',' +
           format_double(a.wall_s_median) + ',' + format_double(a.nnz_ops_mean) + '\n';
  }
  return out;
}

std::string sweep_errors_csv(const std::vector<SweepRow>& rows) {
  std::string out = "method,ell,trial,error\n";
  for (const SweepRow& r : rows) {
    if (r.error.empty()) continue;
    out += std::string(to_string(r.method)) + ',' + std::to_string(r.ell) + ',' +
           std::to_string(r.trial) + ',' + csv_field(r.error) + '\n';
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(std::string_view text) {
  std::vector<SweepRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kSweepHeader) throw ParseError("sweep csv: unexpected header", line_no);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 7) throw ParseError("sweep csv: expected 7 fields", line_no);
    SweepRow r;
    try {
      r.method = parse_method(f[0]);
      r.ell = std::stoll(std::string(f[1]));
      r.trial = std::stoll(std::string(f[2]));
      r.cov_err = std::stod(std::string(f[3]));
      r.proj_err = std::stod(std::string(f[4]));
      r.wall_s = std::stod(std::string(f[5]));
      r.nnz_ops = std::stoull(std::string(f[6]));
    } catch (const std::exception&) {
      throw ParseError("sweep csv: malformed field", line_no);
    }
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// SVG

std::string render_line_chart(std::string_view title, std::string_view x_label,
                              std::string_view y_label, const std::vector<Series>& series) {
  constexpr double kWidth = 640, kHeight = 420;
  constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (!std::isfinite(x_lo)) x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  if (x_hi == x_lo) x_lo -= 0.5, x_hi += 0.5;
  if (y_hi == y_lo) {
    const double pad = y_lo == 0.0 ? 1.0 : std::abs(y_lo) * 0.1;
    y_lo -= pad;
    y_hi += pad;
  }
  const double y_pad = 0.05 * (y_hi - y_lo);
  y_lo -= y_pad;
  y_hi += y_pad;

  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth, 0) + "\" height=\"" +
         fixed(kHeight, 0) + "\" viewBox=\"0 0 " + fixed(kWidth, 0) + " " + fixed(kHeight, 0) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + fixed(kWidth, 0) + "\" height=\"" + fixed(kHeight, 0) +
         "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fixed(kLeft + plot_w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
         xml_escape(title) + "</text>\n";
  // Axes.
  svg += "<line x1=\"" + fixed(kLeft) + "\" y1=\"" + fixed(kTop + plot_h) + "\" x2=\"" + fixed(kLeft + plot_w) +
         "\" y2=\"" + fixed(kTop + plot_h) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fixed(kLeft) + "\" y1=\"" + fixed(kTop) + "\" x2=\"" + fixed(kLeft) + "\" y2=\"" +
         fixed(kTop + plot_h) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / 4.0;
    const double yv = y_lo + (y_hi - y_lo) * i / 4.0;
    svg += "<line x1=\"" + fixed(px(xv)) + "\" y1=\"" + fixed(kTop + plot_h) + "\" x2=\"" + fixed(px(xv)) +
           "\" y2=\"" + fixed(kTop + plot_h + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fixed(px(xv)) + "\" y=\"" + fixed(kTop + plot_h + 20) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + tick_label(xv) + "</text>\n";
    svg += "<line x1=\"" + fixed(kLeft - 5) + "\" y1=\"" + fixed(py(yv)) + "\" x2=\"" + fixed(kLeft) +
           "\" y2=\"" + fixed(py(yv)) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fixed(kLeft - 8) + "\" y=\"" + fixed(py(yv) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + tick_label(yv) + "</text>\n";
  }
  svg += "<text x=\"" + fixed(kLeft + plot_w / 2) + "\" y=\"" + fixed(kHeight - 15) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + xml_escape(x_label) + "</text>\n";
  svg += "<text x=\"20\" y=\"" + fixed(kTop + plot_h / 2) + "\" text-anchor=\"middle\" font-size=\"13\" "
         "transform=\"rotate(-90 20 " + fixed(kTop + plot_h / 2) + ")\">" + xml_escape(y_label) + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    std::string pts;
    for (const auto& [x, y] : series[s].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!pts.empty()) pts += ' ';
      pts += fixed(px(x)) + ',' + fixed(py(y));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" +
           pts + "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(s);
    svg += "<line x1=\"" + fixed(kWidth - kRight + 15) + "\" y1=\"" + fixed(ly) + "\" x2=\"" +
           fixed(kWidth - kRight + 40) + "\" y2=\"" + fixed(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fixed(kWidth - kRight + 46) + "\" y=\"" + fixed(ly + 4) + "\" font-size=\"12\">" +
           xml_escape(series[s].name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_sweep_outputs(const fs::path& dir, const std::vector<SweepRow>& rows) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const auto agg = aggregate(rows);
  write_text(dir / "sweep.csv", sweep_csv(rows));
  write_text(dir / "aggregate.csv", aggregate_csv(agg));
  write_text(dir / "sweep_errors.csv", sweep_errors_csv(rows));

  auto chart = [&](double AggregateRow::*field) {
    std::vector<Series> series;
    for (const AggregateRow& a : agg) {
      if (series.empty() || series.back().name != to_string(a.method)) {
        series.push_back({std::string(to_string(a.method)), {}});
      }
      series.back().points.emplace_back(static_cast<double>(a.ell), a.*field);
    }
    return series;
  };
  write_text(dir / "cov_err.svg", render_line_chart("Covariance error", "sketch size ell",
                                                    "mean covariance error", chart(&AggregateRow::cov_err_mean)));
  write_text(dir / "proj_err.svg", render_line_chart("Projection error", "sketch size ell",
                                                     "mean projection error", chart(&AggregateRow::proj_err_mean)));
  write_text(dir / "time.svg", render_line_chart("Running time", "sketch size ell", "mean wall time (s)",
                                                 chart(&AggregateRow::wall_s_mean)));
}

}  // namespace bkifd
