#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bkifd/bench.hpp"
#include "bkifd/data_io.hpp"
#include "bkifd/errors.hpp"
#include "bkifd/metrics.hpp"

namespace fs = std::filesystem;
using namespace bkifd;
using nlohmann::ordered_json;

namespace {

enum class Format { Auto, Csv, Libsvm };

Format parse_format(const std::string& name) {
  if (name == "auto") return Format::Auto;
  if (name == "csv") return Format::Csv;
  if (name == "libsvm" || name == "svm") return Format::Libsvm;
  throw ArgumentError("unknown format '" + name + "' (expected csv or libsvm)");
}

Format resolve_format(Format f, const fs::path& path) {
  if (f != Format::Auto) return f;
  const std::string ext = path.extension().string();
  if (ext == ".svm" || ext == ".libsvm" || ext == ".svmlight") return Format::Libsvm;
  return Format::Csv;
}

struct InputArgs {
  std::string path;
  std::string format = "auto";
  bool header = false;
  Index cols = 0;      // libsvm column override
  Index max_cols = 0;  // libsvm feature truncation
};

void add_input_flags(CLI::App* cmd, InputArgs& in) {
  cmd->add_option("--input", in.path, "input matrix (CSV or LIBSVM)")->required();
  cmd->add_option("--format", in.format, "csv, libsvm or auto (by extension)");
  cmd->add_flag("--header", in.header, "CSV input has a header row");
  cmd->add_option("--cols", in.cols, "LIBSVM column count");
  cmd->add_option("--max-cols", in.max_cols, "drop LIBSVM features beyond this index");
}

LibsvmOptions libsvm_options(const InputArgs& in) {
  LibsvmOptions o;
  if (in.cols > 0) o.cols = in.cols;
  if (in.max_cols > 0) o.max_cols = in.max_cols;
  return o;
}

Batch load_input(const InputArgs& in) {
  if (resolve_format(parse_format(in.format), in.path) == Format::Libsvm) {
    return load_libsvm(in.path, libsvm_options(in));
  }
  return load_csv_dense(in.path, in.header);
}

std::unique_ptr<BatchSource> open_stream(const InputArgs& in, Index batch_rows) {
  if (resolve_format(parse_format(in.format), in.path) == Format::Libsvm) {
    return std::make_unique<LibsvmBatchSource>(in.path, batch_rows, libsvm_options(in));
  }
  return std::make_unique<CsvBatchSource>(in.path, batch_rows, in.header);
}

// Default batch height: d for dense inputs, 2d for sparse.
Index default_batch_rows(const InputArgs& in, Index d) {
  const bool sparse = resolve_format(parse_format(in.format), in.path) == Format::Libsvm;
  return sparse ? 2 * d : d;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

// --- gen ---------------------------------------------------------------------

struct GenArgs {
  bool dense = false;
  bool sparse = false;
  Index n = 0;
  Index d = 0;
  Index k = 10;
  double zeta = 10.0;
  std::string decay = "linear";
  double density = 0.001;
  std::uint64_t seed = 0;
  std::string out;
};

void run_gen(const GenArgs& g) {
  if (g.dense == g.sparse) throw ArgumentError("gen: pass exactly one of --dense or --sparse");
  if (g.n < 1 || g.d < 1) throw ArgumentError("gen: --n and --d must be >= 1");
  if (g.dense) {
    SyntheticSpec spec;
    spec.n = g.n;
    spec.d = g.d;
    spec.k = g.k;
    spec.zeta = g.zeta;
    spec.decay = parse_decay(g.decay);
    spec.seed = Seed{g.seed};
    write_csv(g.out, gen_dense(spec));
  } else {
    SparseSpec spec;
    spec.n = g.n;
    spec.d = g.d;
    spec.density = g.density;
    spec.seed = Seed{g.seed};
    write_libsvm(g.out, gen_sparse(spec));
  }
}

// --- sketch ------------------------------------------------------------------

struct SketchArgs {
  InputArgs in;
  std::string method = "ga";
  Index ell = 0;
  Index m = 0;
  Index q = 2;
  Index batch_rows = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string manifest;
  bool deterministic = false;
};

Index input_cols(const InputArgs& in) {
  return open_stream(in, 1)->cols();
}

void run_sketch(const SketchArgs& a) {
  const Method method = parse_method(a.method);
  if (a.ell < 2) throw ArgumentError("sketch: --ell must be >= 2");
  const Index d = input_cols(a.in);
  MethodParams p;
  p.method = method;
  p.ell = a.ell;
  p.m = a.m > 0 ? a.m : a.ell + 10;
  p.q = a.q;
  p.batch_rows = a.batch_rows > 0 ? a.batch_rows : std::max(default_batch_rows(a.in, d), a.ell);
  p.seed = Seed{a.seed};

  auto source = open_stream(a.in, p.batch_rows);
  const SketchResult r = run_method(*source, p);
  write_csv(a.out, r.b_matrix);

  ordered_json rec;
  rec["command"] = "sketch";
  rec["input"] = a.in.path;
  rec["output"] = a.out;
  rec["method"] = std::string(to_string(method));
  rec["ell"] = p.ell;
  if (method != Method::FD) {
    rec["m"] = p.m;
    rec["q"] = p.q;
  }
  rec["batch_rows"] = p.batch_rows;
  rec["seed"] = a.seed;
  rec["d"] = d;
  rec["sketch_rows"] = r.b_matrix.rows();
  rec["batches"] = r.batches_processed;
  rec["nnz_ops"] = r.op_counts.multiply_adds;
  rec["peak_live_rows"] = r.peak_live_rows;
  rec["input_peak_rows"] = source->peak_rows_held();
  rec["flags"] = r.flags;
  if (!a.deterministic) {
    rec["timings"] = {{"krylov_s", r.wall_times.krylov_s},
                      {"gram_s", r.wall_times.gram_s},
                      {"fd_shrink_s", r.wall_times.fd_shrink_s}};
  }
  const std::string manifest = a.manifest.empty() ? a.out + ".jsonl" : a.manifest;
  write_file(manifest, rec.dump() + "\n");
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  InputArgs in;
  std::string sketch;
  Index k = 10;
  bool bounds = false;
  Index m = 0;
  Index q = 2;
  Index batch_rows = 0;
  double eps = 0.0;
  double cs_eps = 0.5;
  double p = 0.2;
  double eta = 0.05;
  std::string out;
};

void run_eval(const EvalArgs& e) {
  const Batch input = load_input(e.in);
  const DenseMatrix a =
      is_sparse(input) ? std::get<SparseMatrix>(input).to_dense() : std::get<DenseMatrix>(input);
  const DenseMatrix b = load_csv_dense(e.sketch);
  if (b.cols() != a.cols()) {
    throw ArgumentError("eval: sketch has " + std::to_string(b.cols()) + " columns, input has " +
                        std::to_string(a.cols()));
  }
  const Index ell = b.rows() + 1;
  if (e.k < 1 || e.k >= ell) throw ArgumentError("eval: need 1 <= k < ell = " + std::to_string(ell));
  const Spectrum spec = spectrum_of(a);
  const ErrorReport rep = evaluate(a, b, e.k, spec);
  const ProjectionInequality ineq = check_projection_inequality(a, b, e.k, spec, rep.raw_cov);

  std::vector<std::string> head = {"k", "ell", "cov_err", "proj_err", "raw_cov", "raw_proj",
                                   "lemma4_lhs", "lemma4_rhs", "lemma4_holds"};
  std::vector<std::string> row = {std::to_string(rep.k), std::to_string(rep.ell),
                                  csv_number(rep.covariance_error), csv_number(rep.projection_error),
                                  csv_number(rep.raw_cov), csv_number(rep.raw_proj),
                                  csv_number(ineq.lhs), csv_number(ineq.rhs), ineq.holds ? "1" : "0"};
  if (e.bounds) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double fd = fd_bound(spec, e.k, ell);
    double gap = spectral_gap(spec, ell);
    double ga = nan, ga_prob = nan, cs = nan, cs_prob = nan;
    if (e.m > 0) {
      const Index batch = e.batch_rows > 0 ? e.batch_rows : a.cols();
      const Index s = (a.rows() + batch - 1) / batch;
      BoundInputs inp = bound_inputs_from(spec, a.cols(), s, ell, e.m, e.q, e.k);
      inp.eta = e.eta;
      try {
        BoundInputs g = inp;
        g.eps = e.eps > 0.0 ? e.eps : usable_eps_ga(s, e.m, ell);
        const BoundValue v = theorem_bound_ga(g);
        ga = v.value;
        ga_prob = v.probability;
      } catch (const ArgumentError& err) {
        std::cerr << "eval: Gaussian bound not applicable: " << err.what() << "\n";
      }
      try {
        BoundInputs c = inp;
        c.eps = e.cs_eps;
        c.p = e.p;
        const BoundValue v = theorem_bound_cs(c);
        cs = v.value;
        cs_prob = v.probability;
      } catch (const ArgumentError& err) {
        std::cerr << "eval: CountSketch bound not applicable: " << err.what() << "\n";
      }
    }
    const std::vector<std::string> extra_head = {"fd_bound", "fd_bound_holds", "gap", "ga_bound",
                                                 "ga_prob", "cs_bound", "cs_prob"};
    head.insert(head.end(), extra_head.begin(), extra_head.end());
    for (const std::string& v :
         {csv_number(fd), std::string(rep.raw_cov <= fd + 1e-8 * spec.fro2 ? "1" : "0"),
          csv_number(gap), csv_number(ga), csv_number(ga_prob), csv_number(cs), csv_number(cs_prob)}) {
      row.push_back(v);
    }
  }
  std::ostringstream text;
  for (std::size_t i = 0; i < head.size(); ++i) text << (i ? "," : "") << head[i];
  text << "\n";
  for (std::size_t i = 0; i < row.size(); ++i) text << (i ? "," : "") << row[i];
  text << "\n";
  if (e.out.empty()) {
    std::cout << text.str();
  } else {
    write_file(e.out, text.str());
  }
}

// --- sweep -------------------------------------------------------------------

struct SweepArgs {
  InputArgs in;
  std::string methods = "fd,ga,cs";
  std::string ells = "20:10:60";
  Index k = 20;
  Index m_offset = 10;
  Index q = 2;
  Index batch_rows = 0;
  Index trials = 3;
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned threads = 1;
  bool deterministic = false;
};

void run_sweep_cmd(const SweepArgs& s) {
  const Batch input = load_input(s.in);
  SweepPlan plan;
  std::stringstream ms(s.methods);
  for (std::string tok; std::getline(ms, tok, ',');) plan.methods.push_back(parse_method(tok));
  plan.ell_values = parse_ell_list(s.ells);
  plan.k = s.k;
  plan.m_offset = s.m_offset;
  plan.q = s.q;
  plan.batch_rows = s.batch_rows > 0 ? s.batch_rows
                                     : (is_sparse(input) ? 2 * batch_cols(input) : batch_cols(input));
  plan.trials = s.trials;
  plan.base_seed = Seed{s.seed};
  SweepOptions opts;
  opts.threads = std::max(1u, s.threads);
  opts.record_timing = !s.deterministic;
  const auto rows = run_sweep(input, plan, opts);
  write_sweep_outputs(s.out_dir, rows);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
  if (failed) std::cerr << "sweep: " << failed << " of " << rows.size() << " cells failed (see sweep_errors.csv)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming matrix sketches: Frequent Directions and block-Krylov accelerated variants"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "write a synthetic matrix");
  g->add_flag("--dense", gen.dense, "dense low-rank-plus-noise matrix (CSV)");
  g->add_flag("--sparse", gen.sparse, "sparse uniform matrix (LIBSVM)");
  g->add_option("--n", gen.n, "rows")->required();
  g->add_option("--d", gen.d, "columns")->required();
  g->add_option("--k", gen.k, "signal rank (dense)");
  g->add_option("--zeta", gen.zeta, "noise divisor (dense)");
  g->add_option("--decay", gen.decay, "linear, fast or slow (dense)");
  g->add_option("--density", gen.density, "nonzero probability (sparse)");
  g->add_option("--seed", gen.seed, "random seed");
  g->add_option("--out", gen.out, "output path")->required();

  SketchArgs sk;
  auto* s = app.add_subcommand("sketch", "sketch a matrix with one method");
  add_input_flags(s, sk.in);
  s->add_option("--method", sk.method, "fd, ga or cs");
  s->add_option("--ell", sk.ell, "sketch size (output has ell-1 rows)")->required();
  s->add_option("--m", sk.m, "random block width (default ell+10)");
  s->add_option("--q", sk.q, "Krylov depth");
  s->add_option("--batch-rows", sk.batch_rows, "rows per batch (default d dense, 2d sparse)");
  s->add_option("--seed", sk.seed, "random seed");
  s->add_option("--out", sk.out, "sketch CSV")->required();
  s->add_option("--manifest", sk.manifest, "JSON-lines run record (default <out>.jsonl)");
  s->add_flag("--deterministic", sk.deterministic, "omit timings from the manifest");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "error metrics of a sketch");
  add_input_flags(e, ev.in);
  e->add_option("--sketch", ev.sketch, "sketch CSV")->required();
  e->add_option("--k", ev.k, "rank for the projection error");
  e->add_flag("--bounds", ev.bounds, "add FD and streaming bound columns (full SVD)");
  e->add_option("--m", ev.m, "block width used for the sketch (theorem bounds)");
  e->add_option("--q", ev.q, "Krylov depth used for the sketch");
  e->add_option("--batch-rows", ev.batch_rows, "batch height used for the sketch");
  e->add_option("--eps", ev.eps, "Gaussian bound eps (default: largest usable)");
  e->add_option("--cs-eps", ev.cs_eps, "CountSketch bound eps");
  e->add_option("--p", ev.p, "CountSketch failure probability");
  e->add_option("--eta", ev.eta, "failure probability of the matrix Bernstein step");
  e->add_option("--out", ev.out, "output CSV (default stdout)");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "methods x sketch sizes x trials");
  add_input_flags(w, sw.in);
  w->add_option("--methods", sw.methods, "comma list of fd, ga, cs");
  w->add_option("--ells", sw.ells, "sketch sizes: a,b,c or start:step:stop");
  w->add_option("--k", sw.k, "rank for the projection error");
  w->add_option("--m-offset", sw.m_offset, "m = ell + offset");
  w->add_option("--q", sw.q, "Krylov depth");
  w->add_option("--batch-rows", sw.batch_rows, "rows per batch");
  w->add_option("--trials", sw.trials, "trials per cell");
  w->add_option("--seed", sw.seed, "base seed");
  w->add_option("--out-dir", sw.out_dir, "output directory")->required();
  w->add_option("--threads", sw.threads, "worker threads")->envname("SKETCH_THREADS");
  w->add_flag("--deterministic", sw.deterministic, "write wall_s as 0 for reproducible bytes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }

  try {
    if (*g) run_gen(gen);
    if (*s) run_sketch(sk);
    if (*e) run_eval(ev);
    if (*w) run_sweep_cmd(sw);
  } catch (const ArgumentError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const CapacityError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const StateError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const IoError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 3;
  } catch (const NumericalError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 4;
  }
  return 0;
}
