#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "bkifd/bench.hpp"
#include "bkifd/data_io.hpp"
#include "bkifd/errors.hpp"
#include "bkifd/metrics.hpp"
#include "test_util.hpp"

using namespace bkifd;

namespace {

DenseMatrix desk_matrix(Index n, Index d, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = n;
  spec.d = d;
  spec.k = 10;
  spec.zeta = 10.0;
  spec.seed = Seed{seed};
  return gen_dense(spec);
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

// Tag balance check standing in for an XML parser.
bool tags_balanced(const std::string& svg) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while ((pos = svg.find('<', pos)) != std::string::npos) {
    const auto end = svg.find('>', pos);
    if (end == std::string::npos) return false;
    std::string tag = svg.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
    if (tag.back() == '/') continue;
    const bool closing = tag[0] == '/';
    std::string name = tag.substr(closing ? 1 : 0);
    name = name.substr(0, name.find_first_of(" \t\n"));
    if (closing) {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else {
      stack.push_back(name);
    }
  }
  return stack.empty();
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("fd") == Method::FD);
  CHECK(parse_method("GA") == Method::GA_BKIFD);
  CHECK(parse_method("cs_bkifd") == Method::CS_BKIFD);
  CHECK(to_string(Method::GA_BKIFD) == "GA_BKIFD");
  CHECK_THROWS_AS(parse_method("svd"), ArgumentError);
}

TEST_CASE("parse_ell_list") {
  CHECK(parse_ell_list("20,30,40") == std::vector<Index>{20, 30, 40});
  CHECK(parse_ell_list("50:10:150").size() == 11);
  CHECK(parse_ell_list("50:10:150").back() == 150);
  CHECK_THROWS_AS(parse_ell_list("a,b"), ArgumentError);
  CHECK_THROWS_AS(parse_ell_list("10:0:20"), ArgumentError);
}

TEST_CASE("run_method shapes") {
  const DenseMatrix a = desk_matrix(200, 20, 1);
  for (Method m : {Method::FD, Method::GA_BKIFD, Method::CS_BKIFD}) {
    MethodParams p;
    p.method = m;
    p.ell = 8;
    p.m = 12;
    p.batch_rows = 50;
    p.seed = Seed{3};
    const SketchResult r = run_method(Batch{a}, p);
    CHECK(r.b_matrix.rows() == 7);
    CHECK(r.b_matrix.cols() == 20);
    CHECK(check_projection_inequality(a, r.b_matrix, 5).holds);
  }
}

TEST_CASE("sweep cardinality and CSV schema") {
  const DenseMatrix a = desk_matrix(400, 60, 2);
  SweepPlan plan;
  plan.methods = {Method::FD, Method::GA_BKIFD};
  plan.ell_values = {20, 30, 40};
  plan.k = 10;
  plan.batch_rows = 100;
  plan.trials = 3;
  plan.base_seed = Seed{5};
  SweepOptions opts;
  opts.record_timing = false;
  const auto rows = run_sweep(Batch{a}, plan, opts);
  REQUIRE(rows.size() == 18);
  for (const auto& r : rows) CHECK(r.error.empty());

  const std::string csv = sweep_csv(rows);
  CHECK(csv.substr(0, csv.find('\n')) == "method,ell,trial,cov_err,proj_err,wall_s,nnz_ops");
  CHECK(count_of(csv, "\n") == 19);
  const auto parsed = parse_sweep_csv(csv);
  REQUIRE(parsed.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed[i].cov_err == rows[i].cov_err);
    CHECK(parsed[i].ell == rows[i].ell);
  }
  CHECK_THROWS_AS(parse_sweep_csv("method,ell\nFD,1\n"), ParseError);

  const auto agg = aggregate(rows);
  CHECK(agg.size() == 6);
  CHECK(aggregate_csv(agg).substr(0, kAggregateHeader.size()) == kAggregateHeader);

  // Threaded runs give identical rows.
  SweepOptions threaded = opts;
  threaded.threads = 3;
  CHECK(sweep_csv(run_sweep(Batch{a}, plan, threaded)) == csv);
}

TEST_CASE("sweep records failed cells and continues") {
  const DenseMatrix a = desk_matrix(100, 30, 3);
  SweepPlan plan;
  plan.methods = {Method::GA_BKIFD};
  plan.ell_values = {5, 20};  // k >= ell at ell=5
  plan.k = 10;
  plan.batch_rows = 20;
  plan.trials = 1;
  const auto rows = run_sweep(Batch{a}, plan);
  REQUIRE(rows.size() == 2);
  CHECK_FALSE(rows[0].error.empty());
  CHECK(std::isnan(rows[0].cov_err));
  CHECK(rows[1].error.empty());
  CHECK(count_of(sweep_errors_csv(rows), "\n") == 2);
}

TEST_CASE("sweep plan validation") {
  SweepPlan plan;
  plan.methods = {Method::FD};
  plan.ell_values = {20, 10};
  plan.batch_rows = 30;
  CHECK_THROWS_AS(validate(plan), ArgumentError);
  plan.ell_values = {10, 20};
  plan.trials = 0;
  CHECK_THROWS_AS(validate(plan), ArgumentError);
}

TEST_CASE("line chart is valid and deterministic") {
  std::vector<Series> s = {{"FD", {{20, 0.1}, {30, 0.05}, {40, 0.02}}},
                           {"GA_BKIFD", {{20, 0.09}, {30, 0.04}, {40, 0.03}}}};
  const std::string svg = render_line_chart("cov", "ell", "error", s);
  CHECK(svg == render_line_chart("cov", "ell", "error", s));
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(count_of(svg, "<polyline") == 2);
  CHECK(tags_balanced(svg));
  CHECK(svg.find(">ell<") != std::string::npos);
  CHECK(svg.find(">error<") != std::string::npos);

  // Degenerate data still renders.
  const std::string flat = render_line_chart("t", "x", "y", {{"one", {{1, 1}}}});
  CHECK(tags_balanced(flat));
}

TEST_CASE("write_sweep_outputs") {
  const DenseMatrix a = desk_matrix(200, 40, 4);
  SweepPlan plan;
  plan.methods = {Method::FD, Method::CS_BKIFD};
  plan.ell_values = {10, 20};
  plan.k = 5;
  plan.batch_rows = 50;
  plan.trials = 2;
  SweepOptions opts;
  opts.record_timing = false;
  const auto dir = test::temp_dir("sweep_out");
  write_sweep_outputs(dir, run_sweep(Batch{a}, plan, opts));
  for (const char* f : {"sweep.csv", "aggregate.csv", "sweep_errors.csv", "cov_err.svg", "proj_err.svg", "time.svg"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
}

TEST_CASE("FD mean covariance error falls with ell") {
  const DenseMatrix a = desk_matrix(1500, 150, 9);
  SweepPlan plan;
  plan.methods = {Method::FD};
  plan.ell_values = {20, 30, 40};
  plan.k = 10;
  plan.batch_rows = 150;
  plan.trials = 3;
  const auto agg = aggregate(run_sweep(Batch{a}, plan));
  REQUIRE(agg.size() == 3);
  for (std::size_t i = 1; i < agg.size(); ++i) {
    CHECK(agg[i].cov_err_mean <= 1.05 * agg[i - 1].cov_err_mean);
  }
}
