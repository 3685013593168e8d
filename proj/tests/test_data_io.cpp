#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "bkifd/data_io.hpp"
#include "bkifd/errors.hpp"
#include "test_util.hpp"

using namespace bkifd;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("decay profiles") {
  const Vector lin = decay_profile(Decay::Linear, 4);
  CHECK(lin[0] == 1.0);
  CHECK(lin[3] == doctest::Approx(0.25));
  CHECK(decay_profile(Decay::Fast, 3)[2] == doctest::Approx(0.125));
  CHECK(decay_profile(Decay::Slow, 4)[3] == doctest::Approx(0.5));
  CHECK(parse_decay("fast") == Decay::Fast);
  CHECK_THROWS_AS(parse_decay("medium"), ArgumentError);
}

TEST_CASE("gen_dense") {
  SyntheticSpec spec;
  spec.n = 2000;
  spec.d = 60;
  spec.k = 8;
  spec.zeta = std::numeric_limits<double>::infinity();
  spec.seed = Seed{5};
  const DenseMatrix a = gen_dense(spec);
  CHECK(a.rows() == 2000);
  CHECK(a.cols() == 60);
  const Vector s = test::oracle_singular_values(a);
  CHECK(s[8] / s[0] <= 1e-6);  // eig(A^T A) floors near sqrt(eps)
  CHECK(singular_values(a)[8] / s[0] <= 1e-10);
  const Vector dg = decay_profile(Decay::Linear, 8);
  for (Index i = 0; i < 8; ++i) {
    CHECK(std::abs(s[i] - std::sqrt(2000.0) * dg[i]) <= 0.1 * std::sqrt(2000.0) * dg[i]);
  }

  CHECK((gen_dense(spec) - a).norm() == 0.0);
  spec.zeta = 0.0;
  CHECK_THROWS_AS(gen_dense(spec), ArgumentError);
}

TEST_CASE("gen_dense spectrum is nonincreasing with noise") {
  SyntheticSpec spec;
  spec.n = 3000;
  spec.d = 300;
  spec.k = 20;
  spec.zeta = 10.0;
  spec.seed = Seed{1};
  const Vector s = singular_values(gen_dense(spec));
  for (Index i = 1; i < s.size(); ++i) CHECK(s[i] <= s[i - 1]);
  CHECK(s[0] > s[25]);
}

TEST_CASE("gen_sparse") {
  SparseSpec spec;
  spec.n = 1000;
  spec.d = 2000;
  spec.density = 0.001;
  spec.seed = Seed{1};
  const SparseMatrix a = gen_sparse(spec);
  const double sd = std::sqrt(2000000.0 * 0.001 * 0.999);
  CHECK(std::abs(static_cast<double>(a.nnz()) - 2000.0) <= 4.0 * sd);
  for (double v : a.values()) {
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_NOTHROW(SparseMatrix::from_csr(a.rows(), a.cols(),
                                       {a.row_ptr().begin(), a.row_ptr().end()},
                                       {a.col_idx().begin(), a.col_idx().end()},
                                       {a.values().begin(), a.values().end()}));

  spec.n = 20;
  spec.d = 15;
  spec.density = 1.0;
  CHECK(gen_sparse(spec).nnz() == 300);
  spec.density = 0.0;
  CHECK_THROWS_AS(gen_sparse(spec), ArgumentError);
}

TEST_CASE("load_libsvm toy file") {
  const auto dir = test::temp_dir("libsvm_toy");
  write_text(dir / "t.svm", "1 1:0.5 3:2.0\n0 2:1.0\n");
  const SparseMatrix a = load_libsvm(dir / "t.svm");
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
  CHECK(a.nnz() == 3);
  const DenseMatrix d = a.to_dense();
  CHECK(d(0, 0) == 0.5);
  CHECK(d(0, 2) == 2.0);
  CHECK(d(1, 1) == 1.0);

  LibsvmOptions wide;
  wide.cols = 10;
  CHECK(load_libsvm(dir / "t.svm", wide).cols() == 10);
  LibsvmOptions narrow;
  narrow.max_cols = 2;
  const SparseMatrix cut = load_libsvm(dir / "t.svm", narrow);
  CHECK(cut.cols() == 2);
  CHECK(cut.nnz() == 2);
}

TEST_CASE("load_libsvm errors carry the line number") {
  const auto dir = test::temp_dir("libsvm_bad");
  const std::pair<const char*, std::size_t> cases[] = {
      {"1 1:0.5\n0 3:1 2:4\n", 2},
      {"1 1:0.5\n\n1 2:x\n", 3},
      {"1 0:1\n", 1},
      {"1 1:2\n1 4:1 4:2\n", 2},
  };
  for (const auto& [text, line] : cases) {
    write_text(dir / "bad.svm", text);
    try {
      load_libsvm(dir / "bad.svm");
      FAIL("expected ParseError for: " << text);
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  }
  CHECK_THROWS_AS(load_libsvm(dir / "missing.svm"), IoError);
}

TEST_CASE("libsvm round trip") {
  const SparseMatrix a = test::random_sparse(30, 17, 0.2, 3);
  const auto dir = test::temp_dir("libsvm_rt");
  write_libsvm(dir / "a.svm", a);
  LibsvmOptions opts;
  opts.cols = 17;
  const SparseMatrix b = load_libsvm(dir / "a.svm", opts);
  REQUIRE(b.nnz() == a.nnz());
  CHECK(std::equal(a.row_ptr().begin(), a.row_ptr().end(), b.row_ptr().begin()));
  CHECK(std::equal(a.col_idx().begin(), a.col_idx().end(), b.col_idx().begin()));
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));

  // nnz equals the number of idx:val tokens on disk.
  const std::string text = read_text(dir / "a.svm");
  CHECK(static_cast<Index>(std::count(text.begin(), text.end(), ':')) == a.nnz());
}

TEST_CASE("csv round trips") {
  const auto dir = test::temp_dir("csv");
  DenseMatrix small(2, 2);
  small << 1.0, -2.5, 1e-300, 0.1;
  write_csv(dir / "s.csv", small);
  CHECK((load_csv_dense(dir / "s.csv") - small).norm() == 0.0);

  write_text(dir / "sci.csv", "x,y\n1e3,-2.5E-2\n");
  const DenseMatrix sci = load_csv_dense(dir / "sci.csv", true);
  CHECK(sci(0, 0) == 1000.0);
  CHECK(sci(0, 1) == -0.025);

  write_text(dir / "ragged.csv", "1,2\n3,4\n5\n");
  try {
    load_csv_dense(dir / "ragged.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  const DenseMatrix big = test::random_dense(1000, 1000, 4);
  write_csv(dir / "big.csv", big, "header");
  const DenseMatrix loaded = load_csv_dense(dir / "big.csv", true);
  CHECK((loaded - big).norm() == 0.0);
  write_csv(dir / "big2.csv", loaded, "header");
  CHECK(read_text(dir / "big.csv") == read_text(dir / "big2.csv"));
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, -1e-310, 6.02214076e23, 0.0}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("csv batch source") {
  const auto dir = test::temp_dir("csv_src");
  const DenseMatrix a = test::random_dense(23, 5, 6);
  write_csv(dir / "a.csv", a, "c0,c1,c2,c3,c4");
  CsvBatchSource src(dir / "a.csv", 10, true);
  CHECK(src.cols() == 5);
  DenseMatrix stacked(30, 5);
  Index at = 0;
  while (auto b = src.next()) {
    const auto& m = std::get<DenseMatrix>(*b);
    REQUIRE(m.rows() == 10);
    stacked.middleRows(at, 10) = m;
    at += 10;
  }
  CHECK(at == 30);
  CHECK((stacked.topRows(23) - a).norm() == 0.0);
  CHECK(stacked.bottomRows(7).isZero(0.0));
  CHECK(src.peak_rows_held() <= 10);
}

TEST_CASE("libsvm batch source") {
  const auto dir = test::temp_dir("svm_src");
  const SparseMatrix a = test::random_sparse(25, 9, 0.3, 2);
  write_libsvm(dir / "a.svm", a);
  LibsvmOptions opts;
  opts.cols = 9;
  LibsvmBatchSource src(dir / "a.svm", 7, opts);
  Index batches = 0, nnz = 0;
  while (auto b = src.next()) {
    const auto& m = std::get<SparseMatrix>(*b);
    CHECK(m.rows() == 7);
    CHECK(m.cols() == 9);
    nnz += m.nnz();
    ++batches;
  }
  CHECK(batches == 4);
  CHECK(nnz == a.nnz());
  CHECK(src.peak_rows_held() <= 7);
}
