#include <doctest.h>

#include <cmath>

#include "bkifd/data_io.hpp"
#include "bkifd/errors.hpp"
#include "bkifd/metrics.hpp"
#include "bkifd/rbkifd.hpp"
#include "test_util.hpp"

using namespace bkifd;
using bkifd::test::oracle_cov_err;
using bkifd::test::random_dense;

namespace {

RbkifdConfig make_cfg(Index ell, Index m, Index q, Index batch_rows, Index d, std::uint64_t seed,
                      SketchKind kind = SketchKind::Gaussian) {
  RbkifdConfig c;
  c.bki.ell = ell;
  c.bki.m = m;
  c.bki.q = q;
  c.bki.kind = kind;
  c.bki.seed = Seed{seed};
  c.batch_rows = batch_rows;
  c.d = d;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(RbkifdSketcher(make_cfg(5, 6, 2, 4, 10, 0)), ArgumentError);
  CHECK_THROWS_AS(RbkifdSketcher(make_cfg(1, 2, 2, 4, 10, 0)), ArgumentError);
  CHECK_THROWS_AS(RbkifdSketcher(make_cfg(5, 4, 2, 10, 10, 0)), ArgumentError);
  CHECK_THROWS_AS(RbkifdSketcher(make_cfg(5, 6, 2, 10, 0, 0)), ArgumentError);

  RbkifdSketcher st(make_cfg(5, 6, 2, 10, 8, 0));
  CHECK(st.batches_processed() == 0);
  CHECK_THROWS_AS(st.finalize(), StateError);
  CHECK_THROWS_AS(st.push_batch(random_dense(10, 9, 1)), ArgumentError);
  CHECK_THROWS_AS(st.push_batch(random_dense(11, 8, 1)), ArgumentError);

  RbkifdSketcher minimal(make_cfg(2, 2, 1, 4, 6, 0));
  minimal.push_batch(random_dense(4, 6, 2));
  const SketchResult r = minimal.finalize();
  CHECK(r.b_matrix.rows() == 1);
  CHECK(r.b_matrix.cols() == 6);
}

TEST_CASE("default kinds") {
  CHECK(default_kind(false) == SketchKind::Gaussian);
  CHECK(default_kind(true) == SketchKind::CountSketch);
}

TEST_CASE("single rank-(ell-1) batch is captured exactly") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Index ell = 6;
    const DenseMatrix a = random_dense(30, ell - 1, seed) * random_dense(ell - 1, 20, seed + 40);
    RbkifdSketcher st(make_cfg(ell, ell + 2, 2, 30, 20, seed));
    st.push_batch(a);
    const SketchResult r = st.finalize();
    CHECK(oracle_cov_err(a, r.b_matrix) <= 1e-7 * a.squaredNorm());
  }
}

TEST_CASE("after one batch the sketch is the leading rows of P") {
  const DenseMatrix a = random_dense(20, 15, 3);
  const RbkifdConfig cfg = make_cfg(5, 7, 2, 20, 15, 9);
  RbkifdSketcher st(cfg);
  st.push_batch(a);
  const BkiOutput p = rbki(a, batch_config(cfg, 0));
  CHECK((st.finalize().b_matrix - p.p.topRows(4)).norm() == 0.0);
}

TEST_CASE("error decomposes through the stacked compressions") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index b = 25, d = 18;
    DenseMatrix a = random_dense(4 * b, d, seed);
    if (seed % 2) a.middleRows(b, b) = a.topRows(b);  // two identical batches
    const RbkifdConfig cfg = make_cfg(6, 8, 1, b, d, seed + 1);
    RbkifdSketcher st(cfg);
    DenseMatrix p(4 * 6, d);
    for (Index i = 0; i < 4; ++i) {
      const DenseMatrix batch = a.middleRows(i * b, b);
      st.push_batch(batch);
      p.middleRows(i * 6, 6) = rbki(batch, batch_config(cfg, static_cast<std::size_t>(i))).p;
    }
    const DenseMatrix bm = st.finalize().b_matrix;
    const double total = oracle_cov_err(a, bm);
    const double compress = oracle_cov_err(a, p);
    const double merge = oracle_cov_err(p, bm);
    CHECK(total <= compress + merge + 1e-9 * a.squaredNorm());
    // The merge part is an FD run over the stacked P.
    CHECK(merge <= test::oracle_tail(p, 0) / 6.0 + 1e-9 * a.squaredNorm());
  }
}

TEST_CASE("streamed GA-BKIFD covariance error against the Gaussian bound") {
  const Index ell = 20, m = 25, q = 2, s = 10, b = 500, d = 100, k = 10;
  int within = 0;
  const int runs = 20;
  for (int run = 0; run < runs; ++run) {
    SyntheticSpec spec;
    spec.n = s * b;
    spec.d = d;
    spec.k = k;
    spec.zeta = 10.0;
    spec.seed = Seed{static_cast<std::uint64_t>(7000 + run)};
    const DenseMatrix a = gen_dense(spec);
    MatrixBatchSource src(a, b);
    const SketchResult r = rbkifd_run_stream(src, make_cfg(ell, m, q, b, d, 1000 + run));
    CHECK(r.batches_processed == static_cast<std::size_t>(s));
    const Spectrum sp = spectrum_of(a);
    BoundInputs inp = bound_inputs_from(sp, d, s, ell, m, q, k);
    inp.eps = usable_eps_ga(s, m, ell);
    const double raw = covariance_error_raw(a, r.b_matrix);
    if (raw <= theorem_bound_ga(inp).value) ++within;
  }
  MESSAGE("within bound: " << within << "/" << runs);
  CHECK(within >= 18);
}

TEST_CASE("finalize shape across configurations") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index ell = 2 + static_cast<Index>(seed % 5);
    const Index d = 5 + static_cast<Index>(seed % 7);
    const Index b = ell + static_cast<Index>(seed % 4);
    const SketchKind kind = seed % 2 ? SketchKind::CountSketch : SketchKind::Gaussian;
    RbkifdSketcher st(make_cfg(ell, ell + 1, 1, b, d, seed, kind));
    const Index batches = 1 + static_cast<Index>(seed % 3);
    for (Index i = 0; i < batches; ++i) st.push_batch(random_dense(b, d, seed * 10 + i));
    const SketchResult r = st.finalize();
    CHECK(r.b_matrix.rows() == ell - 1);
    CHECK(r.b_matrix.cols() == d);
    CHECK(r.batches_processed == static_cast<std::size_t>(batches));
  }
}

TEST_CASE("run_stream equals the manual push loop and pads the tail") {
  const Index b = 12, d = 10;
  const DenseMatrix a = random_dense(5 * b - 7, d, 21);
  const RbkifdConfig cfg = make_cfg(4, 6, 2, b, d, 3);
  MatrixBatchSource src(a, b);
  const SketchResult streamed = rbkifd_run_stream(src, cfg);
  CHECK(streamed.batches_processed == 5);

  RbkifdSketcher manual(cfg);
  for (Index i = 0; i < 5; ++i) {
    const Index rows = std::min(b, a.rows() - i * b);
    DenseMatrix batch = DenseMatrix::Zero(b, d);
    batch.topRows(rows) = a.middleRows(i * b, rows);
    manual.push_batch(batch);
  }
  CHECK((manual.finalize().b_matrix - streamed.b_matrix).norm() == 0.0);

  // Short final batch pushed unpadded gives the same result.
  RbkifdSketcher unpadded(cfg);
  for (Index i = 0; i < 5; ++i) {
    const Index rows = std::min(b, a.rows() - i * b);
    unpadded.push_batch(DenseMatrix(a.middleRows(i * b, rows)));
  }
  CHECK((unpadded.finalize().b_matrix - streamed.b_matrix).norm() == 0.0);
}

TEST_CASE("sketch is deterministic and variants satisfy the projection inequality") {
  const DenseMatrix a = random_dense(90, 16, 5);
  for (SketchKind kind : {SketchKind::Gaussian, SketchKind::CountSketch}) {
    MatrixBatchSource s1(a, 30);
    MatrixBatchSource s2(a, 30);
    const RbkifdConfig cfg = make_cfg(6, 9, 2, 30, 16, 77, kind);
    const SketchResult r1 = rbkifd_run_stream(s1, cfg);
    const SketchResult r2 = rbkifd_run_stream(s2, cfg);
    CHECK((r1.b_matrix - r2.b_matrix).norm() == 0.0);
    for (Index k = 1; k < 6; ++k) CHECK(check_projection_inequality(a, r1.b_matrix, k).holds);
  }
}

TEST_CASE("sparse stream from a LIBSVM file holds one batch at a time") {
  SparseSpec spec;
  spec.n = 230;
  spec.d = 40;
  spec.density = 0.1;
  spec.seed = Seed{4};
  const SparseMatrix a = gen_sparse(spec);
  const auto dir = test::temp_dir("rbkifd_libsvm");
  write_libsvm(dir / "a.svm", a);

  LibsvmOptions opts;
  opts.cols = 40;
  LibsvmBatchSource file_src(dir / "a.svm", 50, opts);
  const RbkifdConfig cfg = make_cfg(8, 12, 2, 50, 40, 6, SketchKind::CountSketch);
  const SketchResult from_file = rbkifd_run_stream(file_src, cfg);
  CHECK(file_src.peak_rows_held() <= 50);

  MatrixBatchSource mem_src(a, 50);
  const SketchResult from_mem = rbkifd_run_stream(mem_src, cfg);
  CHECK((from_file.b_matrix - from_mem.b_matrix).norm() == 0.0);
}

TEST_CASE("live rows stay within the merge buffer plus one batch") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Index ell = 3 + static_cast<Index>(seed), b = 20;
    RbkifdSketcher st(make_cfg(ell, ell + 2, 1, b, 12, seed));
    for (int i = 0; i < 6; ++i) st.push_batch(random_dense(b, 12, seed * 100 + i));
    const SketchResult r = st.finalize();
    // After the unshrunk first batch the buffer holds ell rows, so the
    // second batch briefly sees 2*ell buffered rows.
    CHECK(r.peak_live_rows <= 2 * ell + b);
  }
}

TEST_CASE("rank-deficient batches are flagged") {
  const DenseMatrix a = random_dense(20, 2, 1) * random_dense(2, 10, 2);
  RbkifdSketcher st(make_cfg(5, 6, 1, 20, 10, 0));
  st.push_batch(a);
  const SketchResult r = st.finalize();
  CHECK(r.flags.size() == 1);
  CHECK(oracle_cov_err(a, r.b_matrix) <= 1e-9 * a.squaredNorm());
}
