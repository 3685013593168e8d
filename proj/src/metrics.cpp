#include "bkifd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "bkifd/errors.hpp"

namespace bkifd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr Index kDenseEigenCols = 1500;

void require_gram_capacity(Index d, Index cap) {
  if (d > cap) {
    throw CapacityError("covariance error needs a dense " + std::to_string(d) + "x" +
                        std::to_string(d) + " Gram matrix; cap is " + std::to_string(cap) +
                        " columns (use a desk-scale input)");
  }
}

void require_same_width(Index a_cols, Index b_cols) {
  if (a_cols != b_cols) {
    throw ArgumentError("metrics: A has " + std::to_string(a_cols) + " columns, B has " +
                        std::to_string(b_cols));
  }
}

template <typename Matrix>
double covariance_raw_impl(const Matrix& a, const DenseMatrix& b, Index cap) {
  require_same_width(a.cols(), b.cols());
  require_gram_capacity(a.cols(), cap);
  DenseMatrix diff = gram(a);
  diff.noalias() -= b.transpose() * b;
  diff = 0.5 * (diff + diff.transpose()).eval();
  // Power iteration stalls on the clustered top eigenvalues FD produces;
  // small Gram differences go through the dense eigensolver instead.
  if (diff.rows() <= kDenseEigenCols) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(diff), Eigen::EigenvaluesOnly);
    if (eig.info() == Eigen::Success) return eig.eigenvalues().cwiseAbs().maxCoeff();
  }
  return spectral_norm_symmetric(diff, 1e-12, 100000).value;
}

// Outer form shared by both covariance bounds.
double streaming_bound(const BoundInputs& inp, double one_plus_delta) {
  const double s = static_cast<double>(inp.s);
  const double log_term = std::log(2.0 * static_cast<double>(inp.d) / inp.eta);
  const double factor = s * one_plus_delta + log_term * 4.0 * one_plus_delta / 3.0 +
                        std::sqrt(2.0 * s * one_plus_delta * one_plus_delta * log_term);
  return factor * inp.sigma_ell_plus_1 * inp.sigma_ell_plus_1 +
         inp.tail_fro_k / static_cast<double>(inp.ell - inp.k);
}

double krylov_decay(const BoundInputs& inp) {
  const double rate = std::min(std::sqrt(inp.gamma), 1.0);
  return 4.0 / std::exp2(static_cast<double>(2 * inp.q + 1) * rate);
}

void require_common(const BoundInputs& inp) {
  if (!(inp.gamma > 0.0)) throw ArgumentError("theorem bound: spectral gap gamma must be > 0");
  if (inp.k < 0 || inp.k >= inp.ell) throw ArgumentError("theorem bound: need 0 <= k < ell");
  if (inp.d < inp.ell) throw ArgumentError("theorem bound: need ell <= d");
  if (inp.s < 1) throw ArgumentError("theorem bound: need s >= 1");
  if (!(inp.eta > 0.0 && inp.eta < 1.0)) throw ArgumentError("theorem bound: eta must lie in (0, 1)");
}

}  // namespace

double Spectrum::tail_fro2(Index k) const {
  if (k < 0) throw ArgumentError("tail_fro2: k must be >= 0");
  double tail = 0.0;
  for (Index i = k; i < s.size(); ++i) tail += s[i] * s[i];
  return tail;
}

double Spectrum::sigma(Index i) const { return i >= 1 && i <= s.size() ? s[i - 1] : 0.0; }

Spectrum spectrum_of(const DenseMatrix& a) {
  Spectrum spec;
  spec.s = singular_values(a);
  spec.fro2 = a.squaredNorm();
  return spec;
}

double covariance_error_raw(const DenseMatrix& a, const DenseMatrix& b, Index gram_cap) {
  return covariance_raw_impl(a, b, gram_cap);
}

double covariance_error_raw(const SparseMatrix& a, const DenseMatrix& b, Index gram_cap) {
  return covariance_raw_impl(a, b, gram_cap);
}

double covariance_error(const DenseMatrix& a, const DenseMatrix& b, Index gram_cap) {
  const double fro2 = a.squaredNorm();
  const double raw = covariance_error_raw(a, b, gram_cap);
  return fro2 > 0.0 ? raw / fro2 : raw;
}

double covariance_error(const SparseMatrix& a, const DenseMatrix& b, Index gram_cap) {
  const double f = frobenius_norm(a);
  const double raw = covariance_error_raw(a, b, gram_cap);
  return f > 0.0 ? raw / (f * f) : raw;
}

double projection_residual(const DenseMatrix& a, const DenseMatrix& b, Index k) {
  require_same_width(a.cols(), b.cols());
  const SvdFactors top = truncated_svd(b, k);
  const DenseMatrix coords = a * top.vt.transpose();
  DenseMatrix residual = a;
  residual.noalias() -= coords * top.vt;
  return residual.squaredNorm();
}

double projection_error(const DenseMatrix& a, const DenseMatrix& b, Index k, const Spectrum& spec) {
  const double num = projection_residual(a, b, k);
  const double den = spec.tail_fro2(k);
  // Rank <= k up to roundoff: the optimum is (numerically) zero.
  if (den <= 1e-24 * std::max(spec.fro2, 1.0)) return num <= 1e-18 ? 1.0 : kInf;
  return num / den;
}

double projection_error(const DenseMatrix& a, const DenseMatrix& b, Index k) {
  return projection_error(a, b, k, spectrum_of(a));
}

ErrorReport evaluate(const DenseMatrix& a, const DenseMatrix& b, Index k, const Spectrum& spec) {
  ErrorReport r;
  r.k = k;
  r.ell = b.rows() + 1;
  r.raw_cov = covariance_error_raw(a, b);
  r.covariance_error = spec.fro2 > 0.0 ? r.raw_cov / spec.fro2 : r.raw_cov;
  r.raw_proj = projection_residual(a, b, k);
  const double den = spec.tail_fro2(k);
  if (den <= 1e-24 * std::max(spec.fro2, 1.0)) {
    r.projection_error = r.raw_proj <= 1e-18 ? 1.0 : kInf;
  } else {
    r.projection_error = r.raw_proj / den;
  }
  return r;
}

ErrorReport evaluate(const DenseMatrix& a, const DenseMatrix& b, Index k) {
  return evaluate(a, b, k, spectrum_of(a));
}

ProjectionInequality check_projection_inequality(const DenseMatrix& a, const DenseMatrix& b,
                                                 Index k, const Spectrum& spec, double raw_cov,
                                                 double slack_rel) {
  ProjectionInequality out;
  out.lhs = projection_residual(a, b, k);
  out.rhs = spec.tail_fro2(k) + 2.0 * static_cast<double>(k) * raw_cov;
  out.holds = out.lhs <= out.rhs + slack_rel * spec.fro2;
  return out;
}

ProjectionInequality check_projection_inequality(const DenseMatrix& a, const DenseMatrix& b,
                                                 Index k, double slack_rel) {
  return check_projection_inequality(a, b, k, spectrum_of(a), covariance_error_raw(a, b),
                                     slack_rel);
}

double fd_bound(const Spectrum& spec, Index k, Index ell) {
  if (k < 0 || k >= ell) {
    throw ArgumentError("fd_bound: need 0 <= k < ell (k=" + std::to_string(k) +
                        ", ell=" + std::to_string(ell) + ")");
  }
  return spec.tail_fro2(k) / static_cast<double>(ell - k);
}

double fd_bound(const DenseMatrix& a, Index k, Index ell) {
  if (k < 0 || k >= ell) {
    throw ArgumentError("fd_bound: need 0 <= k < ell (k=" + std::to_string(k) +
                        ", ell=" + std::to_string(ell) + ")");
  }
  return fd_bound(spectrum_of(a), k, ell);
}

double spectral_gap(const Spectrum& spec, Index ell) {
  if (ell < 1) throw ArgumentError("spectral_gap: ell must be >= 1");
  const double next = spec.sigma(ell + 1);
  if (next == 0.0) return kInf;
  return (spec.sigma(ell) - next) / next;
}

double spectral_gap(const DenseMatrix& a, Index ell) { return spectral_gap(spectrum_of(a), ell); }

double default_eps_ga(Index s) { return std::sqrt(2.0 * std::log(20.0 * static_cast<double>(s))); }

double usable_eps_ga(Index s, Index m, Index ell) {
  const double eps = default_eps_ga(s);
  const double room = std::sqrt(static_cast<double>(m)) - std::sqrt(static_cast<double>(ell));
  return room - eps > 0.0 ? eps : 0.5 * room;
}

BoundInputs bound_inputs_from(const Spectrum& spec, Index d, Index s, Index ell, Index m, Index q,
                              Index k) {
  BoundInputs inp;
  inp.s = s;
  inp.ell = ell;
  inp.m = m;
  inp.q = q;
  inp.k = k;
  inp.d = d;
  inp.gamma = spectral_gap(spec, ell);
  inp.sigma_ell_plus_1 = spec.sigma(ell + 1);
  inp.tail_fro_k = spec.tail_fro2(k);
  inp.eps = usable_eps_ga(s, m, ell);
  return inp;
}

BoundValue theorem_bound_ga(const BoundInputs& inp) {
  require_common(inp);
  if (!(inp.eps >= 0.0)) throw ArgumentError("theorem_bound_ga: eps must be >= 0");
  const double sm = std::sqrt(static_cast<double>(inp.m));
  const double denom = sm - std::sqrt(static_cast<double>(inp.ell)) - inp.eps;
  if (!(denom > 0.0)) {
    throw ArgumentError("theorem_bound_ga: need sqrt(m) - sqrt(ell) - eps > 0 (got " +
                        std::to_string(denom) + ")");
  }
  const double d = static_cast<double>(inp.d);
  const double ratio = std::sqrt(d - static_cast<double>(inp.ell)) * (std::sqrt(d) + sm + inp.eps) / denom;
  const double root = 1.0 + krylov_decay(inp) * ratio;
  BoundValue v;
  v.one_plus_delta = root * root;
  v.value = streaming_bound(inp, v.one_plus_delta);
  v.probability = 1.0 - 2.0 * static_cast<double>(inp.s) * std::exp(-inp.eps * inp.eps / 2.0) - inp.eta;
  return v;
}

BoundValue theorem_bound_cs(const BoundInputs& inp) {
  require_common(inp);
  if (!(inp.eps > 0.0 && inp.eps < 1.0)) throw ArgumentError("theorem_bound_cs: eps must lie in (0, 1)");
  if (!(inp.p > 0.0 && inp.p < 1.0)) throw ArgumentError("theorem_bound_cs: p must lie in (0, 1)");
  const double ell = static_cast<double>(inp.ell);
  const double min_m = (ell * ell + ell) / (inp.eps * inp.eps * inp.p);
  if (static_cast<double>(inp.m) < min_m * (1.0 - 1e-12)) {
    throw ArgumentError("theorem_bound_cs: m=" + std::to_string(inp.m) + " is below the minimum " +
                        std::to_string(static_cast<Index>(std::ceil(min_m * (1.0 - 1e-12)))));
  }
  const double d = static_cast<double>(inp.d);
  const double root = 1.0 + krylov_decay(inp) * std::sqrt(d * (d - ell) / (1.0 - inp.eps));
  BoundValue v;
  v.one_plus_delta = root * root;
  v.value = streaming_bound(inp, v.one_plus_delta);
  v.probability = 1.0 - static_cast<double>(inp.s) * inp.p - inp.eta;
  return v;
}

}  // namespace bkifd
