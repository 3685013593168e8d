#pragma once

#include <cstddef>

#include "bkifd/core_numerics.hpp"

namespace bkifd {

/// Largest d for which the d x d Gram difference is formed densely.
inline constexpr Index kDefaultGramCap = 10000;

/// Singular values of A with cached squared-Frobenius bookkeeping.
struct Spectrum {
  Vector s;            // descending
  double fro2 = 0.0;   // ||A||_F^2

  /// ||A - A_k||_F^2 = sum_{i > k} s_i^2.
  double tail_fro2(Index k) const;
  /// sigma_{i} with 1-based i; 0 past the end.
  double sigma(Index i) const;
};

Spectrum spectrum_of(const DenseMatrix& a);

/// ||A^T A - B^T B||_2, the Gram difference formed densely.
/// Throws CapacityError when d exceeds `gram_cap`.
double covariance_error_raw(const DenseMatrix& a, const DenseMatrix& b,
                            Index gram_cap = kDefaultGramCap);
double covariance_error_raw(const SparseMatrix& a, const DenseMatrix& b,
                            Index gram_cap = kDefaultGramCap);
/// covariance_error_raw / ||A||_F^2.
double covariance_error(const DenseMatrix& a, const DenseMatrix& b, Index gram_cap = kDefaultGramCap);
double covariance_error(const SparseMatrix& a, const DenseMatrix& b, Index gram_cap = kDefaultGramCap);

/// ||A - A V_k V_k^T||_F^2 with V_k the top-k right singular vectors of B.
double projection_residual(const DenseMatrix& a, const DenseMatrix& b, Index k);

/// projection_residual / ||A - A_k||_F^2. When A has rank <= k the ratio is
/// 1 if the residual is <= 1e-18 and +infinity otherwise.
double projection_error(const DenseMatrix& a, const DenseMatrix& b, Index k);
double projection_error(const DenseMatrix& a, const DenseMatrix& b, Index k, const Spectrum& spec);

struct ErrorReport {
  double covariance_error = 0.0;  // normalized by ||A||_F^2
  double projection_error = 0.0;  // normalized by ||A - A_k||_F^2
  Index k = 0;
  Index ell = 0;
  double raw_cov = 0.0;
  double raw_proj = 0.0;
};

/// Both error functionals for a sketch of ell-1 rows; ell = b.rows() + 1.
ErrorReport evaluate(const DenseMatrix& a, const DenseMatrix& b, Index k);
ErrorReport evaluate(const DenseMatrix& a, const DenseMatrix& b, Index k, const Spectrum& spec);

/// Covariance-to-projection inequality
///   ||A - pi_B^k(A)||_F^2 <= ||A - A_k||_F^2 + 2k ||A^T A - B^T B||_2.
struct ProjectionInequality {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;  // lhs <= rhs + slack
};

ProjectionInequality check_projection_inequality(const DenseMatrix& a, const DenseMatrix& b,
                                                 Index k, double slack_rel = 1e-8);
ProjectionInequality check_projection_inequality(const DenseMatrix& a, const DenseMatrix& b,
                                                 Index k, const Spectrum& spec, double raw_cov,
                                                 double slack_rel = 1e-8);

/// ||A - A_k||_F^2 / (ell - k). Throws ArgumentError unless 0 <= k < ell.
double fd_bound(const DenseMatrix& a, Index k, Index ell);
double fd_bound(const Spectrum& spec, Index k, Index ell);

/// (sigma_ell - sigma_{ell+1}) / sigma_{ell+1}; +infinity when sigma_{ell+1} = 0.
double spectral_gap(const DenseMatrix& a, Index ell);
double spectral_gap(const Spectrum& spec, Index ell);

/// Inputs of the streaming covariance bounds.
struct BoundInputs {
  Index s = 1;                    // number of batches
  Index ell = 0;
  Index m = 0;
  Index q = 0;
  Index k = 0;
  double eta = 0.05;
  double eps = 0.0;
  double p = 0.0;                 // CountSketch failure probability
  double gamma = 0.0;             // spectral gap at ell
  double sigma_ell_plus_1 = 0.0;  // ||A - A_ell||_2
  double tail_fro_k = 0.0;        // ||A - A_k||_F^2
  Index d = 0;
};

struct BoundValue {
  double value = 0.0;
  /// Probability with which the bound is guaranteed; may be <= 0 (vacuous).
  double probability = 0.0;
  double one_plus_delta = 0.0;
};

/// sqrt(2 ln(20 s)), which makes 2 s exp(-eps^2 / 2) = 0.1.
double default_eps_ga(Index s);

/// Largest usable Gaussian eps: default_eps_ga(s) when it satisfies
/// sqrt(m) - sqrt(ell) - eps > 0, otherwise half of sqrt(m) - sqrt(ell).
double usable_eps_ga(Index s, Index m, Index ell);

/// Fills the spectral fields (gamma, sigma_{ell+1}, tail, d) from A.
BoundInputs bound_inputs_from(const Spectrum& spec, Index d, Index s, Index ell, Index m, Index q,
                              Index k);

/// Gaussian-start bound with
///   1+delta = (1 + 4 / 2^((2q+1) min(sqrt(gamma), 1)) *
///              sqrt(d-ell) (sqrt(d)+sqrt(m)+eps) / (sqrt(m)-sqrt(ell)-eps))^2.
/// Throws ArgumentError if sqrt(m)-sqrt(ell)-eps <= 0, gamma <= 0, or k >= ell.
BoundValue theorem_bound_ga(const BoundInputs& inp);

/// CountSketch-start bound with
///   1+delta = (1 + 4 / 2^((2q+1) min(sqrt(gamma), 1)) * sqrt(d(d-ell)/(1-eps)))^2.
/// Throws ArgumentError naming the minimum m when m < (ell^2+ell)/(eps^2 p).
BoundValue theorem_bound_cs(const BoundInputs& inp);

}  // namespace bkifd
