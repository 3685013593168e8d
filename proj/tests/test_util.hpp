#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include <Eigen/Eigenvalues>

#include "bkifd/core_numerics.hpp"
#include "bkifd/rng.hpp"

namespace bkifd::test {

inline DenseMatrix random_dense(Index rows, Index cols, std::uint64_t seed) {
  CounterRng rng(Seed{seed});
  DenseMatrix a(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) a(i, j) = rng.normal();
  }
  return a;
}

inline SparseMatrix random_sparse(Index rows, Index cols, double fill, std::uint64_t seed) {
  CounterRng rng(Seed{seed});
  DenseMatrix a = DenseMatrix::Zero(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (rng.uniform() < fill) a(i, j) = rng.normal();
    }
  }
  return SparseMatrix::from_dense(a);
}

/// Eigenvalues of a symmetric matrix, descending (independent of the SVD path).
inline Vector sym_eigenvalues_desc(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(m), Eigen::EigenvaluesOnly);
  Vector ev = eig.eigenvalues().reverse();
  return ev;
}

/// ||M||_2 for symmetric M from a dense eigensolver.
inline double sym_spectral_norm(const DenseMatrix& m) {
  return sym_eigenvalues_desc(m).cwiseAbs().maxCoeff();
}

/// Singular values of A via sqrt(eig(A^T A)), descending.
inline Vector oracle_singular_values(const DenseMatrix& a) {
  Vector ev = sym_eigenvalues_desc(DenseMatrix(a.transpose() * a));
  for (Index i = 0; i < ev.size(); ++i) ev[i] = std::sqrt(std::max(ev[i], 0.0));
  return ev;
}

/// ||A^T A - B^T B||_2 from the dense eigensolver.
inline double oracle_cov_err(const DenseMatrix& a, const DenseMatrix& b) {
  return sym_spectral_norm(DenseMatrix(a.transpose() * a - b.transpose() * b));
}

/// ||A - A_k||_F^2 from eig(A^T A) (independent of svd_thin).
inline double oracle_tail(const DenseMatrix& a, Index k) {
  Vector ev = sym_eigenvalues_desc(DenseMatrix(a.transpose() * a));
  double tail = 0.0;
  for (Index i = k; i < ev.size(); ++i) tail += std::max(ev[i], 0.0);
  return tail;
}

/// Matrix with prescribed singular values and Haar-random singular vectors.
inline DenseMatrix with_spectrum(Index rows, Index cols, const Vector& sigma, std::uint64_t seed) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qu(Eigen::MatrixXd(random_dense(rows, rows, seed)));
  Eigen::HouseholderQR<Eigen::MatrixXd> qv(Eigen::MatrixXd(random_dense(cols, cols, seed + 7777)));
  const Eigen::MatrixXd u = qu.householderQ();
  const Eigen::MatrixXd v = qv.householderQ();
  DenseMatrix a = DenseMatrix::Zero(rows, cols);
  for (Index i = 0; i < sigma.size(); ++i) a += sigma[i] * u.col(i) * v.col(i).transpose();
  return a;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bkifd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace bkifd::test
