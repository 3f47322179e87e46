#pragma once

// Direct dense computations used as independent references in tests. Nothing
// here goes through the singular system.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_matrix(std::mt19937_64& gen, Eigen::Index m, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Matrix a(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = nd(gen);
  return a;
}

inline Vector random_vector(std::mt19937_64& gen, Eigen::Index m) {
  std::normal_distribution<double> nd;
  Vector v(m);
  for (Eigen::Index i = 0; i < m; ++i) v(i) = nd(gen);
  return v;
}

/// u_alpha from (alpha I + A^T A) u = A^T f.
inline Vector tikhonov(const Matrix& a, const Vector& f, double alpha) {
  const Matrix g = alpha * Matrix::Identity(a.cols(), a.cols()) + a.transpose() * a;
  return g.ldlt().solve(a.transpose() * f);
}

/// A u_alpha - f = -alpha (alpha I + A A^T)^{-1} f, solved directly.
inline Vector residual(const Matrix& a, const Vector& f, double alpha) {
  const Matrix g = alpha * Matrix::Identity(a.rows(), a.rows()) + a * a.transpose();
  return -alpha * g.ldlt().solve(f);
}

/// B_alpha = alpha^{1/2} (alpha I + A A^T)^{-1/2}, built from an
/// eigendecomposition of A A^T.
inline Matrix b_operator(const Matrix& a, double alpha) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a * a.transpose());
  Vector d = es.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    d(i) = std::sqrt(alpha / (alpha + std::max(d(i), 0.0)));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// psi_Q(alpha) = alpha ||(alpha I + A^T A)^{-2} A^T f||.
inline double psi_q(const Matrix& a, const Vector& f, double alpha) {
  const Matrix g = alpha * Matrix::Identity(a.cols(), a.cols()) + a.transpose() * a;
  const auto ldlt = g.ldlt();
  return alpha * ldlt.solve(ldlt.solve(a.transpose() * f)).norm();
}

inline double rel_diff(double x, double y) {
  const double s = std::max(std::abs(x), std::abs(y));
  return s == 0 ? 0 : std::abs(x - y) / s;
}

}  // namespace oracle
