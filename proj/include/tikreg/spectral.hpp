#pragma once

// Tikhonov regularization through the singular value decomposition of the
// problem matrix. Every per-alpha quantity is an O(r) sum over filter
// factors once the decomposition is known.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "tikreg/errors.hpp"
#include "tikreg/grid.hpp"

namespace tikreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultRankTolerance = 1e-14;

/// Linear system A u = f. Test problems also carry the exact data f_star
/// and the exact solution u_star.
struct Problem {
  Matrix a;
  Vector f;
  std::optional<Vector> f_star;
  std::optional<Vector> u_star;

  void validate() const {
    if (a.rows() < 1 || a.cols() < 1) throw ConfigError("problem: matrix must be at least 1x1");
    if (f.size() != a.rows()) throw ConfigError("problem: data length must equal the row count");
    if (f_star && f_star->size() != a.rows())
      throw ConfigError("problem: exact data length must equal the row count");
    if (u_star && u_star->size() != a.cols())
      throw ConfigError("problem: exact solution length must equal the column count");
    if (!a.allFinite() || !f.allFinite() || (f_star && !f_star->allFinite()) ||
        (u_star && !u_star->allFinite()))
      throw NumericalError("problem: non-finite entries");
  }

  bool has_exact() const { return f_star.has_value() && u_star.has_value(); }

  double delta_true() const {
    if (!f_star) throw ConfigError("problem: exact data not available");
    return (f - *f_star).norm();
  }
};

/// Operator part of the SVD. Shared between all data vectors of one matrix.
struct Decomposition {
  Vector sigma;          // retained singular values, descending, > 0
  Matrix left;           // m x r
  Matrix right;          // n x r
  Vector full_spectrum;  // every computed singular value, descending
};

/// Scalar per-alpha quantities.
struct SpectralQuantities {
  double norm_u{};
  double residual_norm{};
  double b_residual_norm{};
  double b2_residual_norm{};
  double psi_q{};
};

/// Decomposition plus the coefficients of one data vector.
class SingularSystem {
 public:
  SingularSystem(std::shared_ptr<const Decomposition> decomposition, const Vector& f)
      : dec_(std::move(decomposition)) {
    if (f.size() != dec_->left.rows()) throw ConfigError("singular system: data length mismatch");
    beta_ = dec_->left.transpose() * f;
    // Empty complement when U is square: anything computed there is rounding.
    rho_perp_ = dec_->left.cols() == dec_->left.rows() ? 0.0 : (f - dec_->left * beta_).norm();
    data_norm_ = f.norm();
  }

  SingularSystem with_data(const Vector& f) const { return SingularSystem(dec_, f); }

  const Decomposition& decomposition() const { return *dec_; }
  std::shared_ptr<const Decomposition> shared_decomposition() const { return dec_; }
  const Vector& sigma() const { return dec_->sigma; }
  const Vector& beta() const { return beta_; }
  double rho_perp() const { return rho_perp_; }
  double data_norm() const { return data_norm_; }
  Eigen::Index rank() const { return dec_->sigma.size(); }
  Eigen::Index rows() const { return dec_->left.rows(); }
  Eigen::Index cols() const { return dec_->right.rows(); }

  /// ||A^T A|| = sigma_1^2.
  double lambda_1() const { return sigma()(0) * sigma()(0); }
  /// Smallest positive computed eigenvalue of A^T A. Taken from the full
  /// spectrum, so it can lie below the rank cut.
  double lambda_min() const {
    const Vector& full = dec_->full_spectrum;
    for (Eigen::Index i = full.size(); i-- > 0;) {
      const double l = full(i) * full(i);
      if (l > 0.0) return l;
    }
    return lambda_1();
  }
  /// sigma_r^2 of the last retained triplet.
  double lambda_min_retained() const {
    const double s = sigma()(rank() - 1);
    return s * s;
  }

  /// u_alpha in right singular coordinates: sigma_i beta_i / (alpha + sigma_i^2).
  Vector coefficients(double alpha) const {
    const auto s2 = sigma().array().square();
    return (sigma().array() * beta_.array() / (alpha + s2)).matrix();
  }

  Vector to_domain(const Vector& coeffs) const { return dec_->right * coeffs; }
  Vector project_domain(const Vector& u) const { return dec_->right.transpose() * u; }
  Vector project_range(const Vector& f) const { return dec_->left.transpose() * f; }

  SpectralQuantities quantities(double alpha) const {
    double nu = 0, res = 0, bres = 0, b2res = 0, dq = 0;
    const double rho2 = rho_perp_ * rho_perp_;
    for (Eigen::Index i = 0; i < rank(); ++i) {
      const double s = sigma()(i);
      const double b = beta_(i);
      const double d = alpha + s * s;
      const double damp = alpha / d;   // eigenvalue of alpha (alpha + AA^*)^{-1}
      const double x = s * b / d;      // u_alpha coefficient
      const double r = damp * b;       // residual coefficient (up to sign)
      nu += x * x;
      res += r * r;
      bres += damp * r * r;
      b2res += damp * damp * r * r;
      const double g = x / d;          // coefficient of (alpha + A^*A)^{-2} A^* f
      dq += g * g;
    }
    SpectralQuantities out;
    out.norm_u = std::sqrt(nu);
    out.residual_norm = std::sqrt(res + rho2);
    out.b_residual_norm = std::sqrt(bres + rho2);
    out.b2_residual_norm = std::sqrt(b2res + rho2);
    out.psi_q = alpha * std::sqrt(dq);
    return out;
  }

 private:
  std::shared_ptr<const Decomposition> dec_;
  Vector beta_;
  double rho_perp_{};
  double data_norm_{};
};

/// SVD of the problem matrix. Singular values <= rank_tolerance * sigma_1
/// are dropped; their data components join the orthogonal residual.
inline SingularSystem decompose(const Matrix& a, const Vector& f,
                                double rank_tolerance = kDefaultRankTolerance) {
  if (rank_tolerance < 0) throw ConfigError("decompose: rank tolerance must be >= 0");
  if (a.rows() < 1 || a.cols() < 1) throw ConfigError("decompose: empty matrix");
  if (!a.allFinite() || !f.allFinite())
    throw NumericalError("decompose: non-finite input");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > 0.0) || !s.allFinite())
    throw NumericalError("decompose: matrix has no positive singular value");
  Eigen::Index r = 0;
  const double cut = rank_tolerance * s(0);
  while (r < s.size() && s(r) > cut) ++r;
  auto dec = std::make_shared<Decomposition>();
  dec->sigma = s.head(r);
  dec->left = svd.matrixU().leftCols(r);
  dec->right = svd.matrixV().leftCols(r);
  dec->full_spectrum = s;
  return SingularSystem(std::move(dec), f);
}

inline SingularSystem decompose(const Problem& problem,
                                double rank_tolerance = kDefaultRankTolerance) {
  problem.validate();
  return decompose(problem.a, problem.f, rank_tolerance);
}

struct TikhonovEvaluation {
  double alpha{};
  Vector u_alpha;
  double norm_u{};
  double residual_norm{};
  double b_residual_norm{};
  double b2_residual_norm{};
  double psi_q{};
};

inline void require_positive_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ConfigError("regularization parameter must be positive and finite");
}

inline TikhonovEvaluation evaluate(const SingularSystem& sys, double alpha) {
  require_positive_alpha(alpha);
  const auto q = sys.quantities(alpha);
  TikhonovEvaluation out;
  out.alpha = alpha;
  out.u_alpha = sys.to_domain(sys.coefficients(alpha));
  out.norm_u = q.norm_u;
  out.residual_norm = q.residual_norm;
  out.b_residual_norm = q.b_residual_norm;
  out.b2_residual_norm = q.b2_residual_norm;
  out.psi_q = q.psi_q;
  return out;
}

/// Two-times iterated Tikhonov approximation
/// (alpha I + A^*A)^{-1} (alpha u_alpha + A^* f).
inline Vector iterated2_solution(const SingularSystem& sys, double alpha) {
  require_positive_alpha(alpha);
  const auto s = sys.sigma().array();
  const auto d = alpha + s.square();
  const Vector coeffs = (s * sys.beta().array() * (2.0 * alpha + s.square()) / d.square()).matrix();
  return sys.to_domain(coeffs);
}

/// Exact solution and exact data expressed in the singular basis of a system.
struct ExactReference {
  Vector solution_coeffs;  // V^T u_star
  double solution_null{};  // ||u_star - V V^T u_star||
  Vector data_coeffs;      // U^T f_star
  double delta{};          // ||f - f_star||
};

inline ExactReference make_exact_reference(const SingularSystem& sys, const Vector& u_star,
                                           const Vector& f_star) {
  if (u_star.size() != sys.cols() || f_star.size() != sys.rows())
    throw ConfigError("exact reference: dimension mismatch");
  ExactReference ref;
  ref.solution_coeffs = sys.project_domain(u_star);
  ref.solution_null = (u_star - sys.to_domain(ref.solution_coeffs)).norm();
  ref.data_coeffs = sys.project_range(f_star);
  return ref;
}

inline ExactReference make_exact_reference(const SingularSystem& sys, const Vector& u_star,
                                           const Vector& f_star, const Vector& f) {
  if (f.size() != sys.rows()) throw ConfigError("exact reference: dimension mismatch");
  auto ref = make_exact_reference(sys, u_star, f_star);
  ref.delta = (f - f_star).norm();
  return ref;
}

inline ExactReference make_exact_reference(const SingularSystem& sys, const Problem& problem) {
  if (!problem.has_exact()) throw ConfigError("exact data not available");
  return make_exact_reference(sys, *problem.u_star, *problem.f_star, problem.f);
}

struct ErrorTerms {
  double e_regularization{};  // ||u+_alpha - u_star||
  double e_noise{};           // ||u_alpha - u+_alpha||
  double e1() const { return e_regularization + e_noise; }
};

inline ErrorTerms exact_error_terms(const SingularSystem& sys, const ExactReference& ref,
                                    double alpha) {
  require_positive_alpha(alpha);
  double reg = ref.solution_null * ref.solution_null;
  double noise = 0;
  for (Eigen::Index i = 0; i < sys.rank(); ++i) {
    const double s = sys.sigma()(i);
    const double d = alpha + s * s;
    const double exact = s * ref.data_coeffs(i) / d - ref.solution_coeffs(i);
    const double prop = s * (sys.beta()(i) - ref.data_coeffs(i)) / d;
    reg += exact * exact;
    noise += prop * prop;
  }
  return {std::sqrt(reg), std::sqrt(noise)};
}

inline ErrorTerms exact_error_terms(const SingularSystem& sys, const Vector& u_star,
                                    const Vector& f_star, double alpha) {
  return exact_error_terms(sys, make_exact_reference(sys, u_star, f_star), alpha);
}

/// ||u_alpha - u_star||.
inline double solution_error(const SingularSystem& sys, const ExactReference& ref, double alpha) {
  require_positive_alpha(alpha);
  double acc = ref.solution_null * ref.solution_null;
  for (Eigen::Index i = 0; i < sys.rank(); ++i) {
    const double s = sys.sigma()(i);
    const double d = s * sys.beta()(i) / (alpha + s * s) - ref.solution_coeffs(i);
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// ||u_a - u_b|| without subtracting the two solutions: each coefficient
/// difference is sigma beta (b - a) / ((a + sigma^2)(b + sigma^2)).
inline double solution_distance(const SingularSystem& sys, double a, double b) {
  require_positive_alpha(a);
  require_positive_alpha(b);
  const double gap = b - a;
  double acc = 0;
  for (Eigen::Index i = 0; i < sys.rank(); ++i) {
    const double s = sys.sigma()(i);
    const double s2 = s * s;
    const double v = s * sys.beta()(i) * gap / ((a + s2) * (b + s2));
    acc += v * v;
  }
  return std::sqrt(acc);
}

/// Cached evaluations over a whole parameter grid, indexed by grid position.
struct GridEvaluation {
  ParameterGrid grid;
  std::vector<double> norm_u, residual, b_residual, b2_residual, psi_q;
  std::vector<double> step;  // step[j] = ||u_{alpha_j} - u_{alpha_{j+1}}||, j < M
  Matrix coeffs;  // r x (M+1): column j holds u_{alpha_j} in singular coordinates
  Vector sigma, beta;

  /// ||u_{alpha_i} - u_{alpha_j}||, same closed form as solution_distance.
  double distance(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    const double a = grid[i], b = grid[j], gap = b - a;
    double acc = 0;
    for (Eigen::Index k = 0; k < sigma.size(); ++k) {
      const double s2 = sigma(k) * sigma(k);
      const double v = sigma(k) * beta(k) * gap / ((a + s2) * (b + s2));
      acc += v * v;
    }
    return std::sqrt(acc);
  }
};

inline GridEvaluation evaluate_grid(const SingularSystem& sys, const ParameterGrid& grid) {
  GridEvaluation out;
  out.grid = grid;
  const std::size_t n = grid.size();
  out.norm_u.resize(n);
  out.residual.resize(n);
  out.b_residual.resize(n);
  out.b2_residual.resize(n);
  out.psi_q.resize(n);
  out.step.resize(n - 1);
  out.sigma = sys.sigma();
  out.beta = sys.beta();
  out.coeffs.resize(sys.rank(), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const auto q = sys.quantities(grid[j]);
    out.norm_u[j] = q.norm_u;
    out.residual[j] = q.residual_norm;
    out.b_residual[j] = q.b_residual_norm;
    out.b2_residual[j] = q.b2_residual_norm;
    out.psi_q[j] = q.psi_q;
    out.coeffs.col(static_cast<Eigen::Index>(j)) = sys.coefficients(grid[j]);
    if (j + 1 < n) out.step[j] = solution_distance(sys, grid[j], grid[j + 1]);
  }
  return out;
}

/// Exact-error curves over a grid (test-problem mode).
struct GridErrors {
  std::vector<double> error;  // ||u_alpha - u_star||
  std::vector<double> e1;
  std::vector<double> e_regularization;
  double min_error{};
  double min_e1{};
  std::size_t argmin_error{};
};

inline GridErrors evaluate_errors(const SingularSystem& sys, const ExactReference& ref,
                                  const ParameterGrid& grid) {
  GridErrors out;
  const std::size_t n = grid.size();
  out.error.resize(n);
  out.e1.resize(n);
  out.e_regularization.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto terms = exact_error_terms(sys, ref, grid[j]);
    out.error[j] = solution_error(sys, ref, grid[j]);
    out.e1[j] = terms.e1();
    out.e_regularization[j] = terms.e_regularization;
  }
  out.argmin_error = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (out.error[j] < out.error[out.argmin_error]) out.argmin_error = j;
  out.min_error = out.error[out.argmin_error];
  out.min_e1 = out.e1[0];
  for (double v : out.e1) out.min_e1 = std::min(out.min_e1, v);
  return out;
}

}  // namespace tikreg
