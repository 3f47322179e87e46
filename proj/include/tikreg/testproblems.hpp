#pragma once

// Discretized first-kind integral equations in the style of Hansen's
// Regularization Tools, with solution smoothing, joint normalization and a
// reproducible noise generator.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tikreg/errors.hpp"
#include "tikreg/grid.hpp"
#include "tikreg/spectral.hpp"

namespace tikreg {

inline constexpr std::array<std::string_view, 10> kTestProblemNames = {
    "baart", "deriv2", "foxgood", "gravity", "heat",
    "ilaplace", "phillips", "shaw", "spikes", "wing"};

struct TestProblemSpec {
  std::string name{"shaw"};
  int n{100};
  int p{0};  // solution smoothing exponent: u_star <- |A|^p u_star
  bool normalize{true};
};

/// Raw matrix and exact solution of a test problem, before smoothing.
struct RawTestProblem {
  Matrix a;
  Vector x;
};

namespace kernels {

using std::numbers::pi;

inline RawTestProblem baart(int n) {
  if (n % 2 != 0) throw ConfigError("baart: n must be even");
  // Galerkin with box functions; the t-integrals use Simpson's rule and the
  // s-integrals of exp(s cos t) are exact.
  const double hs = pi / (2.0 * n), ht = pi / n;
  Matrix a(n, n);
  auto cell_integral = [&](int i, double co) {
    const double s0 = i * hs, s1 = (i + 1) * hs;
    if (std::abs(co) < 1e-15) return hs;
    return (std::exp(s1 * co) - std::exp(s0 * co)) / co;
  };
  for (int j = 0; j < n; ++j) {
    const double c0 = std::cos(j * ht), cm = std::cos((j + 0.5) * ht), c1 = std::cos((j + 1) * ht);
    for (int i = 0; i < n; ++i)
      a(i, j) = (ht / 6.0) *
                (cell_integral(i, c0) + 4.0 * cell_integral(i, cm) + cell_integral(i, c1)) /
                std::sqrt(hs * ht);
  }
  Vector x(n);
  for (int j = 0; j < n; ++j) x(j) = (std::cos(j * ht) - std::cos((j + 1) * ht)) / std::sqrt(ht);
  return {a, x};
}

inline RawTestProblem deriv2(int n) {
  // Green's function of the second derivative, example 1 (f(t) = t).
  const double h = 1.0 / n, h2 = h * h;
  Matrix a = Matrix::Zero(n, n);
  for (int i = 1; i <= n; ++i) {
    a(i - 1, i - 1) = h2 * ((i * i - i + 0.25) * h - (i - 2.0 / 3.0));
    for (int j = 1; j < i; ++j) {
      a(i - 1, j - 1) = h2 * (j - 0.5) * ((i - 0.5) * h - 1.0);
      a(j - 1, i - 1) = a(i - 1, j - 1);
    }
  }
  Vector x(n);
  for (int i = 1; i <= n; ++i) x(i - 1) = h * std::sqrt(h) * (i - 0.5);
  return {a, x};
}

inline RawTestProblem foxgood(int n) {
  const double h = 1.0 / n;
  Matrix a(n, n);
  Vector t(n);
  for (int i = 0; i < n; ++i) t(i) = h * (i + 0.5);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = h * std::sqrt(t(i) * t(i) + t(j) * t(j));
  return {a, t};
}

inline RawTestProblem gravity(int n) {
  // Example 1 with depth d = 0.25 on [0, 1].
  const double d = 0.25, dt = 1.0 / n, ds = 1.0 / n;
  Matrix a(n, n);
  Vector x(n);
  for (int i = 0; i < n; ++i) {
    const double s = ds * (i + 0.5);
    for (int j = 0; j < n; ++j) {
      const double t = dt * (j + 0.5);
      a(i, j) = dt * d / std::pow(d * d + (s - t) * (s - t), 1.5);
    }
  }
  for (int j = 0; j < n; ++j) {
    const double t = dt * (j + 0.5);
    x(j) = std::sin(pi * t) + 0.5 * std::sin(2.0 * pi * t);
  }
  return {a, x};
}

inline RawTestProblem heat(int n) {
  if (n % 2 != 0) throw ConfigError("heat: n must be even");
  // Inverse heat equation (Volterra), kappa = 1, midpoint collocation.
  const double kappa = 1.0, h = 1.0 / n;
  const double c = h / (2.0 * kappa * std::sqrt(pi));
  const double d = 1.0 / (4.0 * kappa * kappa);
  Vector k(n);
  for (int i = 0; i < n; ++i) {
    const double t = h / 2.0 + i * h;
    k(i) = c * std::pow(t, -1.5) * std::exp(-d / t);
  }
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = k(i - j);
  Vector x = Vector::Zero(n);
  for (int i = 1; i <= n / 2; ++i) {
    const double ti = i * 20.0 / n;
    if (ti < 2) x(i - 1) = 0.75 * ti * ti / 4.0;
    else if (ti < 3) x(i - 1) = 0.75 + (ti - 2) * (3 - ti);
    else x(i - 1) = 0.75 * std::exp(-(ti - 3) * 2);
  }
  return {a, x};
}

/// Gauss-Laguerre nodes and log-weights for weight exp(-t) on [0, inf).
struct LaguerreRule {
  Vector nodes;
  Vector log_weights;
};

inline LaguerreRule gauss_laguerre(int n) {
  // Nodes from the Jacobi matrix, polished by Newton on L_n; weights from
  // w_i = t_i / ((n+1)^2 L_{n+1}(t_i)^2), kept in log form.
  Matrix jac = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    jac(i, i) = 2.0 * i + 1.0;
    if (i + 1 < n) jac(i, i + 1) = jac(i + 1, i) = i + 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(jac, Eigen::EigenvaluesOnly);
  Vector t = es.eigenvalues();
  auto laguerre = [](int deg, double x, double& prev) {
    double l0 = 1.0, l1 = 1.0 - x;
    if (deg == 0) {
      prev = 0.0;
      return l0;
    }
    for (int k = 1; k < deg; ++k) {
      const double l2 = ((2.0 * k + 1.0 - x) * l1 - k * l0) / (k + 1.0);
      l0 = l1;
      l1 = l2;
    }
    prev = l0;
    return l1;
  };
  for (int i = 0; i < n; ++i) {
    for (int it = 0; it < 3; ++it) {
      double prev = 0;
      const double ln = laguerre(n, t(i), prev);
      const double dln = n * (ln - prev) / t(i);
      if (dln == 0.0) break;
      t(i) -= ln / dln;
    }
  }
  LaguerreRule rule;
  rule.nodes = t;
  rule.log_weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double prev = 0;
    const double l_next = laguerre(n + 1, t(i), prev);
    rule.log_weights(i) =
        std::log(t(i)) - 2.0 * std::log(n + 1.0) - 2.0 * std::log(std::abs(l_next));
  }
  return rule;
}

inline RawTestProblem ilaplace(int n) {
  // Inverse Laplace transform, example 1: f(t) = exp(-t/2).
  const auto rule = gauss_laguerre(n);
  Matrix a(n, n);
  Vector x(n);
  for (int i = 0; i < n; ++i) {
    const double s = 10.0 * (i + 1) / n;
    for (int j = 0; j < n; ++j)
      a(i, j) = std::exp(rule.log_weights(j) + (1.0 - s) * rule.nodes(j));
  }
  for (int j = 0; j < n; ++j) x(j) = std::exp(-rule.nodes(j) / 2.0);
  return {a, x};
}

inline RawTestProblem phillips(int n) {
  if (n % 4 != 0) throw ConfigError("phillips: n must be a multiple of 4");
  // Galerkin with box functions on [-6, 6] for phi(x) = 1 + cos(pi x / 3), |x| < 3.
  const double h = 12.0 / n;
  const int n4 = n / 4;
  auto c = [&](int k) { return std::cos(k * 4.0 * pi / n); };
  Vector r1 = Vector::Zero(n);
  for (int k = 0; k < n4; ++k)
    r1(k) = h + 9.0 / (h * pi * pi) * (2.0 * c(k) - c(k - 1) - c(k + 1));
  r1(n4) = h / 2.0 + 9.0 / (h * pi * pi) * (c(1) - 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = r1(std::abs(i - j));
  auto antiderivative = [](double t) {
    const double u = std::clamp(t, -3.0, 3.0);
    return u + 3.0 / pi * std::sin(pi * u / 3.0);
  };
  Vector x(n);
  for (int j = 0; j < n; ++j) {
    const double t0 = -6.0 + j * h, t1 = t0 + h;
    x(j) = (antiderivative(t1) - antiderivative(t0)) / std::sqrt(h);
  }
  return {a, x};
}

inline RawTestProblem shaw(int n) {
  if (n % 2 != 0) throw ConfigError("shaw: n must be even");
  const double h = pi / n;
  Vector s(n);
  for (int i = 0; i < n; ++i) s(i) = -pi / 2.0 + (i + 0.5) * h;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double cs = std::cos(s(i)) + std::cos(s(j));
      const double u = pi * (std::sin(s(i)) + std::sin(s(j)));
      const double sinc = u == 0.0 ? 1.0 : std::sin(u) / u;
      a(i, j) = a(j, i) = h * cs * cs * sinc * sinc;
    }
  }
  Vector x(n);
  for (int i = 0; i < n; ++i) {
    const double t = s(i);
    x(i) = 2.0 * std::exp(-6.0 * (t - 0.8) * (t - 0.8)) + std::exp(-2.0 * (t + 0.5) * (t + 0.5));
  }
  return {a, x};
}

inline RawTestProblem spikes(int n) {
  // Heat-kernel integral equation on (0, 5] with a pulse-train solution.
  const double t_max = 5.0, del = t_max / n;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    const double tt = del * (i + 1);
    for (int j = 0; j < n; ++j) {
      const double ss = del * (j + 1);
      a(i, j) = del * ss / (2.0 * std::sqrt(pi) * std::pow(tt, 1.5)) * std::exp(-ss * ss / (4.0 * tt));
    }
  }
  Vector x = Vector::Zero(n);
  const int pulses = 5;
  for (int k = 0; k < pulses; ++k) {
    const int idx = static_cast<int>(std::lround((k + 0.5) * n / pulses)) - 1;
    x(std::clamp(idx, 0, n - 1)) = 1.0;
  }
  return {a, x};
}

inline RawTestProblem wing(int n) {
  // K(s,t) = t exp(-s t^2) on [0,1]^2, solution the indicator of (1/3, 2/3).
  const double h = 1.0 / n, t1 = 1.0 / 3.0, t2 = 2.0 / 3.0;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    const double s = h * (i + 0.5);
    for (int j = 0; j < n; ++j) {
      const double lo = h * j, hi = h * (j + 1);
      a(i, j) = (std::exp(-s * lo * lo) - std::exp(-s * hi * hi)) / (2.0 * s);
    }
  }
  Vector x(n);
  for (int j = 0; j < n; ++j) {
    const double t = h * (j + 0.5);
    x(j) = (t > t1 && t < t2) ? 1.0 : 0.0;
  }
  return {a, x};
}

}  // namespace kernels

inline bool is_test_problem(std::string_view name) {
  for (auto p : kTestProblemNames)
    if (p == name) return true;
  return false;
}

inline RawTestProblem raw_test_problem(std::string_view name, int n) {
  if (n < 4) throw ConfigError("test problem: n must be >= 4");
  if (name == "baart") return kernels::baart(n);
  if (name == "deriv2") return kernels::deriv2(n);
  if (name == "foxgood") return kernels::foxgood(n);
  if (name == "gravity") return kernels::gravity(n);
  if (name == "heat") return kernels::heat(n);
  if (name == "ilaplace") return kernels::ilaplace(n);
  if (name == "phillips") return kernels::phillips(n);
  if (name == "shaw") return kernels::shaw(n);
  if (name == "spikes") return kernels::spikes(n);
  if (name == "wing") return kernels::wing(n);
  throw ConfigError("unknown test problem: " + std::string(name));
}

/// Scale A to unit spectral norm and (f_star, u_star) so that ||f_star|| = 1
/// and A u_star = f_star. Idempotent.
inline void normalize_problem(Problem& problem) {
  if (!problem.has_exact()) throw ConfigError("normalize: exact data required");
  Eigen::JacobiSVD<Matrix> svd(problem.a);
  const double s1 = svd.singularValues()(0);
  if (!(s1 > 0)) throw NumericalError("normalize: zero matrix");
  problem.a /= s1;
  Vector f_star = problem.a * *problem.u_star;
  const double fn = f_star.norm();
  if (!(fn > 0)) throw NumericalError("normalize: zero exact data");
  problem.u_star = *problem.u_star / fn;
  problem.f_star = f_star / fn;
  problem.f = *problem.f_star;
}

/// Exact problem: A, f_star = A u_star (noise-free f), smoothed and normalized.
inline Problem generate(const TestProblemSpec& spec) {
  if (spec.p < 0) throw ConfigError("test problem: smoothness p must be >= 0");
  auto raw = raw_test_problem(spec.name, spec.n);
  Problem prob;
  prob.a = std::move(raw.a);
  Vector u = std::move(raw.x);
  if (spec.p > 0) {
    // |A|^p u through the SVD of A scaled to unit norm.
    Eigen::JacobiSVD<Matrix> svd(prob.a, Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const Vector scaled = (s / s(0)).array().pow(static_cast<double>(spec.p)).matrix();
    const Matrix& v = svd.matrixV();
    u = v * scaled.asDiagonal() * (v.transpose() * u);
  }
  prob.u_star = u;
  prob.f_star = prob.a * u;
  prob.f = *prob.f_star;
  if (spec.normalize) normalize_problem(prob);
  return prob;
}

/// Target noise norms and realization count of the synthetic noise.
struct NoiseModel {
  std::vector<double> levels{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  std::uint64_t seed{1};
  int realizations{20};
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Unit-norm Gaussian direction for one realization. Depends only on
/// (seed, realization, length), so every problem and noise level reuses the
/// same directions. mt19937_64 output is fixed by the standard and the
/// normal deviates come from Box-Muller, so the stream is portable.
inline Vector noise_direction(std::uint64_t seed, int realization, Eigen::Index length) {
  std::mt19937_64 gen(detail::splitmix64(seed ^ detail::splitmix64(
                                                    static_cast<std::uint64_t>(realization))));
  auto uniform = [&gen] {
    // (0, 1]: never zero so the logarithm below is finite.
    return (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53;
  };
  Vector e(length);
  for (Eigen::Index i = 0; i < length; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double th = 2.0 * std::numbers::pi * uniform();
    e(i) = r * std::cos(th);
    if (i + 1 < length) e(i + 1) = r * std::sin(th);
  }
  return e / e.norm();
}

/// f = f_star + e with ||e|| equal to the selected noise level.
inline Problem make_noisy(const Problem& exact, const NoiseModel& model, std::size_t level_index,
                          int realization_index) {
  if (!exact.f_star) throw ConfigError("make_noisy: exact data required");
  if (level_index >= model.levels.size()) throw ConfigError("make_noisy: level index out of range");
  if (realization_index < 0 || realization_index >= model.realizations)
    throw ConfigError("make_noisy: realization index out of range");
  const double level = model.levels[level_index];
  if (!(level >= 0)) throw ConfigError("make_noisy: noise level must be >= 0");
  Problem out = exact;
  out.f = *exact.f_star + level * noise_direction(model.seed, realization_index, exact.f_star->size());
  return out;
}

struct LambdaStats {
  double lambda_min{};
  double gap{1.0};  // max lambda_k / lambda_{k+1} over lambda_k > max(alpha_M, lambda_n)
};

/// Same statistic for an explicit descending eigenvalue list.
inline LambdaStats lambda_stats(const std::vector<double>& lambda, double alpha_m,
                                double lambda_min) {
  LambdaStats out;
  out.lambda_min = lambda_min;
  if (lambda.empty()) return out;
  const double lo = std::max(alpha_m, lambda.back());
  for (std::size_t k = 0; k + 1 < lambda.size(); ++k) {
    if (!(lambda[k] > lo)) break;
    if (lambda[k + 1] > 0) out.gap = std::max(out.gap, lambda[k] / lambda[k + 1]);
  }
  return out;
}


/// Eigenvalue statistics of A^T A from the full computed spectrum.
inline LambdaStats lambda_stats(const SingularSystem& sys, const ParameterGrid& grid) {
  const Vector& s = sys.decomposition().full_spectrum;
  std::vector<double> lambda;
  for (Eigen::Index i = 0; i < s.size(); ++i) lambda.push_back(s(i) * s(i));
  return lambda_stats(lambda, grid.alpha_m(), sys.lambda_min());
}

}  // namespace tikreg
