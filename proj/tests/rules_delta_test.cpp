#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dense_oracle.hpp"
#include "tikreg/analysis.hpp"
#include "tikreg/rules_delta.hpp"
#include "tikreg/testproblems.hpp"

using namespace tikreg;

TEST(DValue, DiscrepancyOnIdentity) {
  Vector f(2);
  f << 1, 0;
  const auto sys = decompose(Matrix::Identity(2, 2), f);
  EXPECT_NEAR(d_value(DeltaRule::dp, sys, 1.0, 0.95), 0.5, 1e-15);
}

TEST(DValue, R1IsSqrtAlphaTimesPsiQ) {
  // Square, so A^T has no null space to cancel in the dense form.
  std::mt19937_64 gen(41);
  const Matrix a = oracle::random_matrix(gen, 8, 8);
  const Vector f = oracle::random_vector(gen, 8);
  const auto sys = decompose(a, f);
  std::uniform_real_distribution<double> ex(-6, 1);
  for (int k = 0; k < 20; ++k) {
    const double alpha = std::pow(10.0, ex(gen));
    // Dense form: alpha^{-1/2} ||A^T B^2 (A u - f)||.
    const Matrix b = oracle::b_operator(a, alpha);
    const Vector r = oracle::residual(a, f, alpha);
    const double dense = (a.transpose() * (b * (b * r))).norm() / std::sqrt(alpha);
    const double d = d_value(DeltaRule::r1, sys, alpha, 0.95);
    EXPECT_NEAR(d / (std::sqrt(alpha) * oracle::psi_q(a, f, alpha)), 1.0, 1e-9);
    EXPECT_NEAR(d / dense, 1.0, 1e-8);
  }
}

TEST(DValue, BalancingOnIdentity) {
  Vector f(2);
  f << 0.6, 0.8;
  const auto sys = decompose(Matrix::Identity(2, 2), f);
  const double q = 0.95, a = 1.0;
  const double expect = std::sqrt(a) * std::sqrt(q) * a / ((1 + a) * (q + a));
  EXPECT_NEAR(d_value(DeltaRule::bal, sys, a, q), expect, 1e-14);
  EXPECT_THROW(d_value(DeltaRule::bal, sys, a, 1.5), ConfigError);
}

TEST(DValue, MeMatchesDenseRatio) {
  std::mt19937_64 gen(43);
  const Matrix a = oracle::random_matrix(gen, 6, 6);
  const Vector f = oracle::random_vector(gen, 6);
  const auto sys = decompose(a, f);
  const double alpha = 0.02;
  const Matrix b = oracle::b_operator(a, alpha);
  const Vector r = oracle::residual(a, f, alpha);
  const double br = (b * r).norm(), b2r = (b * (b * r)).norm();
  EXPECT_NEAR(d_value(DeltaRule::me, sys, alpha, 0.95), br * br / b2r, 1e-9 * br * br / b2r);
  EXPECT_NEAR(d_value(DeltaRule::mdp, sys, alpha, 0.95), br, 1e-9 * br);
}

TEST(DValue, ProfileAgreesWithPointwise) {
  std::mt19937_64 gen(47);
  const Matrix a = oracle::random_matrix(gen, 6, 5);
  const Vector f = oracle::random_vector(gen, 6);
  const auto sys = decompose(a, f);
  const auto grid = ParameterGrid::with_steps(1.0, 0.8, 30);
  const auto ge = evaluate_grid(sys, grid);
  for (DeltaRule r : {DeltaRule::dp, DeltaRule::mdp, DeltaRule::me, DeltaRule::r1, DeltaRule::bal}) {
    const auto d = delta_profile(r, sys, ge);
    for (std::size_t j = 0; j < grid.size(); ++j)
      EXPECT_NEAR(d[j], d_value(r, sys, grid[j], grid.q()), 1e-10 * (1 + d[j]));
  }
}

TEST(DeltaRuleSpec, FloorsEnforced) {
  EXPECT_THROW((DeltaRuleSpec{DeltaRule::dp, 0.9, 1.0, 0.1}.validate()), ConfigError);
  EXPECT_THROW((DeltaRuleSpec{DeltaRule::r1, 0.3, 1.0, 0.1}.validate()), ConfigError);
  EXPECT_NO_THROW((DeltaRuleSpec{DeltaRule::r1, 0.325, 1.0, 0.1}.validate()));
  EXPECT_THROW((DeltaRuleSpec{DeltaRule::bal, 0.45, 1.0, 0.1}.validate()), ConfigError);
  EXPECT_NO_THROW((DeltaRuleSpec{DeltaRule::bal, 0.46, 1.0, 0.1}.validate()));
  EXPECT_THROW((DeltaRuleSpec{DeltaRule::me, 1.2, 1.1, 0.1}.validate()), ConfigError);
  EXPECT_NEAR(delta_rule_floor(DeltaRule::bal), 0.459, 1e-3);
}

TEST(ChooseDelta, DiscrepancyOnIdentityHitsScalarRoot) {
  const std::size_t n = 50;
  std::mt19937_64 gen(53);
  const Vector f_star = oracle::random_vector(gen, n).normalized();
  const double delta = 0.05;
  const Vector f = f_star + delta * oracle::random_vector(gen, n).normalized();
  const auto sys = decompose(Matrix::Identity(n, n), f);
  const ParameterGrid grid;
  const auto c = choose_delta_parameter({DeltaRule::dp, 1.0, 1.0, delta}, sys, grid);
  ASSERT_FALSE(c.saturated);
  const double root = delta / (f.norm() - delta);
  // Largest grid alpha with d <= delta: within one grid step below the root.
  EXPECT_LE(c.alpha, root * (1 + 1e-12));
  EXPECT_GT(c.alpha, root * grid.q() * (1 - 1e-12));
}

TEST(ChooseDelta, SaturatesWhenNoiseExceedsEveryD) {
  Vector f(2);
  f << 1, 0;
  const auto sys = decompose(Matrix::Identity(2, 2), f);
  const ParameterGrid grid;
  // Discrepancy never exceeds ||f|| = 1: everything is admissible, alpha0 saturated.
  const auto c = choose_delta_parameter({DeltaRule::dp, 1.0, 1.0, 5.0}, sys, grid);
  EXPECT_TRUE(c.saturated);
  EXPECT_EQ(c.alpha, grid.alpha0());
  // R1 d never reaches b1 delta: no admissible crossing, alpha_M.
  const auto r = choose_delta_parameter({DeltaRule::r1, 1.0, 1.0, 5.0}, sys, grid);
  EXPECT_TRUE(r.saturated);
  EXPECT_EQ(r.alpha, grid.alpha_m());
}

TEST(ChooseDelta, RejectsZeroNoise) {
  const auto sys = decompose(Matrix::Identity(2, 2), Vector::Ones(2));
  EXPECT_THROW(choose_delta_parameter({DeltaRule::dp, 1.0, 1.0, 0.0}, sys, ParameterGrid{}),
               ConfigError);
}

TEST(ChooseDelta, MeePostEstimate) {
  const auto exact = generate({"shaw", 100, 0, true});
  const auto noisy = make_noisy(exact, NoiseModel{}, 1, 0);
  const auto sys = decompose(noisy);
  const ParameterGrid grid;
  const double delta = noisy.delta_true();
  const auto me = choose_delta_parameter({DeltaRule::me, 1.0, 1.0, delta}, sys, grid);
  const auto mee = choose_delta_parameter({DeltaRule::mee, 1.0, 1.0, delta}, sys, grid);
  EXPECT_NEAR(mee.alpha, 0.4 * me.alpha, 1e-15 * me.alpha);
  EXPECT_FALSE(mee.grid_index.has_value());
}

TEST(ChooseDelta, R1ScanRespectsBand) {
  const auto exact = generate({"phillips", 100, 0, true});
  const auto noisy = make_noisy(exact, NoiseModel{}, 2, 3);
  const auto sys = decompose(noisy);
  const ParameterGrid grid;
  const double delta = noisy.delta_true();
  const DeltaRuleSpec spec{DeltaRule::r1, 0.5, 1.0, delta};
  const auto ge = evaluate_grid(sys, grid);
  const auto d = delta_profile(DeltaRule::r1, sys, ge);
  const auto c = choose_delta_parameter(spec, d, grid);
  ASSERT_FALSE(c.saturated);
  const std::size_t k = *c.grid_index;
  EXPECT_GE(d[k], spec.b1 * delta);
  for (std::size_t j = k; j < grid.size(); ++j) EXPECT_LE(d[j], spec.b2 * delta);
  // No larger grid alpha satisfies both parts.
  for (std::size_t i = 0; i < k; ++i) {
    bool ok = d[i] >= spec.b1 * delta;
    for (std::size_t j = i; j < grid.size() && ok; ++j) ok = d[j] <= spec.b2 * delta;
    EXPECT_FALSE(ok) << i;
  }
}

TEST(ChooseDelta, MeeOnShawAverageErrorRatio) {
  const auto exact = generate({"shaw", 100, 0, true});
  NoiseModel noise;
  noise.levels = {1e-2};
  const ParameterGrid grid;
  double sum = 0;
  for (int r = 0; r < noise.realizations; ++r) {
    const auto noisy = make_noisy(exact, noise, 0, r);
    const auto sys = decompose(noisy);
    const auto ref = make_exact_reference(sys, noisy);
    const auto errs = evaluate_errors(sys, ref, grid);
    const auto c = choose_delta_parameter({DeltaRule::mee, 1.0, 1.0, noisy.delta_true()}, sys, grid);
    sum += solution_error(sys, ref, c.alpha) / errs.min_error;
  }
  const double avg = sum / noise.realizations;
  EXPECT_GE(avg, 1.0);
  EXPECT_LE(avg, 2.0);
}

class DeltaInvariants : public ::testing::TestWithParam<std::string> {};

TEST_P(DeltaInvariants, DiscrepancyDominatesModified) {
  const auto exact = generate({GetParam(), 100, 0, true});
  const auto noisy = make_noisy(exact, NoiseModel{}, 2, 2);
  const auto sys = decompose(noisy);
  const auto ge = evaluate_grid(sys, ParameterGrid{});
  const auto dp = delta_profile(DeltaRule::dp, sys, ge);
  const auto mdp = delta_profile(DeltaRule::mdp, sys, ge);
  for (std::size_t j = 0; j < dp.size(); ++j) EXPECT_GE(dp[j] * (1 + 1e-14), mdp[j]);
}

TEST_P(DeltaInvariants, MeAboveOptimumAndErrorMonotoneAbove) {
  const auto exact = generate({GetParam(), 100, 0, true});
  const ParameterGrid grid;
  for (std::size_t level : {0u, 2u, 4u}) {
    const auto noisy = make_noisy(exact, NoiseModel{}, level, 5);
    const auto sys = decompose(noisy);
    const auto ref = make_exact_reference(sys, noisy);
    const auto errs = evaluate_errors(sys, ref, grid);
    const auto c =
        choose_delta_parameter({DeltaRule::me, 1.0, 1.0, noisy.delta_true()}, sys, grid);
    const std::size_t me = *c.grid_index;
    // alpha_ME >= alpha_opt within one grid step.
    EXPECT_LE(me, errs.argmin_error + 1) << "level " << level;
    for (std::size_t j = 0; j + 2 <= me; ++j)
      EXPECT_GE(errs.error[j], errs.error[j + 1] * (1 - 1e-10)) << "level " << level << " j " << j;
  }
}

INSTANTIATE_TEST_SUITE_P(All, DeltaInvariants,
                         ::testing::Values("baart", "deriv2", "foxgood", "gravity", "heat",
                                           "ilaplace", "phillips", "shaw", "spikes", "wing"));
