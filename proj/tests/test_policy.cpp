// Copyright 2026 The ombrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gtest/gtest.h"
#include "ombrl/policy/closed_loop.hpp"
#include "ombrl/policy/preconditioner.hpp"
#include "ombrl/policy/rollout.hpp"
#include "ombrl/policy/update.hpp"
#include "support/oracles.hpp"

namespace ombrl {
namespace {

ReferenceTrajectory constant_reference(const Vec& p, int horizon) {
  ReferenceTrajectory r;
  r.points.assign(horizon, p);
  return r;
}

// Central differences of the true episode cost over every policy parameter.
Vec rollout_fd_gradient(const Policy& policy, const PlantConfig& plant, const ReferenceTrajectory& ref, double h) {
  Policy probe = policy;
  return testing::fd_gradient(
      [&](const Vec& p) {
        probe.set_params(p);
        return rollout(probe, plant, ref).episode_cost;
      },
      policy.params(), h);
}

PlantConfig scalar_plant(double a, double b) {
  PlantConfig c = make_linear_plant();
  c.a_matrix = Mat::Constant(1, 1, a);
  c.b_matrix = Mat::Constant(1, 1, b);
  c.state_box = Box::symmetric(Vec::Constant(1, 100.0));
  c.action_box = Box::symmetric(Vec::Constant(1, 100.0));
  c.reference_box = Box::symmetric(Vec::Constant(1, 1.0));
  c.state_scale = c.reference_scale = c.action_scale = Vec::Ones(1);
  return c;
}

TEST(RolloutTest, ZeroPolicyAppliesZeroActions) {
  const PlantConfig c = make_linear_plant();
  Rng rng(1);
  Policy policy = make_policy(c, 3, 1, 8, 8, Activation::kTanh, rng);
  policy.set_params(Vec::Zero(policy.num_params()));
  const ReferenceTrajectory ref = sample_reference(c, 40, 20, rng);
  const RolloutRecord rec = rollout(policy, c, ref);
  ASSERT_EQ(rec.length(), 40);
  Vec x = ref.points[0];
  double g = 0.0;
  for (int t = 0; t < 40; ++t) {
    EXPECT_TRUE(rec.actions[t].isZero(0.0));
    g += (x - ref.points[t]).squaredNorm();
    x = c.a_matrix * x;
  }
  EXPECT_NEAR(rec.episode_cost, g, 1e-12);
}

TEST(RolloutTest, EpisodeCostIsSumOfStageCosts) {
  const PlantConfig c = make_pendulum_plant();
  Rng rng(2);
  const Policy policy = make_policy(c, 4, 2, 8, 8, Activation::kTanh, rng);
  const RolloutRecord rec = rollout(policy, c, sample_reference(c, 60, 30, rng));
  double sum = 0.0;
  for (double v : rec.costs) sum += v;
  EXPECT_EQ(rec.episode_cost, sum);
}

TEST(RolloutTest, HandPlacedStabilizerBeatsZeroPolicy) {
  const PlantConfig c = make_linear_plant();
  PolicyLayout layout = PolicyLayout::for_plant(c, 2, 0);
  MlpNet net({layout.feature_dim(), 2}, Activation::kIdentity);
  net.weight(0).leftCols(3) = -c.b_matrix.completeOrthogonalDecomposition().pseudoInverse() * c.a_matrix;
  const Policy stabilizer(net, layout);
  const Policy zero(MlpNet({layout.feature_dim(), 2}, Activation::kIdentity), layout);
  ReferenceTrajectory ref = constant_reference(Vec::Zero(3), 50);
  ref.points[0] = Vec{{0.8, -0.6, 0.5}};
  EXPECT_LT(rollout(stabilizer, c, ref).episode_cost, rollout(zero, c, ref).episode_cost);
}

TEST(RolloutTest, SeededNoiseIsReproducible) {
  PlantConfig c = make_pendulum_plant();
  c.process_noise_std = 0.01;
  Rng rng(3);
  const Policy policy = make_policy(c, 4, 2, 8, 8, Activation::kTanh, rng);
  const ReferenceTrajectory ref = sample_reference(c, 50, 25, rng);
  Rng a(4), b(4);
  const RolloutRecord x = rollout(policy, c, ref, &a), y = rollout(policy, c, ref, &b);
  for (int t = 0; t <= 50; ++t) EXPECT_EQ(x.states[t], y.states[t]);
}

TEST(RolloutTest, ClampedActionsAreFlagged) {
  const PlantConfig c = make_pendulum_plant();
  PolicyLayout layout = PolicyLayout::for_plant(c, 1, 0);
  MlpNet net({layout.feature_dim(), 1}, Activation::kIdentity);
  net.bias(0)[0] = 100.0;
  const RolloutRecord rec = rollout(Policy(net, layout), c, constant_reference(Vec::Zero(2), 5));
  EXPECT_TRUE(rec.any_action_clamped());
  EXPECT_EQ(rec.actions[0][0], c.action_box.upper[0]);
}

TEST(BundleTest, SingleStepHasNoDynamicsBlocks) {
  const PlantConfig c = make_linear_plant();
  Rng rng(5);
  const Policy policy = make_policy(c, 2, 1, 4, 4, Activation::kTanh, rng);
  const JacobianBundle b = assemble_true_jacobians(policy, c, rollout(policy, c, constant_reference(Vec::Ones(3), 1)));
  EXPECT_TRUE(b.a_blocks.empty());
  EXPECT_TRUE(b.b_blocks.empty());
  EXPECT_EQ(b.k_blocks.size(), 1u);
  EXPECT_EQ(b.du_dphi.rows(), 2);
  EXPECT_EQ(closed_loop_gradient(b), b.du_dphi.transpose() * b.dg_du);
}

TEST(BundleTest, LinearPolicyOnLinearPlantGivesConstantBlocks) {
  const PlantConfig c = make_linear_plant();
  PolicyLayout layout = PolicyLayout::for_plant(c, 2, 0);
  MlpNet net({layout.feature_dim(), 2}, Activation::kIdentity);
  Rng rng(6);
  const Mat k = testing::random_matrix(2, 3, rng, 0.3);
  net.weight(0).leftCols(3) = k;
  const Policy policy(net, layout);
  const RolloutRecord rec = rollout(policy, c, sample_reference(c, 20, 10, rng));
  const JacobianBundle b = assemble_true_jacobians(policy, c, rec);
  for (int t = 0; t < 19; ++t) {
    EXPECT_EQ(b.a_blocks[t], c.a_matrix);
    EXPECT_EQ(b.b_blocks[t], c.b_matrix);
  }
  for (int t = 0; t < 20; ++t) EXPECT_LT((b.k_blocks[t] - k).norm(), 1e-15);
}

TEST(BundleTest, ClosedLoopMatrixIsNilpotent) {
  std::mt19937_64 rng(7);
  for (int h : {1, 2, 5, 12}) {
    const JacobianBundle b = testing::random_bundle(3, 2, h, 4, 0, 1.0, rng);
    const testing::DenseBundle d = testing::densify(b);
    const Mat n = d.a + d.b * d.k;
    Mat power = Mat::Identity(n.rows(), n.cols());
    for (int k = 0; k < h; ++k) power = power * n;
    EXPECT_TRUE(power.isZero(0.0)) << "H = " << h;
  }
}

TEST(GradientTest, ZeroCostSensitivityGivesZeroGradient) {
  std::mt19937_64 rng(8);
  JacobianBundle b = testing::random_bundle(3, 2, 6, 5, 2, 1.0, rng);
  b.dg_dx.setZero();
  b.dg_du.setZero();
  EXPECT_TRUE(closed_loop_gradient(b).isZero(0.0));
}

TEST(GradientTest, HandExpandedScalarTwoStep) {
  // x1 = a x0 + b u0, u_t = k_t x_t + J_t dphi; cost sensitivities d0, d1.
  const double a = 0.7, bb = 0.4, k0 = -0.3, k1 = 0.9, d0 = 1.3, d1 = -0.8;
  JacobianBundle b;
  b.state_dim = b.action_dim = 1;
  b.horizon = 2;
  b.a_blocks = {Mat::Constant(1, 1, a)};
  b.b_blocks = {Mat::Constant(1, 1, bb)};
  b.k_blocks = {Mat::Constant(1, 1, k0), Mat::Constant(1, 1, k1)};
  b.dg_dx = Vec{{d0, d1}};
  b.dg_du = Vec::Zero(2);
  b.du_dphi = Mat{{0.5, -1.5, 2.0}, {0.25, 3.0, -1.0}};
  // Neumann: (I - N)^{-1} = I + N, N = [[0, 0], [a + b k0, 0]]; (I + N) B has a
  // single entry b at (1, 0), so only u0's parameter row reaches the cost.
  const Vec expected = d1 * bb * b.du_dphi.row(0).transpose();
  EXPECT_LT((closed_loop_gradient(b) - expected).norm(), 1e-15);
  EXPECT_LT((testing::dense_closed_loop_gradient(b) - expected).norm(), 1e-15);
}

TEST(GradientTest, MatchesDenseInverseWithDiscount) {
  std::mt19937_64 rng(9);
  for (double gamma : {1.0, 0.9, 0.5}) {
    const JacobianBundle b = testing::random_bundle(4, 2, 10, 7, 0, gamma, rng);
    EXPECT_LT(testing::relative_error(closed_loop_gradient(b), testing::dense_closed_loop_gradient(b)), 1e-10);
  }
}

TEST(GradientTest, MatchesJointSystemWithActionHistory) {
  std::mt19937_64 rng(10);
  for (int history : {1, 2, 3}) {
    const JacobianBundle b = testing::random_bundle(3, 2, 12, 6, history, 1.0, rng);
    EXPECT_LT(testing::relative_error(closed_loop_gradient(b), testing::dense_joint_gradient(b)), 1e-10);
  }
}

TEST(GradientTest, OracleModeMatchesTrueClosedLoop) {
  const PlantConfig c = make_linear_plant();
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(seed);
    const Policy policy = make_policy(c, 10, 2, 8, 8, Activation::kTanh, rng);
    ASSERT_LE(policy.num_params(), 500);
    const ReferenceTrajectory ref = sample_reference(c, 25, 25, rng);
    const Vec est = closed_loop_gradient(assemble_true_jacobians(policy, c, rollout(policy, c, ref)));
    EXPECT_LT(testing::relative_error(est, rollout_fd_gradient(policy, c, ref, 1e-6)), 1e-5) << "seed " << seed;
  }
}

TEST(GradientTest, OracleModeWithActionPenaltyOnPendulum) {
  PlantConfig c = make_pendulum_plant();
  c.action_cost_weight = 0.01;
  Rng rng(11);
  const Policy policy = make_policy(c, 5, 2, 6, 6, Activation::kTanh, rng);
  const ReferenceTrajectory ref = sample_reference(c, 30, 15, rng);
  const RolloutRecord rec = rollout(policy, c, ref);
  ASSERT_FALSE(rec.any_action_clamped());
  // FD plant Jacobians carry ~1e-9 error, so the match is looser here.
  const Vec est = closed_loop_gradient(assemble_true_jacobians(policy, c, rec));
  EXPECT_LT(testing::relative_error(est, rollout_fd_gradient(policy, c, ref, 1e-6)), 1e-4);
}

TEST(GradientTest, ShiftedKConventionBreaksOracle) {
  const PlantConfig c = make_linear_plant();
  Rng rng(12);
  const Policy policy = make_policy(c, 10, 2, 8, 8, Activation::kTanh, rng);
  const ReferenceTrajectory ref = sample_reference(c, 25, 25, rng);
  const RolloutRecord rec = rollout(policy, c, ref);
  const Vec bad =
      closed_loop_gradient(assemble_true_jacobians(policy, c, rec, 1.0, KBlockConvention::kShiftedForTesting));
  EXPECT_GT(testing::relative_error(bad, rollout_fd_gradient(policy, c, ref, 1e-6)), 1e-3);
}

TEST(PreconditionerTest, ZeroGradientSolvesToZero) {
  std::mt19937_64 rng(13);
  const Mat j = testing::random_matrix(6, 20, rng);
  EXPECT_TRUE(preconditioner_solve(Vec::Zero(20), j, 0.5, 0.1).isZero(0.0));
}

TEST(PreconditionerTest, RankOneShermanMorrison) {
  std::mt19937_64 rng(14);
  const Vec g = testing::random_vector(30, rng);
  const double eps = 0.3;
  const Vec expected = g / (g.squaredNorm() + eps);
  EXPECT_LT(testing::relative_error(preconditioner_solve(g, testing::random_matrix(4, 30, rng), 0.0, eps), expected),
            1e-13);
}

TEST(PreconditionerTest, MatchesDenseSolveAndSpectrum) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec g = testing::random_vector(40, rng);
    const Mat j = testing::random_matrix(6, 40, rng);
    const double alpha = 0.1 + trial * 0.2, eps = 1e-2 * (trial + 1);
    const Mat dense = testing::dense_preconditioner(g, j, alpha, eps);
    const LowRankPreconditioner pre(g, j, alpha, eps);
    EXPECT_LT(testing::relative_error(pre.solve(g), dense.ldlt().solve(g)), 1e-10);
    const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(dense).eigenvalues();
    EXPECT_LT(std::abs(pre.lambda_min() - ev.minCoeff()) / ev.minCoeff(), 1e-10);
    EXPECT_LT(std::abs(pre.lambda_max() - ev.maxCoeff()) / ev.maxCoeff(), 1e-10);
  }
}

TEST(PreconditionerTest, SpectrumClosedForms) {
  std::mt19937_64 rng(16);
  const Mat j = testing::random_matrix(3, 10, rng);
  auto [lo, hi] = preconditioner_spectrum(j, Vec::Zero(10), 0.0, 0.25);
  EXPECT_EQ(lo, 0.25);
  EXPECT_EQ(hi, 0.25);
  const Vec g = testing::random_vector(10, rng);
  std::tie(lo, hi) = preconditioner_spectrum(j, g, 0.0, 0.25);
  EXPECT_EQ(lo, 0.25);
  EXPECT_NEAR(hi, g.squaredNorm() + 0.25, 1e-13);
}

TEST(PreconditionerTest, FullRankFactorRaisesLambdaMin) {
  std::mt19937_64 rng(17);
  const Vec g = testing::random_vector(5, rng);
  const Mat j = testing::random_matrix(6, 5, rng);
  const LowRankPreconditioner pre(g, j, 1.0, 0.1);
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(testing::dense_preconditioner(g, j, 1.0, 0.1)).eigenvalues();
  EXPECT_NEAR(pre.lambda_min(), ev.minCoeff(), 1e-12);
  EXPECT_GT(pre.lambda_min(), 0.1);
}

TEST(PreconditionerTest, LargeEpsilonTendsToScaledGradient) {
  std::mt19937_64 rng(18);
  const Vec g = testing::random_vector(40, rng);
  const Mat j = testing::random_matrix(6, 40, rng);
  double previous = INFINITY;
  for (double eps : {1e2, 1e4, 1e6}) {
    const double err = testing::relative_error(eps * preconditioner_solve(g, j, 0.5, eps), g);
    EXPECT_LT(err, previous);
    previous = err;
  }
  EXPECT_LT(previous, 1e-4);
}

TEST(PreconditionerTest, RejectsNonPositiveEpsilon) {
  EXPECT_THROW(LowRankPreconditioner(Vec::Ones(3), Mat::Ones(1, 3), 0.0, 0.0), ContractError);
  EXPECT_THROW(LowRankPreconditioner(Vec::Ones(3), Mat::Ones(1, 3), -1.0, 1.0), ContractError);
}

TEST(PolicyUpdateTest, ZeroGradientLeavesPolicy) {
  const PlantConfig c = make_linear_plant();
  Rng rng(19);
  Policy policy = make_policy(c, 2, 1, 4, 4, Activation::kTanh, rng);
  const Vec before = policy.params();
  policy_update(policy, Vec::Zero(policy.num_params()), Mat::Ones(4, policy.num_params()), {0.5, 0.1, 0.01});
  EXPECT_EQ(policy.params(), before);
}

TEST(PolicyUpdateTest, StepNormBoundedByEpsilon) {
  const PlantConfig c = make_linear_plant();
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 20; ++trial) {
    Policy policy = make_policy(c, 2, 1, 4, 4, Activation::kTanh, rng);
    const Vec g = testing::random_vector(policy.num_params(), rng, 10.0);
    const Mat j = testing::random_matrix(8, policy.num_params(), rng);
    const PolicyUpdateOptions opt{0.3, 0.2, 0.05};
    const PolicyUpdateResult r = policy_update(policy, g, j, opt);
    EXPECT_LE(r.step_norm, opt.eta * g.norm() / r.lambda_min * (1 + 1e-12));
    EXPECT_LE(r.step_norm, opt.eta * g.norm() / opt.epsilon * (1 + 1e-12));
    EXPECT_GE(r.lambda_min, opt.epsilon);
  }
}

TEST(PolicyUpdateTest, ProjectionClipsToParameterBox) {
  const PlantConfig c = make_linear_plant();
  Rng rng(21);
  Policy policy = make_policy(c, 2, 1, 4, 4, Activation::kTanh, rng);
  PolicyUpdateOptions opt{100.0, 0.0, 1e-3};
  opt.param_bound = 0.5;
  policy_update(policy, Vec::Ones(policy.num_params()), Mat::Zero(2, policy.num_params()), opt);
  EXPECT_LE(policy.params().cwiseAbs().maxCoeff(), 0.5);
}

TEST(PolicyUpdateTest, NonFiniteGradientSkipped) {
  const PlantConfig c = make_linear_plant();
  Rng rng(22);
  Policy policy = make_policy(c, 2, 1, 4, 4, Activation::kTanh, rng);
  const Vec before = policy.params();
  Vec g = Vec::Ones(policy.num_params());
  g[0] = NAN;
  EXPECT_EQ(policy_update(policy, g, Mat::Zero(2, g.size()), {}).status, StepStatus::kNumericFault);
  EXPECT_EQ(policy.params(), before);
}

TEST(PolicyUpdateTest, SmallStepDescendsOnScalarTwoStepSystem) {
  const PlantConfig c = scalar_plant(0.9, 0.5);
  Rng rng(23);
  Policy policy = make_policy(c, 1, 1, 3, 3, Activation::kTanh, rng);
  ReferenceTrajectory ref = constant_reference(Vec::Constant(1, 0.8), 2);
  ref.points[0] = Vec::Constant(1, 0.2);
  const RolloutRecord rec = rollout(policy, c, ref);
  const JacobianBundle b = assemble_true_jacobians(policy, c, rec);
  const Vec g = closed_loop_gradient(b);
  ASSERT_GT(g.norm(), 1e-6);
  policy_update(policy, g, b.du_dphi, {1e-3, 0.1, 1.0});
  EXPECT_LT(rollout(policy, c, ref).episode_cost, rec.episode_cost);
}

TEST(EtaScheduleTest, InverseSqrtDecay) {
  EXPECT_EQ(eta_at(0.4, EtaSchedule::kConstant, 99), 0.4);
  EXPECT_DOUBLE_EQ(eta_at(0.4, EtaSchedule::kInverseSqrt, 3), 0.2);
  EXPECT_EQ(parse_eta_schedule("inverse_sqrt"), EtaSchedule::kInverseSqrt);
  EXPECT_THROW(parse_eta_schedule("cosine"), ContractError);
}

}  // namespace
}  // namespace ombrl
