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
#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "ombrl/diagnostics/drift.hpp"
#include "ombrl/diagnostics/gradient_check.hpp"
#include "ombrl/diagnostics/regret.hpp"

namespace ombrl {
namespace {

ReferenceTrajectory some_reference(const PlantConfig& c, int horizon, std::uint64_t seed) {
  Rng rng(seed);
  return sample_reference(c, horizon, horizon / 2, rng);
}

// ------------------------------------------------------- finite differences

TEST(FdGradientTest, InputFreePlantHasZeroGradient) {
  PlantConfig c = make_linear_plant();
  c.b_matrix.setZero();
  c.action_cost_weight = 0.0;
  Rng rng(1);
  const Policy p = make_policy(c, 2, 1, 6, 6, Activation::kTanh, rng);
  const Vec g = fd_policy_gradient(c, p, some_reference(c, 20, 2), 1e-4);
  EXPECT_EQ(g.size(), p.num_params());
  EXPECT_EQ(g.norm(), 0.0);
}

TEST(FdGradientTest, CentralDifferenceErrorShrinksQuadratically) {
  const PlantConfig c = make_pendulum_plant();
  Rng rng(5);
  const Policy p = make_policy(c, 3, 1, 6, 6, Activation::kTanh, rng);
  const ReferenceTrajectory ref = some_reference(c, 40, 6);
  const Vec g1 = fd_policy_gradient(c, p, ref, 1e-2);
  const Vec g2 = fd_policy_gradient(c, p, ref, 5e-3);
  const Vec g3 = fd_policy_gradient(c, p, ref, 2.5e-3);
  const double ratio = (g1 - g2).norm() / (g2 - g3).norm();
  EXPECT_GT(ratio, 3.0);
  EXPECT_LT(ratio, 5.0);
}

TEST(FdGradientTest, ThreadCountDoesNotChangeTheResult) {
  const PlantConfig c = make_pendulum_plant();
  Rng rng(7);
  const Policy p = make_policy(c, 2, 1, 4, 4, Activation::kTanh, rng);
  const ReferenceTrajectory ref = some_reference(c, 20, 8);
  EXPECT_EQ(fd_policy_gradient(c, p, ref, 1e-4, 2000, 1), fd_policy_gradient(c, p, ref, 1e-4, 2000, 3));
}

TEST(FdGradientTest, RefusesPoliciesAboveTheCap) {
  const PlantConfig c = make_pendulum_plant();
  Rng rng(9);
  const Policy p = make_policy(c, 2, 1, 16, 16, Activation::kTanh, rng);
  EXPECT_THROW(fd_policy_gradient(c, p, some_reference(c, 20, 1), 1e-4, 100), ContractError);
}

TEST(GradientErrorTest, Identities) {
  const Vec a = (Vec(3) << 1.0, 2.0, 2.0).finished();
  GradientError e = gradient_error(a, a);
  EXPECT_EQ(e.norm, 0.0);
  EXPECT_EQ(e.relative, 0.0);
  EXPECT_DOUBLE_EQ(e.cosine, 1.0);
  e = gradient_error(-a, a);
  EXPECT_DOUBLE_EQ(e.norm, 6.0);
  EXPECT_DOUBLE_EQ(e.relative, 2.0);
  EXPECT_DOUBLE_EQ(e.cosine, -1.0);
  e = gradient_error(Vec::Zero(3), Vec::Zero(3));
  EXPECT_EQ(e.relative, 0.0);
  EXPECT_EQ(e.cosine, 1.0);
  e = gradient_error(a, Vec::Zero(3));
  EXPECT_TRUE(std::isinf(e.relative));
  EXPECT_THROW(gradient_error(a, Vec::Zero(2)), ContractError);
}

// ------------------------------------------------------------------ drift

std::vector<Transition> gaussian_transitions(int n, double shift, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n01;
  std::vector<Transition> out;
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.x = Vec::NullaryExpr(2, [&] { return n01(rng) + shift; });
    t.u = Vec::NullaryExpr(1, [&] { return n01(rng); });
    t.x_next = t.x + 0.1 * Vec::NullaryExpr(2, [&] { return n01(rng); });
    out.push_back(t);
  }
  return out;
}

TEST(DriftTest, IdenticalSamplesGiveZero) {
  const auto a = gaussian_transitions(200, 0.0, 1);
  EXPECT_EQ(drift_proxy(a, a), 0.0);
}

TEST(DriftTest, IsExactlySymmetric) {
  const auto a = gaussian_transitions(150, 0.0, 2);
  const auto b = gaussian_transitions(170, 0.3, 3);
  EXPECT_EQ(drift_proxy(a, b), drift_proxy(b, a));
}

TEST(DriftTest, GrowsWithMeanShift) {
  const auto base = gaussian_transitions(300, 0.0, 4);
  double prev = -1.0;
  for (double shift : {0.0, 0.5, 1.0, 2.0}) {
    const double d = drift_proxy(base, gaussian_transitions(300, shift, 5));
    EXPECT_GT(d, prev) << "shift " << shift;
    prev = d;
  }
}

TEST(DriftTest, RejectsEmptyInput) {
  const auto a = gaussian_transitions(5, 0.0, 6);
  EXPECT_THROW(drift_proxy(a, std::vector<Transition>{}), ContractError);
}

// ----------------------------------------------------------- log-log slope

TEST(LoglogSlopeTest, RecoversPowerLaws) {
  std::vector<int> t;
  std::vector<double> lin, root;
  for (int i = 0; i < 50; ++i) {
    t.push_back(i);
    lin.push_back(3.0 * (i + 1));
    root.push_back(2.0 * std::sqrt(i + 1.0));
  }
  EXPECT_NEAR(loglog_slope(t, lin, 0, 49).first, 1.0, 1e-12);
  EXPECT_NEAR(loglog_slope(t, root, 10, 49).first, 0.5, 1e-12);
  EXPECT_EQ(loglog_slope(t, root, 10, 49).second, 40);
}

TEST(LoglogSlopeTest, IgnoresNonPositiveEntriesAndNeedsTwoPoints) {
  std::vector<int> t{0, 1, 2, 3};
  std::vector<double> r{-1.0, 0.0, 3.0, 4.0};
  const auto [slope, n] = loglog_slope(t, r, 0, 3);
  EXPECT_EQ(n, 2);
  EXPECT_NEAR(slope, 1.0, 1e-12);
  EXPECT_TRUE(std::isnan(loglog_slope(t, r, 3, 3).first));
}

// ---------------------------------------------------------- policy regret

TrainerConfig linear_run(int episodes, double eta) {
  TrainerConfig c = load_config(std::string(OMBRL_SOURCE_DIR) + "/configs/linear.yaml");
  c.episodes = episodes;
  c.policy.eta = eta;
  c.diagnostics.oracle_every = 0;
  return c;
}

TEST(PolicyRegretTest, FrozenPolicyAgainstItselfIsZero) {
  const TrainerConfig c = linear_run(6, 0.0);
  const Policy start = initial_trainer_state(c).policy;
  const TrainingLog log = run_training(c);
  const RegretReport r = policy_regret(c, log, start, 0, 5);
  ASSERT_EQ(r.instantaneous.size(), 6u);
  for (double v : r.instantaneous) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.total(), 0.0);
}

TEST(PolicyRegretTest, CumulativeIsTheRunningSum) {
  const TrainerConfig c = linear_run(8, 100.0);
  const TrainingLog log = run_training(c);
  const Policy zero_ish = initial_trainer_state(linear_run(8, 0.0)).policy;
  const RegretReport r = policy_regret(c, log, zero_ish, 0, 7);
  double sum = 0.0;
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    EXPECT_EQ(r.episodes[i], static_cast<int>(i));
    sum += r.instantaneous[i];
    EXPECT_EQ(r.cumulative[i], sum);
  }
}

TEST(PolicyRegretTest, MissingReferenceSeedIsAnError) {
  const TrainerConfig c = linear_run(2, 0.0);
  TrainingLog log = run_training(c);
  log[1].reference_seed = 0;
  EXPECT_THROW(policy_regret(c, log, initial_trainer_state(c).policy, 0, 1), ContractError);
}

TEST(PolicyRegretTest, FaultedEpisodesAreSkipped) {
  const TrainerConfig c = linear_run(4, 0.0);
  TrainingLog log = run_training(c);
  log[2].faulted = true;
  const RegretReport r = policy_regret(c, log, initial_trainer_state(c).policy, 0, 3);
  EXPECT_TRUE(r.skipped[2]);
  EXPECT_TRUE(std::isnan(r.instantaneous[2]));
  EXPECT_EQ(r.cumulative[2], r.cumulative[1]);
  EXPECT_TRUE(to_json(r)["episodes"][2]["instantaneous"].is_null());
}

TEST(PolicyRegretTest, NonLearningControlGrowsLinearly) {
  const TrainerConfig learner = linear_run(30, 100.0);
  const PolicyComparator cmp = train_policy_comparator(learner, 2, 5);
  EXPECT_LE(cmp.selection_cost, mean_episode_cost(initial_trainer_state(learner).policy,
                                                  learner.plant, comparator_references(learner)));
  const TrainerConfig control = linear_run(30, 0.0);
  const RegretReport r = policy_regret(control, run_training(control), cmp.policy, 5, 29);
  EXPECT_EQ(r.slope_points, 25);
  EXPECT_NEAR(r.slope, 1.0, 0.15);
}

// ----------------------------------------------------------- model regret

std::vector<Transition> linear_transitions(int n, std::uint64_t seed) {
  const PlantConfig c = make_linear_plant();
  Rng rng(seed);
  std::normal_distribution<double> n01;
  std::vector<Transition> out;
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.x = Vec::NullaryExpr(3, [&] { return n01(rng); });
    t.u = Vec::NullaryExpr(2, [&] { return n01(rng); });
    t.x_next = step(c, t.x, t.u).state;
    out.push_back(t);
  }
  return out;
}

DynamicsModel linear_model(std::uint64_t seed) {
  Rng rng(seed);
  return DynamicsModel(MlpNet::random({5, 3}, Activation::kIdentity, rng), 3, 2, ModelTarget::kAbsolute, 0.01,
                       false);
}

ModelComparatorOptions quick_options() {
  ModelComparatorOptions o;
  o.steps = 200;
  o.check_every = 50;
  o.lr = 1e-2;
  o.batch_size = 32;
  return o;
}

TEST(ModelRegretTest, ExactModelHasNoRegret) {
  DynamicsModel m = linear_model(1);
  const PlantConfig c = make_linear_plant();
  m.net().weight(0).leftCols(3) = c.a_matrix;
  m.net().weight(0).rightCols(2) = c.b_matrix;
  m.net().bias(0).setZero();
  std::vector<ModelSnapshot> snaps;
  for (int e = 0; e < 3; ++e) snaps.push_back({e, m, linear_transitions(30, 10 + e)});
  const RegretReport r = model_regret(snaps, quick_options(), 0, 2);
  for (double v : r.instantaneous) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1e-6);
  }
}

TEST(ModelRegretTest, ComparatorNeverLosesToTheOnlineModel) {
  std::vector<ModelSnapshot> snaps;
  for (int e = 0; e < 4; ++e) snaps.push_back({e, linear_model(20 + e), linear_transitions(25, 30 + e)});
  const RegretReport r = model_regret(snaps, quick_options(), 0, 3);
  for (double v : r.instantaneous) EXPECT_GE(v, 0.0);
  EXPECT_GT(r.total(), 0.0);
}

TEST(ModelRegretTest, TooFewSamplesAreSkipped) {
  std::vector<ModelSnapshot> snaps{{0, linear_model(1), linear_transitions(10, 1)},
                                   {1, linear_model(1), linear_transitions(1, 2)}};
  const RegretReport r = model_regret(snaps, quick_options(), 0, 1);
  EXPECT_FALSE(r.skipped[0]);
  EXPECT_TRUE(r.skipped[1]);
  EXPECT_EQ(r.cumulative[1], r.cumulative[0]);
}

TEST(ModelRegretTest, FrozenModelRegretGrowsLinearly) {
  const DynamicsModel frozen = linear_model(3);
  std::vector<ModelSnapshot> snaps;
  for (int e = 0; e < 20; ++e) snaps.push_back({e, frozen, linear_transitions(40, 100 + e)});
  const RegretReport r = model_regret(snaps, quick_options(), 2, 19);
  EXPECT_NEAR(r.slope, 1.0, 0.15);
  EXPECT_EQ(to_json(r)["lower_bound"], true);
}

}  // namespace
}  // namespace ombrl
