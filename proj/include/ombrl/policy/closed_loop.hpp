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

// Closed-loop policy gradient along a recorded rollout.
//
// Along the rollout, first-order perturbations obey
//
//   dx_{t+1} = A_t dx_t + B_t du_t                              t = 0 .. H-2
//   du_t     = K_t dx_t + sum_k Q_{t,k} du_{t-k} + (du_t/dphi) dphi
//
// where A_t, B_t are Jacobians of the dynamics at the visited (x_t, u_t),
// K_t = d pi / d x_t and Q_{t,k} = d pi / d u_{t-k} (the policy sees its own
// recent actions). Stacking over time, A + B K is strictly block
// sub-diagonal, so (I - (A + B K))^{-1} is a finite sum and the gradient
//
//   grad = dg/dx (I - gamma (A + B K))^{-1} B du/dphi + dg/du|_partial du/dphi
//
// is evaluated by one backward (adjoint) sweep. dg/dx is the total per-step
// sensitivity d c / d x + d c / d u K_t.

#ifndef OMBRL_POLICY_CLOSED_LOOP_HPP_
#define OMBRL_POLICY_CLOSED_LOOP_HPP_

#include <concepts>
#include <utility>
#include <vector>

#include "ombrl/model/dynamics_model.hpp"
#include "ombrl/policy/rollout.hpp"

namespace ombrl {

struct JacobianBundle {
  int state_dim = 0;
  int action_dim = 0;
  int horizon = 0;
  std::vector<Mat> a_blocks;  // H-1 blocks, n x n, block (t+1, t)
  std::vector<Mat> b_blocks;  // H-1 blocks, n x m, block (t+1, t)
  std::vector<Mat> k_blocks;  // H blocks, m x n, block (t, t)
  // history_blocks[t][k-1] = d u_t / d u_{t-k}, m x m; empty if the policy
  // has no action history.
  std::vector<std::vector<Mat>> history_blocks;
  Vec dg_dx;    // nH, total per-step state sensitivity
  Vec dg_du;    // mH, partial cost derivative w.r.t. the applied action
  Mat du_dphi;  // mH x n_phi
  double gamma_discount = 1.0;

  int history() const { return history_blocks.empty() ? 0 : static_cast<int>(history_blocks.front().size()); }
};

// Selects how K blocks are indexed. kShiftedForTesting pairs block t with
// the policy Jacobian of step t+1; it exists only as a negative control for
// the gradient check.
enum class KBlockConvention { kSameStep, kShiftedForTesting };

// Assembles the bundle from a rollout. `dynamics_jacobians(x, u)` returns
// (df/dx, df/du); it is evaluated at the visited states and applied actions.
// Rows of clamped action coordinates are zeroed in K, Q and du/dphi: a
// clamped action does not respond to perturbations.
template <typename DynamicsJacobians>
  requires std::invocable<DynamicsJacobians&, const Vec&, const Vec&>
JacobianBundle assemble_jacobians(DynamicsJacobians&& dynamics_jacobians, const Policy& policy,
                                  const PlantConfig& plant, const RolloutRecord& rec, double gamma = 1.0,
                                  KBlockConvention convention = KBlockConvention::kSameStep) {
  require(rec.valid, "assemble_jacobians: rollout is invalid");
  require(gamma > 0.0 && gamma <= 1.0, "assemble_jacobians: gamma must lie in (0, 1]");
  const PolicyLayout& layout = policy.layout();
  const int n = layout.state_dim, m = layout.action_dim, horizon = rec.length();
  require(horizon >= 1, "assemble_jacobians: empty rollout");
  require(n == state_dim(plant) && m == action_dim(plant), "assemble_jacobians: dimension mismatch");
  const int P = layout.history;

  JacobianBundle b;
  b.state_dim = n;
  b.action_dim = m;
  b.horizon = horizon;
  b.gamma_discount = gamma;
  b.k_blocks.resize(horizon);
  if (P > 0) b.history_blocks.assign(horizon, std::vector<Mat>(P));
  b.dg_dx = Vec::Zero(static_cast<Eigen::Index>(n) * horizon);
  b.dg_du = Vec::Zero(static_cast<Eigen::Index>(m) * horizon);
  b.du_dphi = Mat::Zero(static_cast<Eigen::Index>(m) * horizon, policy.num_params());

  ReferenceTrajectory ref;
  ref.points = rec.references;
  ref.dt = plant.dt;
  const Mat inv_action_scale = layout.action_scale.cwiseInverse().asDiagonal();

  for (int t = 0; t < horizon; ++t) {
    const Vec& x = rec.states[t];
    const PolicyInput in = gather_policy_input(layout, x, ref, t, rec.actions);
    const Policy::Linearization lin = policy.linearize(policy_features(plant, layout, in));
    Mat k = lin.feature_jacobian * policy_feature_state_jacobian(plant, layout, x);
    Mat pj = lin.param_jacobian;
    for (int i = 0; i < m; ++i) {
      if (rec.action_clamped(t, i)) {
        k.row(i).setZero();
        pj.row(i).setZero();
      }
    }
    b.k_blocks[t] = std::move(k);
    b.du_dphi.middleRows(static_cast<Eigen::Index>(m) * t, m) = pj;
    for (int kk = 1; kk <= P; ++kk) {
      Mat q = lin.feature_jacobian.middleCols(layout.history_offset(kk), m) * inv_action_scale;
      for (int i = 0; i < m; ++i)
        if (rec.action_clamped(t, i)) q.row(i).setZero();
      // Actions before the episode start are constants.
      if (t - kk < 0) q.setZero();
      b.history_blocks[t][kk - 1] = std::move(q);
    }
  }

  if (convention == KBlockConvention::kShiftedForTesting) {
    for (int t = 0; t + 1 < horizon; ++t) b.k_blocks[t] = b.k_blocks[t + 1];
  }

  for (int t = 0; t < horizon; ++t) {
    const CostGradient cg = stage_cost_gradient(plant, rec.states[t], rec.actions[t], rec.references[t]);
    b.dg_du.segment(static_cast<Eigen::Index>(m) * t, m) = cg.du;
    b.dg_dx.segment(static_cast<Eigen::Index>(n) * t, n) = cg.dx + b.k_blocks[t].transpose() * cg.du;
  }

  b.a_blocks.reserve(horizon > 0 ? horizon - 1 : 0);
  b.b_blocks.reserve(horizon > 0 ? horizon - 1 : 0);
  for (int t = 0; t + 1 < horizon; ++t) {
    auto [a, bb] = dynamics_jacobians(rec.states[t], rec.actions[t]);
    require(a.rows() == n && a.cols() == n && bb.rows() == n && bb.cols() == m,
            "assemble_jacobians: dynamics Jacobian shape mismatch");
    b.a_blocks.push_back(std::move(a));
    b.b_blocks.push_back(std::move(bb));
  }
  return b;
}

// Bundle with A, B taken from the learned model.
inline JacobianBundle assemble_jacobians(const DynamicsModel& model, const Policy& policy, const PlantConfig& plant,
                                         const RolloutRecord& rec, double gamma = 1.0,
                                         KBlockConvention convention = KBlockConvention::kSameStep) {
  return assemble_jacobians([&model](const Vec& x, const Vec& u) { return model.jacobians(x, u); }, policy, plant,
                            rec, gamma, convention);
}

// Bundle with A, B taken from the true plant (oracle mode, f_theta = f).
inline JacobianBundle assemble_true_jacobians(const Policy& policy, const PlantConfig& plant,
                                              const RolloutRecord& rec, double gamma = 1.0,
                                              KBlockConvention convention = KBlockConvention::kSameStep) {
  return assemble_jacobians(
      [&plant](const Vec& x, const Vec& u) {
        PlantJacobians j = true_jacobians(plant, x, u);
        return std::make_pair(std::move(j.dfdx), std::move(j.dfdu));
      },
      policy, plant, rec, gamma, convention);
}

// Adjoint of the applied-action perturbations, r_t = d g / d(du_t injected),
// stacked over t (length mH). The gradient is du_dphi^T r.
inline Vec action_adjoint(const JacobianBundle& b) {
  const int n = b.state_dim, m = b.action_dim, horizon = b.horizon, P = b.history();
  require(static_cast<int>(b.k_blocks.size()) == horizon, "closed_loop_gradient: K block count mismatch");
  require(static_cast<int>(b.a_blocks.size()) == horizon - 1 && static_cast<int>(b.b_blocks.size()) == horizon - 1,
          "closed_loop_gradient: A/B block count mismatch");
  require(b.dg_dx.size() == static_cast<Eigen::Index>(n) * horizon &&
              b.dg_du.size() == static_cast<Eigen::Index>(m) * horizon,
          "closed_loop_gradient: cost derivative length mismatch");
  Vec r = Vec::Zero(static_cast<Eigen::Index>(m) * horizon);
  Vec x_bar_next = Vec::Zero(n);  // adjoint of x_{t+1}
  for (int t = horizon - 1; t >= 0; --t) {
    Vec s = Vec::Zero(m);
    if (t + 1 < horizon) s += b.b_blocks[t].transpose() * x_bar_next;
    for (int k = 1; k <= P && t + k < horizon; ++k) {
      s += b.history_blocks[t + k][k - 1].transpose() * r.segment(static_cast<Eigen::Index>(m) * (t + k), m);
    }
    r.segment(static_cast<Eigen::Index>(m) * t, m) = b.dg_du.segment(static_cast<Eigen::Index>(m) * t, m) + s;
    Vec propagated = b.k_blocks[t].transpose() * s;
    if (t + 1 < horizon) propagated += b.a_blocks[t].transpose() * x_bar_next;
    x_bar_next = b.dg_dx.segment(static_cast<Eigen::Index>(n) * t, n) + b.gamma_discount * propagated;
  }
  return r;
}

// Model-based estimate of d g / d phi, by a backward sweep in O(H).
inline Vec closed_loop_gradient(const JacobianBundle& b) {
  const Vec r = action_adjoint(b);
  require(b.du_dphi.rows() == r.size(), "closed_loop_gradient: du/dphi row count mismatch");
  return b.du_dphi.transpose() * r;
}

}  // namespace ombrl

#endif  // OMBRL_POLICY_CLOSED_LOOP_HPP_
