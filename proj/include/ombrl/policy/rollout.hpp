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

#ifndef OMBRL_POLICY_ROLLOUT_HPP_
#define OMBRL_POLICY_ROLLOUT_HPP_

#include <vector>

#include "ombrl/policy/policy.hpp"

namespace ombrl {

struct RolloutRecord {
  std::vector<Vec> states;       // x_0 .. x_H (fewer if faulted)
  std::vector<Vec> actions;      // applied (clamped) u_0 .. u_{H-1}
  std::vector<Vec> raw_actions;  // policy outputs before clamping
  std::vector<Vec> references;   // ref_0 .. ref_{H-1}
  std::vector<double> costs;     // c_0 .. c_{H-1}
  std::vector<char> state_clamped;
  double episode_cost = 0.0;     // g = sum of costs
  bool valid = true;
  int horizon = 0;               // requested horizon

  int length() const { return static_cast<int>(actions.size()); }

  bool action_clamped(int tau, int i) const { return actions[tau][i] != raw_actions[tau][i]; }
  bool any_action_clamped() const {
    for (int t = 0; t < length(); ++t)
      if (actions[t] != raw_actions[t]) return true;
    return false;
  }
};

// Runs pi_phi on the plant for the reference's horizon. x_0 is set from the
// first reference point. A non-finite state or action truncates the record
// and marks it invalid.
inline RolloutRecord rollout(const Policy& policy, const PlantConfig& plant, const ReferenceTrajectory& ref,
                             Rng* noise = nullptr) {
  require(ref.horizon() >= 1, "rollout: empty reference");
  require(policy.layout().state_dim == state_dim(plant) && policy.layout().action_dim == action_dim(plant),
          "rollout: policy does not match plant");
  const int horizon = ref.horizon();
  RolloutRecord rec;
  rec.horizon = horizon;
  rec.states.reserve(horizon + 1);
  rec.actions.reserve(horizon);
  rec.raw_actions.reserve(horizon);
  rec.costs.reserve(horizon);
  rec.references = ref.points;
  rec.states.push_back(initial_state(plant, ref.points[0]));
  for (int tau = 0; tau < horizon; ++tau) {
    const Vec& x = rec.states.back();
    const PolicyInput in = gather_policy_input(policy.layout(), x, ref, tau, rec.actions);
    Vec raw = policy.act(policy_features(plant, policy.layout(), in));
    if (!raw.allFinite()) {
      rec.valid = false;
      break;
    }
    Vec u = raw;
    plant.action_box.clamp(u);
    StepResult next = step(plant, x, u, noise);
    if (next.fault) {
      rec.valid = false;
      break;
    }
    const double c = stage_cost(plant, x, u, ref.points[tau]);
    rec.costs.push_back(c);
    rec.episode_cost += c;
    rec.raw_actions.push_back(std::move(raw));
    rec.actions.push_back(std::move(u));
    rec.state_clamped.push_back(next.state_clamped ? 1 : 0);
    rec.states.push_back(std::move(next.state));
  }
  return rec;
}

}  // namespace ombrl

#endif  // OMBRL_POLICY_ROLLOUT_HPP_
