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

#ifndef OMBRL_TRAINER_EVALUATE_HPP_
#define OMBRL_TRAINER_EVALUATE_HPP_

#include <algorithm>
#include <string>
#include <vector>

#include "json.hpp"

#include "ombrl/policy/rollout.hpp"

namespace ombrl {

// Tracking metrics of one rollout. Errors are Euclidean distances in
// position space between the plant and the reference at the same step;
// velocities are the reference's speed, |p_{k+1} - p_k| / dt.
struct TrackingMetrics {
  std::string label;
  double mean_error = 0.0;
  double max_error = 0.0;
  double mean_velocity = 0.0;
  double max_velocity = 0.0;
  double rho = 0.0;  // max_error / max_velocity
  double cost = 0.0;
  int steps = 0;
  bool faulted = false;
};

struct EvaluationReport {
  std::vector<TrackingMetrics> per_reference;
  TrackingMetrics aggregate;  // means of means, maxima of maxima
};

inline TrackingMetrics tracking_metrics(const PlantConfig& plant, const RolloutRecord& rec,
                                        const ReferenceTrajectory& ref) {
  TrackingMetrics m;
  m.label = ref.label;
  m.steps = rec.length();
  m.faulted = !rec.valid;
  m.cost = rec.episode_cost;
  const int n = rec.length();
  for (int k = 0; k < n; ++k) {
    const double e = (position(plant, rec.states[k]) - reference_position(plant, ref.points[k])).norm();
    m.mean_error += e;
    m.max_error = std::max(m.max_error, e);
  }
  if (n > 0) m.mean_error /= n;
  const int h = ref.horizon();
  for (int k = 0; k + 1 < h; ++k) {
    const double v =
        (reference_position(plant, ref.points[k + 1]) - reference_position(plant, ref.points[k])).norm() / plant.dt;
    m.mean_velocity += v;
    m.max_velocity = std::max(m.max_velocity, v);
  }
  if (h > 1) m.mean_velocity /= (h - 1);
  m.rho = m.max_velocity > 0.0 ? m.max_error / m.max_velocity : 0.0;
  return m;
}

// Runs the policy on each reference without learning or noise.
inline EvaluationReport evaluate(const Policy& policy, const PlantConfig& plant,
                                 const std::vector<ReferenceTrajectory>& suite) {
  require(!suite.empty(), "evaluate: empty reference suite");
  EvaluationReport r;
  TrackingMetrics& a = r.aggregate;
  a.label = "aggregate";
  for (const ReferenceTrajectory& ref : suite) {
    const TrackingMetrics m = tracking_metrics(plant, rollout(policy, plant, ref), ref);
    a.mean_error += m.mean_error;
    a.mean_velocity += m.mean_velocity;
    a.max_error = std::max(a.max_error, m.max_error);
    a.max_velocity = std::max(a.max_velocity, m.max_velocity);
    a.cost += m.cost;
    a.steps += m.steps;
    a.faulted = a.faulted || m.faulted;
    r.per_reference.push_back(m);
  }
  const double k = static_cast<double>(suite.size());
  a.mean_error /= k;
  a.mean_velocity /= k;
  a.rho = a.max_velocity > 0.0 ? a.max_error / a.max_velocity : 0.0;
  return r;
}

inline nlohmann::ordered_json to_json(const TrackingMetrics& m) {
  nlohmann::ordered_json j;
  j["label"] = m.label;
  j["mean_error"] = m.mean_error;
  j["max_error"] = m.max_error;
  j["mean_velocity"] = m.mean_velocity;
  j["max_velocity"] = m.max_velocity;
  j["rho"] = m.rho;
  j["cost"] = m.cost;
  j["steps"] = m.steps;
  j["faulted"] = m.faulted;
  return j;
}

inline nlohmann::ordered_json to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["aggregate"] = to_json(r.aggregate);
  j["per_reference"] = nlohmann::ordered_json::array();
  for (const auto& m : r.per_reference) j["per_reference"].push_back(to_json(m));
  return j;
}

}  // namespace ombrl

#endif  // OMBRL_TRAINER_EVALUATE_HPP_
