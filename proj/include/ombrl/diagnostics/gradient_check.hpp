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

#ifndef OMBRL_DIAGNOSTICS_GRADIENT_CHECK_HPP_
#define OMBRL_DIAGNOSTICS_GRADIENT_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "ombrl/policy/rollout.hpp"

namespace ombrl {

// True policy gradient of the noiseless episode cost by central differences
// over every parameter. Costs 2 n_phi rollouts, so policies above `cap`
// parameters are refused. Work is split over `threads` copies of the policy;
// the result does not depend on the split.
inline Vec fd_policy_gradient(const PlantConfig& plant, const Policy& policy, const ReferenceTrajectory& ref,
                              double h_fd, int cap = 2000, int threads = 1) {
  require(h_fd > 0.0, "fd_policy_gradient: step must be positive");
  require(policy.num_params() <= cap, "fd_policy_gradient: policy has " + std::to_string(policy.num_params()) +
                                          " parameters, above the cap of " + std::to_string(cap));
  const Eigen::Index n = policy.num_params();
  Vec grad(n);
  auto work = [&](Eigen::Index begin, Eigen::Index end) {
    Policy probe = policy;
    Vec p = policy.params();
    for (Eigen::Index i = begin; i < end; ++i) {
      const double orig = p[i];
      p[i] = orig + h_fd;
      probe.set_params(p);
      const double up = rollout(probe, plant, ref).episode_cost;
      p[i] = orig - h_fd;
      probe.set_params(p);
      const double down = rollout(probe, plant, ref).episode_cost;
      p[i] = orig;
      grad[i] = (up - down) / (2.0 * h_fd);
    }
  };
  const int t = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (t == 1) {
    work(0, n);
    return grad;
  }
  std::vector<std::thread> pool;
  const Eigen::Index chunk = (n + t - 1) / t;
  for (int k = 0; k < t; ++k) {
    const Eigen::Index b = k * chunk, e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back(work, b, e);
  }
  for (auto& th : pool) th.join();
  return grad;
}

struct GradientError {
  double norm = 0.0;      // ||est - oracle||
  double relative = 0.0;  // ||est - oracle|| / ||oracle||
  double cosine = 0.0;
};

inline GradientError gradient_error(const Vec& est, const Vec& oracle) {
  require(est.size() == oracle.size(), "gradient_error: length mismatch");
  GradientError e;
  e.norm = (est - oracle).norm();
  const double on = oracle.norm(), en = est.norm();
  e.relative = on > 0.0 ? e.norm / on : (e.norm == 0.0 ? 0.0 : INFINITY);
  if (on > 0.0 && en > 0.0)
    e.cosine = est.dot(oracle) / (en * on);
  else
    e.cosine = (on == 0.0 && en == 0.0) ? 1.0 : 0.0;
  return e;
}

}  // namespace ombrl

#endif  // OMBRL_DIAGNOSTICS_GRADIENT_CHECK_HPP_
