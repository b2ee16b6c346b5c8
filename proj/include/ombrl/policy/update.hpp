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

#ifndef OMBRL_POLICY_UPDATE_HPP_
#define OMBRL_POLICY_UPDATE_HPP_

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "ombrl/neural/adam.hpp"
#include "ombrl/policy/policy.hpp"
#include "ombrl/policy/preconditioner.hpp"

namespace ombrl {

enum class EtaSchedule { kConstant, kInverseSqrt };

inline std::string_view to_string(EtaSchedule s) {
  return s == EtaSchedule::kConstant ? "constant" : "inverse_sqrt";
}

inline EtaSchedule parse_eta_schedule(std::string_view s) {
  if (s == "constant") return EtaSchedule::kConstant;
  if (s == "inverse_sqrt") return EtaSchedule::kInverseSqrt;
  throw ContractError("unknown eta schedule '" + std::string(s) + "'");
}

// eta_t for episode t (0-based).
inline double eta_at(double eta0, EtaSchedule schedule, int episode) {
  if (schedule == EtaSchedule::kConstant) return eta0;
  return eta0 / std::sqrt(static_cast<double>(episode) + 1.0);
}

struct PolicyUpdateOptions {
  double eta = 1.0;
  double alpha = 0.0;
  double epsilon = 1.0;
  // Half-width of the parameter box; infinity disables the projection.
  double param_bound = std::numeric_limits<double>::infinity();
};

struct PolicyUpdateResult {
  StepStatus status = StepStatus::kOk;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double step_norm = 0.0;
};

// phi <- Proj(phi - eta Lambda^{-1} grad). A non-finite step leaves the
// policy untouched.
inline PolicyUpdateResult policy_update(Policy& policy, const Vec& grad, const Mat& du_dphi,
                                        const PolicyUpdateOptions& opt) {
  require(opt.eta >= 0.0 && std::isfinite(opt.eta), "policy_update: eta must be non-negative");
  require(grad.size() == policy.num_params(), "policy_update: gradient length mismatch");
  PolicyUpdateResult res;
  if (!grad.allFinite() || !du_dphi.allFinite()) {
    res.status = StepStatus::kNumericFault;
    return res;
  }
  const LowRankPreconditioner pre(grad, du_dphi, opt.alpha, opt.epsilon);
  res.lambda_min = pre.lambda_min();
  res.lambda_max = pre.lambda_max();
  const Vec delta = opt.eta * pre.solve(grad);
  if (!delta.allFinite()) {
    res.status = StepStatus::kNumericFault;
    return res;
  }
  Vec next = policy.params() - delta;
  if (std::isfinite(opt.param_bound)) next = next.cwiseMax(-opt.param_bound).cwiseMin(opt.param_bound);
  res.step_norm = (next - policy.params()).norm();
  policy.set_params(next);
  return res;
}

}  // namespace ombrl

#endif  // OMBRL_POLICY_UPDATE_HPP_
