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

#ifndef OMBRL_NEURAL_ADAM_HPP_
#define OMBRL_NEURAL_ADAM_HPP_

#include <cmath>
#include <cstdint>

#include "ombrl/common.hpp"

namespace ombrl {

struct AdamState {
  Vec first_moment;
  Vec second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;

  static AdamState zeros(Eigen::Index n) {
    AdamState s;
    s.first_moment = Vec::Zero(n);
    s.second_moment = Vec::Zero(n);
    return s;
  }
};

enum class StepStatus { kOk, kNumericFault };

// Bias-corrected Adam step, in place. A non-finite gradient leaves both
// `params` and `state` untouched.
inline StepStatus adam_update(Vec& params, const Vec& grad, AdamState& state, double lr) {
  require(params.size() == grad.size(), "adam_update: gradient length mismatch");
  require(state.first_moment.size() == params.size() && state.second_moment.size() == params.size(),
          "adam_update: state length mismatch");
  require(lr >= 0.0 && std::isfinite(lr), "adam_update: learning rate must be non-negative");
  if (!grad.allFinite()) return StepStatus::kNumericFault;

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad;
  state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  params.array() -= lr * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + state.eps_adam);
  return StepStatus::kOk;
}

}  // namespace ombrl

#endif  // OMBRL_NEURAL_ADAM_HPP_
