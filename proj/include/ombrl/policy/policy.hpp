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

#ifndef OMBRL_POLICY_POLICY_HPP_
#define OMBRL_POLICY_POLICY_HPP_

#include <algorithm>
#include <utility>
#include <vector>

#include "ombrl/neural/mlp.hpp"
#include "ombrl/plants/plant.hpp"
#include "ombrl/plants/reference.hpp"

namespace ombrl {

// What the policy sees at step tau:
//   - the current state x_tau
//   - the next `lookahead` reference points tau+1 .. tau+L (the last point
//     repeats past the end of the episode)
//   - the `history` most recent applied actions (zeros before the start)
struct PolicyInput {
  Vec state;
  std::vector<Vec> lookahead;
  std::vector<Vec> previous_actions;
};

struct PolicyLayout {
  int state_dim = 0;
  int reference_dim = 0;
  int action_dim = 0;
  int lookahead = 10;
  int history = 2;
  Vec state_scale;
  Vec reference_scale;
  Vec action_scale;

  static PolicyLayout for_plant(const PlantConfig& c, int lookahead, int history) {
    require(lookahead >= 1, "policy: lookahead must be >= 1");
    require(history >= 0, "policy: history must be >= 0");
    return {ombrl::state_dim(c), ombrl::reference_dim(c), ombrl::action_dim(c), lookahead, history,
            c.state_scale, c.reference_scale, c.action_scale};
  }

  int feature_dim() const { return state_dim + lookahead * reference_dim + history * action_dim; }
  int history_offset(int k) const {  // k = 1 .. history
    return state_dim + lookahead * reference_dim + (k - 1) * action_dim;
  }
};

inline PolicyInput gather_policy_input(const PolicyLayout& layout, const Vec& state, const ReferenceTrajectory& ref,
                                       int tau, const std::vector<Vec>& applied_actions) {
  require(ref.horizon() > 0, "policy input: empty reference");
  PolicyInput in;
  in.state = state;
  const int last = ref.horizon() - 1;
  for (int k = 1; k <= layout.lookahead; ++k) in.lookahead.push_back(ref.points[std::min(tau + k, last)]);
  for (int k = 1; k <= layout.history; ++k) {
    const int j = tau - k;
    in.previous_actions.push_back(j >= 0 ? applied_actions[j] : Vec::Zero(layout.action_dim));
  }
  return in;
}

// Feature vector fed to the network:
//   [ x / s_x,  (ref_{tau+k} - p(x)) / s_ref  for k = 1..L,  u_{tau-k} / s_u  for k = 1..P ]
// The lookahead is expressed relative to the tracked quantity p(x), so it is
// itself state dependent.
inline Vec policy_features(const PlantConfig& plant, const PolicyLayout& layout, const PolicyInput& in) {
  require(in.state.size() == layout.state_dim, "policy features: state length mismatch");
  require(static_cast<int>(in.lookahead.size()) == layout.lookahead, "policy features: lookahead mismatch");
  require(static_cast<int>(in.previous_actions.size()) == layout.history, "policy features: history mismatch");
  Vec s(layout.feature_dim());
  s.head(layout.state_dim) = in.state.cwiseQuotient(layout.state_scale);
  const Vec p = tracked(plant, in.state);
  int off = layout.state_dim;
  for (const auto& r : in.lookahead) {
    s.segment(off, layout.reference_dim) = (r - p).cwiseQuotient(layout.reference_scale);
    off += layout.reference_dim;
  }
  for (const auto& u : in.previous_actions) {
    s.segment(off, layout.action_dim) = u.cwiseQuotient(layout.action_scale);
    off += layout.action_dim;
  }
  return s;
}

// d features / d x (feature_dim x state_dim).
inline Mat policy_feature_state_jacobian(const PlantConfig& plant, const PolicyLayout& layout, const Vec& state) {
  Mat j = Mat::Zero(layout.feature_dim(), layout.state_dim);
  j.topRows(layout.state_dim) = layout.state_scale.cwiseInverse().asDiagonal();
  const Mat dp = layout.reference_scale.cwiseInverse().asDiagonal() * tracked_jacobian(plant, state);
  for (int k = 0; k < layout.lookahead; ++k) {
    j.middleRows(layout.state_dim + k * layout.reference_dim, layout.reference_dim) = -dp;
  }
  return j;
}

// pi_phi: u = s_u * net(features).
class Policy {
 public:
  struct Linearization {
    Vec action;
    Mat feature_jacobian;  // m x feature_dim
    Mat param_jacobian;    // m x n_phi
  };

  Policy() = default;
  Policy(MlpNet net, PolicyLayout layout) : net_(std::move(net)), layout_(std::move(layout)) {
    require(net_.input_dim() == layout_.feature_dim(), "Policy: network input width != feature width");
    require(net_.output_dim() == layout_.action_dim, "Policy: network output width != action width");
  }

  const MlpNet& net() const { return net_; }
  MlpNet& net() { return net_; }
  const PolicyLayout& layout() const { return layout_; }
  const Vec& params() const { return net_.params(); }
  void set_params(const Vec& p) { net_.set_params(p); }
  Eigen::Index num_params() const { return net_.num_params(); }

  Vec act(const Vec& features) const { return layout_.action_scale.cwiseProduct(net_.forward(features)); }

  Linearization linearize(const Vec& features) const {
    MlpNet::Linearization lin = net_.linearize(features);
    const auto scale = layout_.action_scale.asDiagonal();
    return {layout_.action_scale.cwiseProduct(lin.output), scale * lin.input_jacobian, scale * lin.param_jacobian};
  }

 private:
  MlpNet net_;
  PolicyLayout layout_;
};

inline Policy make_policy(const PlantConfig& plant, int lookahead, int history, int hidden1, int hidden2,
                          Activation activation, Rng& rng) {
  PolicyLayout layout = PolicyLayout::for_plant(plant, lookahead, history);
  MlpNet net = MlpNet::random({layout.feature_dim(), hidden1, hidden2, layout.action_dim}, activation, rng);
  return Policy(std::move(net), std::move(layout));
}

}  // namespace ombrl

#endif  // OMBRL_POLICY_POLICY_HPP_
