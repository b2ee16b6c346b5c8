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

#ifndef OMBRL_MODEL_DYNAMICS_MODEL_HPP_
#define OMBRL_MODEL_DYNAMICS_MODEL_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ombrl/model/replay_buffer.hpp"
#include "ombrl/neural/adam.hpp"
#include "ombrl/neural/mlp.hpp"

namespace ombrl {

// kAbsolute: f(x, u) = net(x, u)
// kDelta:    f(x, u) = x + dt * net(x, u)   (net predicts the rate of change)
enum class ModelTarget { kAbsolute, kDelta };

inline std::string_view to_string(ModelTarget t) { return t == ModelTarget::kDelta ? "delta" : "absolute"; }

inline ModelTarget parse_model_target(std::string_view s) {
  if (s == "delta") return ModelTarget::kDelta;
  if (s == "absolute") return ModelTarget::kAbsolute;
  throw ContractError("unknown model target '" + std::string(s) + "'");
}

// Running per-dimension mean / standard deviation (Welford), optionally
// frozen.
struct RunningStats {
  double count = 0.0;
  Vec mean;
  Vec m2;
  bool frozen = false;

  static RunningStats zeros(int dim) { return {0.0, Vec::Zero(dim), Vec::Zero(dim), false}; }

  void add(const Vec& v) {
    if (frozen) return;
    count += 1.0;
    const Vec d = v - mean;
    mean += d / count;
    m2 += d.cwiseProduct(v - mean);
  }

  // Floors tiny spreads at 1 so constant inputs pass through unscaled.
  Vec stddev() const {
    Vec s(mean.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double var = count > 1.0 ? m2[i] / count : 0.0;
      s[i] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return s;
  }
};

class DynamicsModel {
 public:
  DynamicsModel() = default;

  DynamicsModel(MlpNet net, int state_dim, int action_dim, ModelTarget target, double dt, bool normalize)
      : net_(std::move(net)),
        n_(state_dim),
        m_(action_dim),
        target_(target),
        dt_(dt),
        normalize_(normalize),
        in_stats_(RunningStats::zeros(state_dim + action_dim)),
        out_stats_(RunningStats::zeros(state_dim)) {
    require(net_.input_dim() == n_ + m_, "DynamicsModel: network input must be state_dim + action_dim");
    require(net_.output_dim() == n_, "DynamicsModel: network output must be state_dim");
    require(target_ == ModelTarget::kAbsolute || dt_ > 0.0, "DynamicsModel: delta target needs dt > 0");
    refresh_scales();
  }

  int state_dim() const { return n_; }
  int action_dim() const { return m_; }
  ModelTarget target() const { return target_; }
  double dt() const { return dt_; }
  bool normalized() const { return normalize_; }
  const MlpNet& net() const { return net_; }
  MlpNet& net() { return net_; }
  const RunningStats& input_stats() const { return in_stats_; }
  const RunningStats& output_stats() const { return out_stats_; }

  void set_stats(RunningStats in, RunningStats out) {
    require(in.mean.size() == n_ + m_ && out.mean.size() == n_, "DynamicsModel: stats dimension mismatch");
    in_stats_ = std::move(in);
    out_stats_ = std::move(out);
    refresh_scales();
  }

  void update_statistics(std::span<const Transition> data) {
    if (!normalize_) return;
    for (const auto& t : data) {
      in_stats_.add(joint(t.x, t.u));
      out_stats_.add(raw_target(t.x, t.x_next));
    }
    refresh_scales();
  }

  void freeze_statistics() {
    in_stats_.frozen = true;
    out_stats_.frozen = true;
  }
  bool statistics_frozen() const { return in_stats_.frozen; }

  Vec predict(const Vec& x, const Vec& u) const {
    check(x, u);
    const Vec y = out_mean_ + out_std_.cwiseProduct(net_.forward(normalized_input(x, u)));
    return target_ == ModelTarget::kDelta ? Vec(x + dt_ * y) : y;
  }

  // (d f / d x, d f / d u) at (x, u).
  std::pair<Mat, Mat> jacobians(const Vec& x, const Vec& u) const {
    check(x, u);
    Mat j = out_std_.asDiagonal() * net_.input_jacobian(normalized_input(x, u)) *
            in_std_.cwiseInverse().asDiagonal();
    if (target_ == ModelTarget::kDelta) {
      j *= dt_;
      j.leftCols(n_) += Mat::Identity(n_, n_);
    }
    return {j.leftCols(n_), j.rightCols(m_)};
  }

  // Network-space training pair for one transition.
  Vec normalized_input(const Vec& x, const Vec& u) const {
    return (joint(x, u) - in_mean_).cwiseProduct(in_std_.cwiseInverse());
  }
  Vec normalized_target(const Vec& x, const Vec& x_next) const {
    return (raw_target(x, x_next) - out_mean_).cwiseProduct(out_std_.cwiseInverse());
  }

 private:
  void check(const Vec& x, const Vec& u) const {
    require(x.size() == n_ && u.size() == m_, "DynamicsModel: dimension mismatch");
  }

  Vec joint(const Vec& x, const Vec& u) const {
    Vec z(n_ + m_);
    z << x, u;
    return z;
  }

  Vec raw_target(const Vec& x, const Vec& x_next) const {
    return target_ == ModelTarget::kDelta ? Vec((x_next - x) / dt_) : x_next;
  }

  void refresh_scales() {
    if (normalize_) {
      in_mean_ = in_stats_.mean;
      in_std_ = in_stats_.stddev();
      out_mean_ = out_stats_.mean;
      out_std_ = out_stats_.stddev();
    } else {
      in_mean_ = Vec::Zero(n_ + m_);
      in_std_ = Vec::Ones(n_ + m_);
      out_mean_ = Vec::Zero(n_);
      out_std_ = Vec::Ones(n_);
    }
  }

  MlpNet net_;
  int n_ = 0;
  int m_ = 0;
  ModelTarget target_ = ModelTarget::kDelta;
  double dt_ = 0.01;
  bool normalize_ = true;
  RunningStats in_stats_;
  RunningStats out_stats_;
  Vec in_mean_, in_std_, out_mean_, out_std_;
};

// One-step prediction error: mean over the batch of ||f(x, u) - x+||^2.
inline double model_loss(const DynamicsModel& model, std::span<const Transition> batch) {
  require(!batch.empty(), "model_loss: empty batch");
  double sum = 0.0;
  for (const auto& t : batch) sum += (model.predict(t.x, t.u) - t.x_next).squaredNorm();
  return sum / static_cast<double>(batch.size());
}

// Loss in the network's normalized output space and its parameter gradient.
// This is the one-step error with each state dimension weighted by the
// inverse variance of its target.
inline double normalized_model_loss(const DynamicsModel& model, std::span<const Transition> batch, Vec* grad) {
  require(!batch.empty(), "normalized_model_loss: empty batch");
  const int n = model.state_dim(), m = model.action_dim();
  Mat inputs(n + m, static_cast<Eigen::Index>(batch.size()));
  Mat targets(n, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    inputs.col(static_cast<Eigen::Index>(i)) = model.normalized_input(batch[i].x, batch[i].u);
    targets.col(static_cast<Eigen::Index>(i)) = model.normalized_target(batch[i].x, batch[i].x_next);
  }
  return model.net().mse(inputs, targets, grad);
}

struct ModelUpdateStats {
  double mean_train_loss = 0.0;  // normalized-space loss averaged over inner steps
  int steps = 0;
  int numeric_faults = 0;
};

// `inner_steps` Adam steps, each on a fresh minibatch drawn uniformly from
// the buffer. Non-finite gradients skip the step and are counted.
inline ModelUpdateStats model_update(DynamicsModel& model, AdamState& opt, const ReplayBuffer& buffer, double lr,
                                     std::size_t batch_size, int inner_steps, Rng& rng) {
  require(!buffer.empty(), "model_update: buffer is empty");
  require(inner_steps >= 1, "model_update: need at least one inner step");
  require(batch_size >= 1, "model_update: batch size must be positive");
  ModelUpdateStats stats;
  std::vector<Transition> batch;
  for (int k = 0; k < inner_steps; ++k) {
    batch = buffer.sample_minibatch(batch_size, rng);
    Vec grad;
    const double loss = normalized_model_loss(model, batch, &grad);
    if (!std::isfinite(loss)) {
      ++stats.numeric_faults;
      continue;
    }
    Vec params = model.net().params();
    if (adam_update(params, grad, opt, lr) == StepStatus::kNumericFault) {
      ++stats.numeric_faults;
      continue;
    }
    model.net().set_params(params);
    stats.mean_train_loss += loss;
    ++stats.steps;
  }
  if (stats.steps > 0) stats.mean_train_loss /= stats.steps;
  return stats;
}

}  // namespace ombrl

#endif  // OMBRL_MODEL_DYNAMICS_MODEL_HPP_
