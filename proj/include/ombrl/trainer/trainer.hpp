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

#ifndef OMBRL_TRAINER_TRAINER_HPP_
#define OMBRL_TRAINER_TRAINER_HPP_

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <utility>

#include "ombrl/diagnostics/drift.hpp"
#include "ombrl/diagnostics/gradient_check.hpp"
#include "ombrl/policy/closed_loop.hpp"
#include "ombrl/policy/update.hpp"
#include "ombrl/trainer/checkpoint.hpp"
#include "ombrl/trainer/config.hpp"
#include "ombrl/trainer/log.hpp"

namespace ombrl {

// Fresh learner state for a config: random model and policy from their
// seeded streams, empty buffer.
inline TrainerState initial_trainer_state(const TrainerConfig& cfg) {
  const PlantConfig& plant = cfg.plant;
  const int n = state_dim(plant), m = action_dim(plant);
  TrainerState s;
  s.seed = cfg.seed;
  s.payload = plant.payload;
  Rng model_rng(derive_seed(cfg.seed, Stream::kModelInit));
  MlpNet net = MlpNet::random({n + m, cfg.model.hidden[0], cfg.model.hidden[1], n}, cfg.model.activation, model_rng);
  s.model = DynamicsModel(std::move(net), n, m, cfg.model.target, plant.dt, cfg.model.normalize);
  s.model_opt = AdamState::zeros(s.model.net().num_params());
  Rng policy_rng(derive_seed(cfg.seed, Stream::kPolicyInit));
  s.policy = make_policy(plant, cfg.policy.lookahead, cfg.policy.history, cfg.policy.hidden[0], cfg.policy.hidden[1],
                         cfg.policy.activation, policy_rng);
  s.buffer = ReplayBuffer(cfg.model.buffer_capacity > 0 ? std::optional<std::size_t>(cfg.model.buffer_capacity)
                                                        : std::nullopt);
  return s;
}

// Reference of episode t, replayable from (seed, t) alone.
inline ReferenceTrajectory episode_reference(const TrainerConfig& cfg, int episode) {
  Rng rng(derive_seed(cfg.seed, Stream::kReference, static_cast<std::uint64_t>(episode)));
  return sample_reference(cfg.plant_at(episode), cfg.horizon, cfg.segment_steps(), rng);
}

// Rollout of `policy` on episode t's plant, reference and noise.
inline RolloutRecord episode_rollout(const TrainerConfig& cfg, const Policy& policy, int episode) {
  const PlantConfig plant = cfg.plant_at(episode);
  const ReferenceTrajectory ref = episode_reference(cfg, episode);
  Rng noise(derive_seed(cfg.seed, Stream::kProcessNoise, static_cast<std::uint64_t>(episode)));
  return rollout(policy, plant, ref, plant.process_noise_std > 0.0 ? &noise : nullptr);
}

// The online learner, advanced one episode per call.
class Trainer {
 public:
  explicit Trainer(TrainerConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    state_ = initial_trainer_state(cfg_);
  }

  Trainer(TrainerConfig cfg, TrainerState resumed) : cfg_(std::move(cfg)), state_(std::move(resumed)) {
    validate(cfg_);
    require(state_.seed == cfg_.seed, "resume: checkpoint seed differs from config seed");
    const PolicyLayout& l = state_.policy.layout();
    require(l.state_dim == state_dim(cfg_.plant) && l.action_dim == action_dim(cfg_.plant) &&
                l.lookahead == cfg_.policy.lookahead && l.history == cfg_.policy.history,
            "resume: checkpoint policy does not match config");
    require(state_.model.state_dim() == state_dim(cfg_.plant), "resume: checkpoint model does not match config");
  }

  // Sees the model as it stood before episode t's statistics and parameter
  // update, together with episode t's transitions. Must not keep references.
  using ModelObserver = std::function<void(int, const DynamicsModel&, std::span<const Transition>)>;
  void set_model_observer(ModelObserver observer) { observer_ = std::move(observer); }

  const TrainerConfig& config() const { return cfg_; }
  const TrainerState& state() const { return state_; }
  int next_episode() const { return state_.next_episode; }
  bool done() const { return state_.next_episode >= cfg_.episodes; }
  double last_wall_time() const { return wall_time_; }

  // Runs episode t = next_episode():
  //   sample reference -> rollout on the real plant -> extend buffer ->
  //   model update -> gradient, preconditioner, policy update.
  EpisodeRecord run_episode() {
    const auto start = std::chrono::steady_clock::now();
    const int t = state_.next_episode;
    const PlantConfig plant = cfg_.plant_at(t);
    EpisodeRecord rec;
    rec.episode = t;
    rec.payload = plant.payload;
    rec.reference_seed = derive_seed(cfg_.seed, Stream::kReference, static_cast<std::uint64_t>(t));
    rec.noise_seed = derive_seed(cfg_.seed, Stream::kProcessNoise, static_cast<std::uint64_t>(t));
    rec.eta = eta_at(cfg_.policy.eta, cfg_.policy.eta_schedule, t);

    const ReferenceTrajectory ref = episode_reference(cfg_, t);
    const RolloutRecord roll = episode_rollout(cfg_, state_.policy, t);
    rec.g = roll.episode_cost;
    rec.steps = roll.length();
    rec.faulted = !roll.valid;
    rec.action_clamped = roll.any_action_clamped();

    if (roll.length() > 0) {
      state_.buffer.push_episode(roll.states, roll.actions, t);
      const std::vector<Transition> fresh = state_.buffer.episode(t);
      if (observer_) observer_(t, state_.model, fresh);
      if (!state_.model.statistics_frozen()) {
        state_.model.update_statistics(fresh);
        if (cfg_.model.freeze_stats_after > 0 && t + 1 >= cfg_.model.freeze_stats_after)
          state_.model.freeze_statistics();
      }
    }
    if (!state_.buffer.empty()) {
      Rng mb(derive_seed(cfg_.seed, Stream::kMinibatch, static_cast<std::uint64_t>(t)));
      const ModelUpdateStats ms =
          model_update(state_.model, state_.model_opt, state_.buffer, cfg_.model.lr,
                       cfg_.model.batch_for(state_.buffer.size()), cfg_.model.inner_steps, mb);
      rec.train_loss = ms.steps > 0 ? ms.mean_train_loss : NAN;
      rec.model_faults = ms.numeric_faults;
    }
    if (roll.length() > 0) {
      const std::vector<Transition> fresh = state_.buffer.episode(t);
      rec.probe_loss = model_loss(state_.model, fresh);
      if (cfg_.diagnostics.drift) {
        const std::vector<Transition> prev = state_.buffer.episode(t - 1);
        if (!prev.empty()) rec.drift_proxy = drift_proxy(prev, fresh);
      }
    }

    if (roll.valid) {
      const JacobianBundle bundle = assemble_jacobians(state_.model, state_.policy, plant, roll, cfg_.policy.gamma);
      const Vec grad = closed_loop_gradient(bundle);
      rec.grad_norm = grad.norm();
      if (oracle_episode(t)) {
        const Vec truth = fd_policy_gradient(plant, state_.policy, ref, cfg_.diagnostics.fd_step,
                                             cfg_.diagnostics.fd_cap);
        const GradientError e = gradient_error(grad, truth);
        rec.delta = e.norm;
        rec.delta_relative = e.relative;
        rec.delta_cosine = e.cosine;
      }
      PolicyUpdateOptions opt;
      opt.eta = rec.eta;
      opt.alpha = cfg_.policy.alpha;
      opt.epsilon = cfg_.policy.epsilon;
      opt.param_bound = cfg_.policy.param_bound > 0.0 ? cfg_.policy.param_bound
                                                      : std::numeric_limits<double>::infinity();
      const PolicyUpdateResult up = policy_update(state_.policy, grad, bundle.du_dphi, opt);
      if (up.status == StepStatus::kOk) {
        rec.lambda_min = up.lambda_min;
        rec.lambda_max = up.lambda_max;
        rec.step_norm = up.step_norm;
      } else {
        rec.faulted = true;
      }
    }

    state_.payload = plant.payload;
    state_.next_episode = t + 1;
    wall_time_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
  }

 private:
  bool oracle_episode(int t) const {
    return cfg_.diagnostics.oracle_every > 0 && t % cfg_.diagnostics.oracle_every == 0;
  }

  TrainerConfig cfg_;
  TrainerState state_;
  ModelObserver observer_;
  double wall_time_ = 0.0;
};

// Where run_training writes. Null streams / empty paths are skipped.
struct TrainingSinks {
  std::ostream* log = nullptr;      // JSONL, one record per episode
  std::ostream* timing = nullptr;   // JSONL, wall time per episode
  std::filesystem::path checkpoint_dir;
};

inline std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int next_episode) {
  char name[32];
  std::snprintf(name, sizeof name, "ckpt_%06d.bin", next_episode);
  return dir / name;
}

// Runs episodes until cfg.episodes, starting fresh or from `resume`.
// Checkpoints every `checkpoint_every` episodes and once at the end
// (final.bin).
inline TrainingLog run_training(const TrainerConfig& cfg, const TrainingSinks& sinks = {},
                                std::optional<TrainerState> resume = std::nullopt) {
  Trainer trainer = resume ? Trainer(cfg, std::move(*resume)) : Trainer(cfg);
  TrainingLog log;
  while (!trainer.done()) {
    EpisodeRecord rec = trainer.run_episode();
    if (sinks.log) {
      write_jsonl(*sinks.log, rec);
      sinks.log->flush();
    }
    if (sinks.timing) {
      nlohmann::ordered_json j;
      j["episode"] = rec.episode;
      j["wall_time_s"] = trainer.last_wall_time();
      *sinks.timing << j.dump() << '\n';
    }
    log.push_back(rec);
    const int next = trainer.next_episode();
    if (!sinks.checkpoint_dir.empty() && cfg.output.checkpoint_every > 0 && next % cfg.output.checkpoint_every == 0)
      checkpoint_save(trainer.state(), checkpoint_path(sinks.checkpoint_dir, next));
  }
  if (!sinks.checkpoint_dir.empty()) checkpoint_save(trainer.state(), sinks.checkpoint_dir / "final.bin");
  return log;
}

}  // namespace ombrl

#endif  // OMBRL_TRAINER_TRAINER_HPP_
