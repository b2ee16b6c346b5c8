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

// Empirical regret.
//
// Policy regret compares each episode's cost g_t(phi_t) with a fixed
// comparator policy on the same (replayed) reference. Model regret compares
// the online model's loss on episode t's transitions, taken before the model
// saw them, with a model fitted to those transitions alone. Both comparators
// are approximations of an argmin, so the reported regret is a lower bound.

#ifndef OMBRL_DIAGNOSTICS_REGRET_HPP_
#define OMBRL_DIAGNOSTICS_REGRET_HPP_

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ombrl/trainer/trainer.hpp"

namespace ombrl {

struct RegretReport {
  std::string kind;        // "policy" or "model"
  std::string comparator;  // how the comparator was built
  std::vector<int> episodes;
  std::vector<double> instantaneous;  // NaN where skipped
  std::vector<double> cumulative;     // running sum over non-skipped entries
  std::vector<char> skipped;
  int window_begin = 0;  // episodes used for the slope, inclusive
  int window_end = 0;
  double slope = NAN;  // least squares of log R_T against log T
  int slope_points = 0;

  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

// Least-squares slope of log(cumulative) against log(episode + 1) over
// entries with episode in [begin, end] and a positive cumulative value.
inline std::pair<double, int> loglog_slope(const std::vector<int>& episodes, const std::vector<double>& cumulative,
                                           int begin, int end) {
  require(episodes.size() == cumulative.size(), "loglog_slope: length mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    if (episodes[i] < begin || episodes[i] > end || !(cumulative[i] > 0.0)) continue;
    const double x = std::log(episodes[i] + 1.0), y = std::log(cumulative[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return {NAN, n};
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return {NAN, n};
  return {(n * sxy - sx * sy) / den, n};
}

namespace detail {

inline void accumulate(RegretReport& r, int episode, double value, bool skip) {
  const double prev = r.cumulative.empty() ? 0.0 : r.cumulative.back();
  r.episodes.push_back(episode);
  r.instantaneous.push_back(skip ? NAN : value);
  r.skipped.push_back(skip ? 1 : 0);
  r.cumulative.push_back(skip ? prev : prev + value);
}

inline void fit_slope(RegretReport& r, int begin, int end) {
  r.window_begin = begin;
  r.window_end = end;
  std::tie(r.slope, r.slope_points) = loglog_slope(r.episodes, r.cumulative, begin, end);
}

}  // namespace detail

// ---------------------------------------------------------------- policy

// Fixed references the comparator is selected on, independent of the
// training references.
inline std::vector<ReferenceTrajectory> comparator_references(const TrainerConfig& cfg, int count = 4) {
  require(count >= 1, "comparator_references: need at least one reference");
  std::vector<ReferenceTrajectory> refs;
  const PlantConfig plant = cfg.plant_at(cfg.episodes - 1);
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(cfg.seed, Stream::kComparator, static_cast<std::uint64_t>(i)));
    refs.push_back(sample_reference(plant, cfg.horizon, cfg.segment_steps(), rng));
  }
  return refs;
}

inline double mean_episode_cost(const Policy& policy, const PlantConfig& plant,
                                const std::vector<ReferenceTrajectory>& refs) {
  double sum = 0.0;
  for (const auto& ref : refs) {
    const RolloutRecord rec = rollout(policy, plant, ref);
    if (!rec.valid) return std::numeric_limits<double>::infinity();
    sum += rec.episode_cost;
  }
  return sum / static_cast<double>(refs.size());
}

struct PolicyComparator {
  Policy policy;
  int selected_after = 0;  // number of training episodes behind the policy
  int budget = 0;          // total training episodes
  double selection_cost = NAN;
};

// Trains for `budget_factor` times the configured episode count and keeps
// the policy with the lowest mean cost on comparator_references(), checked
// every `eval_every` episodes. `start` resumes from a saved state (for
// example the end of the run being scored) instead of starting over.
inline PolicyComparator train_policy_comparator(const TrainerConfig& cfg, int budget_factor = 5, int eval_every = 5,
                                                std::optional<TrainerState> start = std::nullopt,
                                                int reference_count = 4) {
  require(budget_factor >= 1, "train_policy_comparator: budget factor must be >= 1");
  require(eval_every >= 1, "train_policy_comparator: eval_every must be >= 1");
  TrainerConfig c = cfg;
  c.episodes = budget_factor * cfg.episodes;
  c.diagnostics.oracle_every = 0;
  c.diagnostics.drift = false;
  const std::vector<ReferenceTrajectory> refs = comparator_references(cfg, reference_count);
  const PlantConfig plant = cfg.plant_at(cfg.episodes - 1);
  Trainer trainer = start ? Trainer(c, std::move(*start)) : Trainer(c);

  PolicyComparator best;
  best.budget = c.episodes;
  best.policy = trainer.state().policy;
  best.selected_after = trainer.next_episode();
  best.selection_cost = mean_episode_cost(best.policy, plant, refs);
  while (!trainer.done()) {
    trainer.run_episode();
    const int done = trainer.next_episode();
    if (done % eval_every != 0 && !trainer.done()) continue;
    const double cost = mean_episode_cost(trainer.state().policy, plant, refs);
    if (cost < best.selection_cost) {
      best.selection_cost = cost;
      best.policy = trainer.state().policy;
      best.selected_after = done;
    }
  }
  return best;
}

// Instantaneous regret g_t(phi_t) - g_t(comparator) for every logged
// episode, with episode t's reference rebuilt from its logged seed.
// Faulted episodes are skipped. The slope is fitted over
// [window_begin, window_end].
inline RegretReport policy_regret(const TrainerConfig& cfg, const TrainingLog& log, const Policy& comparator,
                                  int window_begin, int window_end, std::string description = "") {
  require(!log.empty(), "policy_regret: empty log");
  RegretReport r;
  r.kind = "policy";
  r.comparator = std::move(description);
  for (const EpisodeRecord& rec : log) {
    if (rec.reference_seed == 0) {
      throw ContractError("policy_regret: episode " + std::to_string(rec.episode) + " has no reference seed");
    }
    const bool skip = rec.faulted || !std::isfinite(rec.g);
    double value = NAN;
    if (!skip) {
      const PlantConfig plant = cfg.plant_at(rec.episode);
      Rng ref_rng(rec.reference_seed);
      const ReferenceTrajectory ref = sample_reference(plant, cfg.horizon, cfg.segment_steps(), ref_rng);
      Rng noise(rec.noise_seed);
      const RolloutRecord roll = rollout(comparator, plant, ref, plant.process_noise_std > 0.0 ? &noise : nullptr);
      value = rec.g - roll.episode_cost;
    }
    detail::accumulate(r, rec.episode, value, skip);
  }
  detail::fit_slope(r, window_begin, window_end);
  return r;
}

// ----------------------------------------------------------------- model

struct ModelSnapshot {
  int episode = 0;
  DynamicsModel model;  // before episode t's update
  std::vector<Transition> data;
};

struct ModelComparatorOptions {
  int steps = 1000;
  int check_every = 50;
  double lr = 1e-3;
  std::size_t batch_size = 256;
  std::size_t min_samples = 2;
  std::uint64_t seed = 0;
};

// Best one-step loss on `data` reached by any checked iterate of
//   (a) the snapshot itself, fine-tuned on `data` (iterate 0 is the snapshot),
//   (b) a freshly initialized network of the same shape fitted to `data`.
inline double fit_model_comparator(const ModelSnapshot& snap, const ModelComparatorOptions& opt) {
  const ReplayBuffer buf =
      ReplayBuffer::from_transitions(std::deque<Transition>(snap.data.begin(), snap.data.end()), std::nullopt);
  auto fit = [&](DynamicsModel model, Rng& rng, double best) {
    AdamState adam = AdamState::zeros(model.net().num_params());
    for (int done = 0; done < opt.steps;) {
      const int chunk = std::min(opt.check_every, opt.steps - done);
      model_update(model, adam, buf, opt.lr, opt.batch_size, chunk, rng);
      done += chunk;
      const double loss = model_loss(model, snap.data);
      if (std::isfinite(loss)) best = std::min(best, loss);
    }
    return best;
  };
  const std::uint64_t ep = static_cast<std::uint64_t>(snap.episode);
  double best = model_loss(snap.model, snap.data);
  if (!std::isfinite(best)) best = std::numeric_limits<double>::infinity();
  Rng warm_rng(derive_seed(opt.seed, Stream::kComparator, 2 * ep));
  best = fit(snap.model, warm_rng, best);

  Rng init_rng(derive_seed(opt.seed, Stream::kComparator, 2 * ep + 1));
  const MlpNet& shape = snap.model.net();
  DynamicsModel fresh(MlpNet::random(shape.layer_dims(), shape.activation(), init_rng), snap.model.state_dim(),
                      snap.model.action_dim(), snap.model.target(), snap.model.dt(), snap.model.normalized());
  fresh.update_statistics(snap.data);
  fresh.freeze_statistics();
  return fit(std::move(fresh), init_rng, best);
}

// l(theta_t) - l(theta_t comparator) on each snapshot's own transitions.
// Snapshots with fewer than `min_samples` transitions are skipped.
inline RegretReport model_regret(const std::vector<ModelSnapshot>& snapshots, const ModelComparatorOptions& opt,
                                 int window_begin, int window_end) {
  require(!snapshots.empty(), "model_regret: no snapshots");
  RegretReport r;
  r.kind = "model";
  r.comparator = "per-episode best iterate of a fine-tuned copy and a fresh network, " + std::to_string(opt.steps) +
                 " Adam steps each";
  for (const ModelSnapshot& s : snapshots) {
    const bool skip = s.data.size() < opt.min_samples;
    double value = NAN;
    if (!skip) value = model_loss(s.model, s.data) - fit_model_comparator(s, opt);
    detail::accumulate(r, s.episode, value, skip);
  }
  detail::fit_slope(r, window_begin, window_end);
  return r;
}

inline nlohmann::ordered_json to_json(const RegretReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  nlohmann::ordered_json j;
  j["kind"] = r.kind;
  j["comparator"] = r.comparator;
  j["lower_bound"] = true;
  j["window"] = {r.window_begin, r.window_end};
  j["slope"] = num(r.slope);
  j["slope_points"] = r.slope_points;
  j["total"] = num(r.total());
  auto& rows = j["episodes"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    nlohmann::ordered_json row;
    row["episode"] = r.episodes[i];
    row["instantaneous"] = num(r.instantaneous[i]);
    row["cumulative"] = num(r.cumulative[i]);
    row["skipped"] = static_cast<bool>(r.skipped[i]);
    rows.push_back(std::move(row));
  }
  return j;
}

}  // namespace ombrl

#endif  // OMBRL_DIAGNOSTICS_REGRET_HPP_
