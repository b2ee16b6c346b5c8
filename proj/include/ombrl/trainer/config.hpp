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

#ifndef OMBRL_TRAINER_CONFIG_HPP_
#define OMBRL_TRAINER_CONFIG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "ombrl/model/dynamics_model.hpp"
#include "ombrl/policy/update.hpp"

namespace ombrl {

// Any problem with a config file: syntax, unknown key, bad value.
class ConfigError : public ContractError {
 public:
  using ContractError::ContractError;
};

struct PayloadChange {
  int episode = 0;
  double mass = 0.0;
};

struct ModelSettings {
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::kTanh;
  ModelTarget target = ModelTarget::kDelta;
  bool normalize = true;
  int freeze_stats_after = 20;  // episodes; 0 never freezes
  double lr = 1e-3;
  int inner_steps = 64;
  int batch_size = 256;
  double batch_fraction = 0.0;      // > 0 grows the batch with the buffer
  std::size_t buffer_capacity = 0;  // transitions; 0 is unbounded

  // Minibatch size for a buffer holding `buffered` transitions.
  std::size_t batch_for(std::size_t buffered) const {
    const auto grown = static_cast<std::size_t>(std::ceil(batch_fraction * static_cast<double>(buffered)));
    return std::max(static_cast<std::size_t>(batch_size), grown);
  }
};

struct PolicySettings {
  std::vector<int> hidden{32, 32};
  Activation activation = Activation::kTanh;
  int lookahead = 10;
  int history = 2;
  double eta = 0.05;
  EtaSchedule eta_schedule = EtaSchedule::kConstant;
  double alpha = 0.1;
  double epsilon = 1.0;
  double gamma = 1.0;
  double param_bound = 0.0;  // 0 disables the projection
};

struct DiagnosticsSettings {
  int oracle_every = 0;  // 0 disables the finite-difference oracle
  double fd_step = 1e-6;
  int fd_cap = 2000;
  bool drift = true;
};

struct OutputSettings {
  std::string dir = "run";
  int checkpoint_every = 10;  // 0 disables periodic checkpoints
};

struct TrainerConfig {
  std::uint64_t seed = 0;
  int episodes = 100;
  int horizon = 500;
  int trajectories_per_episode = 10;
  PlantConfig plant = make_pendulum_plant();
  ModelSettings model;
  PolicySettings policy;
  std::vector<PayloadChange> payload_schedule;
  DiagnosticsSettings diagnostics;
  OutputSettings output;

  int segment_steps() const { return horizon / trajectories_per_episode; }

  // Plant in effect during `episode`.
  PlantConfig plant_at(int episode) const {
    PlantConfig c = plant;
    for (const auto& p : payload_schedule)
      if (p.episode <= episode) c = set_payload(c, p.mass);
    return c;
  }
};

inline void validate(const TrainerConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  try {
    validate(c.plant);
  } catch (const ContractError& e) {
    fail(e.what());
  }
  if (c.episodes < 1) fail("episodes must be >= 1");
  if (c.horizon < 1) fail("horizon must be >= 1");
  if (c.trajectories_per_episode < 1 || c.horizon % c.trajectories_per_episode != 0)
    fail("horizon must be a positive multiple of trajectories_per_episode");
  if (c.model.hidden.size() != 2 || c.policy.hidden.size() != 2) fail("networks have exactly two hidden layers");
  for (int w : c.model.hidden)
    if (w < 1) fail("model.hidden widths must be positive");
  for (int w : c.policy.hidden)
    if (w < 1) fail("policy.hidden widths must be positive");
  if (!(c.model.lr >= 0.0) || !std::isfinite(c.model.lr)) fail("model.lr must be >= 0");
  if (c.model.inner_steps < 1) fail("model.inner_steps must be >= 1");
  if (!(c.model.batch_fraction >= 0.0 && c.model.batch_fraction <= 1.0))
    fail("model.batch_fraction must be in [0, 1]");
  if (c.model.batch_size < 1) fail("model.batch_size must be >= 1");
  if (c.model.freeze_stats_after < 0) fail("model.freeze_stats_after must be >= 0");
  if (c.model.target == ModelTarget::kDelta && !(c.plant.dt > 0.0)) fail("delta model needs dt > 0");
  if (c.policy.lookahead < 1) fail("policy.lookahead must be >= 1");
  if (c.policy.history < 0) fail("policy.history must be >= 0");
  if (!(c.policy.eta >= 0.0) || !std::isfinite(c.policy.eta)) fail("policy.eta must be >= 0");
  if (!(c.policy.alpha >= 0.0) || !std::isfinite(c.policy.alpha)) fail("policy.alpha must be >= 0");
  if (!(c.policy.epsilon > 0.0) || !std::isfinite(c.policy.epsilon)) fail("policy.epsilon must be > 0");
  if (!(c.policy.gamma > 0.0 && c.policy.gamma <= 1.0)) fail("policy.gamma must lie in (0, 1]");
  if (!(c.policy.param_bound >= 0.0)) fail("policy.param_bound must be >= 0");
  for (std::size_t i = 0; i < c.payload_schedule.size(); ++i) {
    const auto& p = c.payload_schedule[i];
    if (p.episode < 0) fail("payload_schedule episodes must be >= 0");
    if (i > 0 && p.episode <= c.payload_schedule[i - 1].episode)
      fail("payload_schedule episodes must be strictly increasing");
    if (!(p.mass >= 0.0) || !std::isfinite(p.mass)) fail("payload_schedule masses must be >= 0");
  }
  if (c.diagnostics.oracle_every < 0) fail("diagnostics.oracle_every must be >= 0");
  if (!(c.diagnostics.fd_step > 0.0)) fail("diagnostics.fd_step must be > 0");
  if (c.diagnostics.fd_cap < 1) fail("diagnostics.fd_cap must be >= 1");
  if (c.output.checkpoint_every < 0) fail("output.checkpoint_every must be >= 0");
}

namespace detail {

inline std::string where(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  return m.line >= 0 ? "line " + std::to_string(m.line + 1) : "?";
}

// A YAML mapping whose keys are consumed one by one; anything left over is
// an unknown key.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError("config: " + where(node_) + ": '" + path_ + "' must be a mapping");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("config: " + where(v) + ": field '" + qualified(key) + "' has the wrong type");
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(out)) throw ConfigError("config: " + where(v) + ": field '" + qualified(key) + "' not finite");
    }
  }

  template <typename Parse, typename T>
  void read_enum(const std::string& key, T& out, Parse parse) {
    std::string s;
    const YAML::Node v = node_[key];
    read(key, s);
    if (!v) return;
    try {
      out = parse(s);
    } catch (const ContractError& e) {
      throw ConfigError("config: " + where(v) + ": field '" + qualified(key) + "': " + e.what());
    }
  }

  void read_vector(const std::string& key, Vec& out) {
    std::vector<double> v;
    read(key, v);
    if (node_[key]) out = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  void read_matrix(const std::string& key, Mat& out) {
    std::vector<std::vector<double>> rows;
    read(key, rows);
    if (!node_[key]) return;
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows)
      if (r.size() != cols || cols == 0)
        throw ConfigError("config: " + where(node_[key]) + ": field '" + qualified(key) + "' is not a matrix");
    out.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j) out(i, j) = rows[i][j];
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  void finish() const {
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key))
        throw ConfigError("config: " + where(kv.first) + ": unknown field '" + qualified(key) + "'");
    }
  }

 private:
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_box(Section& s, const std::string& key, Box& box) {
  YAML::Node n = s.child(key);
  if (!n) return;
  Section b(n, "plant." + key);
  b.read_vector("lower", box.lower);
  b.read_vector("upper", box.upper);
  b.finish();
}

inline void read_plant(const YAML::Node& node, PlantConfig& p) {
  Section s(node, "plant");
  PlantKind kind = PlantKind::kPendulum;
  s.read_enum("kind", kind, parse_plant_kind);
  p = make_plant(kind);
  s.read("dt", p.dt);
  s.read_matrix("a_matrix", p.a_matrix);
  s.read_matrix("b_matrix", p.b_matrix);
  s.read("mass", p.mass);
  s.read("length", p.length);
  s.read("damping", p.damping);
  s.read("gravity", p.gravity);
  s.read("link_length1", p.link_length1);
  s.read("link_length2", p.link_length2);
  s.read("link_mass1", p.link_mass1);
  s.read("link_mass2", p.link_mass2);
  s.read("joint_damping", p.joint_damping);
  s.read("actuator_lag", p.actuator_lag);
  s.read("deadband", p.deadband);
  s.read("payload", p.payload);
  s.read("process_noise_std", p.process_noise_std);
  s.read("action_cost_weight", p.action_cost_weight);
  read_box(s, "state_box", p.state_box);
  read_box(s, "action_box", p.action_box);
  read_box(s, "reference_box", p.reference_box);
  s.read_vector("state_scale", p.state_scale);
  s.read_vector("reference_scale", p.reference_scale);
  s.read_vector("action_scale", p.action_scale);
  s.finish();
}

}  // namespace detail

// Parses a YAML document. Every key is optional; unknown keys are errors.
inline TrainerConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("config: line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  TrainerConfig c;
  if (root.IsNull()) {
    validate(c);
    return c;
  }
  detail::Section s(root, "");
  s.read("seed", c.seed);
  s.read("episodes", c.episodes);
  s.read("horizon", c.horizon);
  s.read("trajectories_per_episode", c.trajectories_per_episode);
  if (YAML::Node n = s.child("plant")) detail::read_plant(n, c.plant);
  if (YAML::Node n = s.child("model")) {
    detail::Section m(n, "model");
    m.read("hidden", c.model.hidden);
    m.read_enum("activation", c.model.activation, parse_activation);
    m.read_enum("target", c.model.target, parse_model_target);
    m.read("normalize", c.model.normalize);
    m.read("freeze_stats_after", c.model.freeze_stats_after);
    m.read("lr", c.model.lr);
    m.read("inner_steps", c.model.inner_steps);
    m.read("batch_size", c.model.batch_size);
    m.read("batch_fraction", c.model.batch_fraction);
    m.read("buffer_capacity", c.model.buffer_capacity);
    m.finish();
  }
  if (YAML::Node n = s.child("policy")) {
    detail::Section p(n, "policy");
    p.read("hidden", c.policy.hidden);
    p.read_enum("activation", c.policy.activation, parse_activation);
    p.read("lookahead", c.policy.lookahead);
    p.read("history", c.policy.history);
    p.read("eta", c.policy.eta);
    p.read_enum("eta_schedule", c.policy.eta_schedule, parse_eta_schedule);
    p.read("alpha", c.policy.alpha);
    p.read("epsilon", c.policy.epsilon);
    p.read("gamma", c.policy.gamma);
    p.read("param_bound", c.policy.param_bound);
    p.finish();
  }
  if (YAML::Node n = s.child("payload_schedule")) {
    if (!n.IsSequence()) throw ConfigError("config: " + detail::where(n) + ": payload_schedule must be a list");
    for (const auto& item : n) {
      detail::Section e(item, "payload_schedule[]");
      PayloadChange pc;
      e.read("episode", pc.episode);
      e.read("mass", pc.mass);
      if (!item["episode"] || !item["mass"])
        throw ConfigError("config: " + detail::where(item) + ": payload_schedule entries need episode and mass");
      e.finish();
      c.payload_schedule.push_back(pc);
    }
  }
  if (YAML::Node n = s.child("diagnostics")) {
    detail::Section d(n, "diagnostics");
    d.read("oracle_every", c.diagnostics.oracle_every);
    d.read("fd_step", c.diagnostics.fd_step);
    d.read("fd_cap", c.diagnostics.fd_cap);
    d.read("drift", c.diagnostics.drift);
    d.finish();
  }
  if (YAML::Node n = s.child("output")) {
    detail::Section o(n, "output");
    o.read("dir", c.output.dir);
    o.read("checkpoint_every", c.output.checkpoint_every);
    o.finish();
  }
  s.finish();
  validate(c);
  return c;
}

inline TrainerConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ombrl

#endif  // OMBRL_TRAINER_CONFIG_HPP_
