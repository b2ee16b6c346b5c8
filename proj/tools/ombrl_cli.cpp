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

// ombrl command-line front end: train, eval, grad-check, regret, export.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ombrl/diagnostics/regret.hpp"
#include "ombrl/trainer/evaluate.hpp"
#include "ombrl/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace ombrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFault = 3;
constexpr int kExitGradCheck = 4;

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  2  usage, config, checkpoint or log error (nothing is written)\n"
    "  3  numeric fault or faulted episode during the run\n"
    "  4  grad-check: oracle-mode relative error above 1e-5\n"
    "Command-line flags override values from the config file.";

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-c,--config", a.config, "YAML config file")->required();
  cmd->add_option("--seed", a.seed, "Root seed (overrides config)");
  cmd->add_option("--episodes", a.episodes, "Episode count (overrides config)");
}

// Parses the config completely before any caller side effect.
TrainerConfig load(const CommonArgs& a) {
  TrainerConfig cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.episodes) cfg.episodes = *a.episodes;
  validate(cfg);
  return cfg;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

nlohmann::ordered_json num(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  CommonArgs common;
  std::string out;
  std::string resume;
};

int cmd_train(const TrainArgs& a) {
  const TrainerConfig cfg = load(a.common);
  std::optional<TrainerState> resume;
  if (!a.resume.empty()) resume = checkpoint_load(a.resume);
  const fs::path dir = a.out.empty() ? fs::path(cfg.output.dir) : fs::path(a.out);
  fs::create_directories(dir / "checkpoints");

  const auto mode = resume ? std::ios::app : std::ios::trunc;
  std::ofstream log_out(dir / "log.jsonl", mode);
  std::ofstream timing_out(dir / "timing.jsonl", mode);
  if (!log_out || !timing_out) throw std::runtime_error("cannot open logs in '" + dir.string() + "'");
  TrainingSinks sinks{&log_out, &timing_out, dir / "checkpoints"};

  const auto start = std::chrono::steady_clock::now();
  const TrainingLog log = run_training(cfg, sinks, std::move(resume));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  int faulted = 0;
  for (const auto& r : log) faulted += r.faulted ? 1 : 0;
  nlohmann::ordered_json summary;
  summary["seed"] = cfg.seed;
  summary["episodes_run"] = static_cast<int>(log.size());
  summary["final_episode"] = log.empty() ? -1 : log.back().episode;
  summary["final_g_t"] = num(log.empty() ? NAN : log.back().g);
  summary["final_probe_loss"] = num(log.empty() ? NAN : log.back().probe_loss);
  summary["faulted_episodes"] = faulted;
  summary["wall_time_s"] = wall;
  write_json(dir / "summary.json", summary);

  std::cout << "trained " << log.size() << " episodes";
  if (!log.empty()) std::cout << ", final g_t " << log.back().g;
  std::cout << ", " << faulted << " faulted, " << wall << " s -> " << dir.string() << '\n';
  return faulted > 0 ? kExitFault : kExitOk;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  CommonArgs common;
  std::string checkpoint;
  std::string out;
  std::optional<double> payload;
};

int cmd_eval(const EvalArgs& a) {
  const TrainerConfig cfg = load(a.common);
  const TrainerState state = a.checkpoint.empty() ? initial_trainer_state(cfg) : checkpoint_load(a.checkpoint);
  PlantConfig plant = cfg.plant_at(std::max(0, state.next_episode - 1));
  if (a.payload) plant = set_payload(plant, *a.payload);
  plant.process_noise_std = 0.0;
  const auto suite = evaluation_suite(plant, cfg.horizon, cfg.segment_steps(),
                                      derive_seed(cfg.seed, Stream::kEvaluation));
  const EvaluationReport report = evaluate(state.policy, plant, suite);
  nlohmann::ordered_json j = to_json(report);
  j["episodes_trained"] = state.next_episode;
  j["payload"] = plant.payload;
  if (!a.out.empty()) write_json(a.out, j);
  std::cout << j.dump(2) << '\n';
  return report.aggregate.faulted ? kExitFault : kExitOk;
}

// ------------------------------------------------------------- grad-check

struct GradCheckArgs {
  CommonArgs common;
  std::string checkpoint;
  std::string out;
  std::optional<int> horizon;
  bool corrupt_k = false;
};

int cmd_grad_check(const GradCheckArgs& a, const CLI::App& cmd) {
  TrainerConfig cfg = load(a.common);
  if (a.horizon) {
    cfg.horizon = *a.horizon;
    cfg.trajectories_per_episode = 1;
  }
  if (cfg.horizon < 2) {
    std::cerr << "grad-check: the horizon must be at least 2 steps\n\n" << cmd.help();
    return kExitConfig;
  }
  cfg.plant.process_noise_std = 0.0;
  const TrainerState state = a.checkpoint.empty() ? initial_trainer_state(cfg) : checkpoint_load(a.checkpoint);
  const int episode = state.next_episode;
  const PlantConfig plant = cfg.plant_at(episode);
  const ReferenceTrajectory ref = episode_reference(cfg, episode);
  const RolloutRecord roll = rollout(state.policy, plant, ref);
  if (!roll.valid) {
    std::cerr << "grad-check: rollout faulted after " << roll.length() << " steps\n";
    return kExitFault;
  }
  const KBlockConvention conv = a.corrupt_k ? KBlockConvention::kShiftedForTesting : KBlockConvention::kSameStep;
  const Vec truth = fd_policy_gradient(plant, state.policy, ref, cfg.diagnostics.fd_step, cfg.diagnostics.fd_cap);
  const Vec oracle = closed_loop_gradient(assemble_true_jacobians(state.policy, plant, roll, 1.0, conv));
  const Vec learned = closed_loop_gradient(assemble_jacobians(state.model, state.policy, plant, roll, 1.0, conv));
  const GradientError eo = gradient_error(oracle, truth);
  const GradientError em = gradient_error(learned, truth);
  const bool pass = eo.relative <= 1e-5;

  auto row = [](const GradientError& e) {
    nlohmann::ordered_json j;
    j["delta_norm"] = num(e.norm);
    j["relative"] = num(e.relative);
    j["cosine"] = num(e.cosine);
    return j;
  };
  nlohmann::ordered_json j;
  j["plant"] = std::string(to_string(plant.kind));
  j["horizon"] = roll.length();
  j["policy_params"] = static_cast<long long>(state.policy.num_params());
  j["episode"] = episode;
  j["k_convention"] = a.corrupt_k ? "shifted" : "same-step";
  j["fd_norm"] = truth.norm();
  j["oracle_mode"] = row(eo);
  j["learned_model"] = row(em);
  j["pass"] = pass;
  if (!a.out.empty()) write_json(a.out, j);

  std::printf("%-14s %14s %14s %10s\n", "mode", "|delta|", "relative", "cosine");
  std::printf("%-14s %14.6e %14.6e %10.6f\n", "oracle", eo.norm, eo.relative, eo.cosine);
  std::printf("%-14s %14.6e %14.6e %10.6f\n", "learned", em.norm, em.relative, em.cosine);
  std::printf("%s (oracle relative error %s 1e-5)\n", pass ? "PASS" : "FAIL", pass ? "<=" : ">");
  return pass ? kExitOk : kExitGradCheck;
}

// ----------------------------------------------------------------- regret

struct RegretArgs {
  CommonArgs common;
  std::string log;
  std::string checkpoint;
  std::string out;
  int factor = 5;
  int eval_every = 5;
  int window_begin = 20;
  std::optional<int> window_end;
  int model_every = 0;
  int model_steps = 1000;
};

int cmd_regret(const RegretArgs& a) {
  const TrainerConfig cfg = load(a.common);
  std::ifstream in(a.log);
  if (!in) throw ContractError("regret: cannot open log '" + a.log + "'");
  const TrainingLog log = read_jsonl(in);
  if (log.empty()) throw ContractError("regret: log is empty");
  TrainerState state = checkpoint_load(a.checkpoint);
  const int end = a.window_end.value_or(log.back().episode);

  const PolicyComparator comp = train_policy_comparator(cfg, a.factor, a.eval_every, std::move(state));
  const std::string desc = "best policy by mean cost on " + std::to_string(comparator_references(cfg).size()) +
                           " fixed references over " + std::to_string(comp.budget) +
                           " training episodes (selected after " + std::to_string(comp.selected_after) + ")";
  const RegretReport policy = policy_regret(cfg, log, comp.policy, a.window_begin, end, desc);

  nlohmann::ordered_json j;
  j["policy"] = to_json(policy);
  j["policy"]["comparator_selection_cost"] = num(comp.selection_cost);
  std::cout << "policy regret: total " << policy.total() << ", log-log slope " << policy.slope << " over episodes "
            << a.window_begin << ".." << end << '\n';

  if (a.model_every > 0) {
    // Replays the run to recover the pre-update model of sampled episodes.
    std::vector<ModelSnapshot> snaps;
    Trainer replay(cfg);
    replay.set_model_observer([&](int t, const DynamicsModel& m, std::span<const Transition> data) {
      if (t % a.model_every == 0) snaps.push_back({t, m, {data.begin(), data.end()}});
    });
    for (const EpisodeRecord& logged : log) {
      if (replay.done()) break;
      const EpisodeRecord r = replay.run_episode();
      if (r.episode != logged.episode || !(r.g == logged.g || (std::isnan(r.g) && std::isnan(logged.g))))
        throw NumericFault("regret: replay of episode " + std::to_string(r.episode) + " differs from the log");
    }
    ModelComparatorOptions opt;
    opt.steps = a.model_steps;
    opt.lr = cfg.model.lr > 0.0 ? cfg.model.lr : 1e-3;
    opt.batch_size = static_cast<std::size_t>(cfg.model.batch_size);
    opt.seed = cfg.seed;
    const RegretReport model = model_regret(snaps, opt, a.window_begin, end);
    j["model"] = to_json(model);
    std::cout << "model regret: total " << model.total() << ", log-log slope " << model.slope << " ("
              << snaps.size() << " sampled episodes)\n";
  }
  if (!a.out.empty()) write_json(a.out, j);
  return kExitOk;
}

// ----------------------------------------------------------------- export

struct ExportArgs {
  std::string log;
  std::string out;
};

int cmd_export(const ExportArgs& a) {
  std::ifstream in(a.log);
  if (!in) throw ContractError("export: cannot open log '" + a.log + "'");
  const TrainingLog log = read_jsonl(in);
  if (a.out.empty()) {
    write_csv(std::cout, log);
    return kExitOk;
  }
  std::ofstream out(a.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + a.out + "'");
  write_csv(out, log);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online model-based policy learning with closed-loop gradients"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  TrainArgs train;
  CLI::App* c_train = app.add_subcommand("train", "Run the training loop");
  add_common(c_train, train.common);
  c_train->add_option("-o,--out", train.out, "Output directory (overrides output.dir)");
  c_train->add_option("--resume", train.resume, "Checkpoint to resume from");

  EvalArgs eval;
  CLI::App* c_eval = app.add_subcommand("eval", "Evaluate a policy on the line/circle/spline suite");
  add_common(c_eval, eval.common);
  c_eval->add_option("--checkpoint", eval.checkpoint, "Checkpoint with the policy (default: initial policy)");
  c_eval->add_option("-o,--out", eval.out, "Write the report as JSON");
  c_eval->add_option("--payload", eval.payload, "Payload mass in kg (arm only)");

  GradCheckArgs gc;
  CLI::App* c_gc = app.add_subcommand("grad-check", "Compare closed-loop gradients with finite differences");
  add_common(c_gc, gc.common);
  c_gc->add_option("--checkpoint", gc.checkpoint, "Checkpoint with policy and model (default: initial)");
  c_gc->add_option("--horizon", gc.horizon, "Rollout horizon (overrides config; one segment)");
  c_gc->add_option("-o,--out", gc.out, "Write the report as JSON");
  c_gc->add_flag("--corrupt-k", gc.corrupt_k, "Test hook: pair each K block with the next step's policy Jacobian");

  RegretArgs rg;
  CLI::App* c_rg = app.add_subcommand("regret", "Empirical policy (and model) regret of a finished run");
  add_common(c_rg, rg.common);
  c_rg->add_option("--log", rg.log, "log.jsonl of the run")->required();
  c_rg->add_option("--checkpoint", rg.checkpoint, "Final checkpoint of the run")->required();
  c_rg->add_option("--factor", rg.factor, "Comparator budget as a multiple of the run length")->capture_default_str();
  c_rg->add_option("--eval-every", rg.eval_every, "Comparator selection cadence")->capture_default_str();
  c_rg->add_option("--window-begin", rg.window_begin, "First episode of the slope fit")->capture_default_str();
  c_rg->add_option("--window-end", rg.window_end, "Last episode of the slope fit (default: last logged)");
  c_rg->add_option("--model-every", rg.model_every, "Model regret every k-th episode (0 = off)")->capture_default_str();
  c_rg->add_option("--model-steps", rg.model_steps, "Adam steps per model comparator")->capture_default_str();
  c_rg->add_option("-o,--out", rg.out, "Write the report as JSON");

  ExportArgs ex;
  CLI::App* c_ex = app.add_subcommand("export", "Convert log.jsonl to CSV");
  c_ex->add_option("--log", ex.log, "log.jsonl to convert")->required();
  c_ex->add_option("-o,--out", ex.out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (c_train->parsed()) return cmd_train(train);
    if (c_eval->parsed()) return cmd_eval(eval);
    if (c_gc->parsed()) return cmd_grad_check(gc, *c_gc);
    if (c_rg->parsed()) return cmd_regret(rg);
    if (c_ex->parsed()) return cmd_export(ex);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericFault& e) {
    std::cerr << "fault: " << e.what() << '\n';
    return kExitFault;
  } catch (const std::exception& e) {
    std::cerr << "fault: " << e.what() << '\n';
    return kExitFault;
  }
  return kExitConfig;
}
