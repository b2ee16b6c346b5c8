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

#ifndef OMBRL_TRAINER_LOG_HPP_
#define OMBRL_TRAINER_LOG_HPP_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ombrl/common.hpp"

namespace ombrl {

inline constexpr int kLogSchemaVersion = 1;

// One line of the training log. Quantities that were not computed for an
// episode (faulted rollout, oracle off) are NaN in memory and null on disk.
struct EpisodeRecord {
  int episode = 0;
  double g = NAN;                 // episode cost g_t on the real plant
  int steps = 0;                  // executed steps (< horizon if faulted)
  bool faulted = false;
  double probe_loss = NAN;        // model MSE on this episode's transitions
  double train_loss = NAN;        // mean normalized minibatch loss
  int model_faults = 0;           // skipped model steps
  double grad_norm = NAN;         // ||grad g|| (model-based estimate)
  double step_norm = NAN;         // ||phi_{t+1} - phi_t||
  double lambda_min = NAN;
  double lambda_max = NAN;
  double drift_proxy = NAN;       // energy distance to the previous episode
  double delta = NAN;             // ||grad_est - grad_true||
  double delta_relative = NAN;
  double delta_cosine = NAN;
  double payload = NAN;
  double eta = NAN;
  bool action_clamped = false;
  std::uint64_t reference_seed = 0;
  std::uint64_t noise_seed = 0;
};

using TrainingLog = std::vector<EpisodeRecord>;

namespace detail {

inline nlohmann::ordered_json nullable(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

inline double read_nullable(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ContractError(std::string("log: missing field '") + key + "'");
  if (it->is_null()) return NAN;
  if (!it->is_number()) throw ContractError(std::string("log: field '") + key + "' is not a number");
  return it->get<double>();
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const EpisodeRecord& r) {
  using detail::nullable;
  nlohmann::ordered_json j;
  j["schema"] = kLogSchemaVersion;
  j["episode"] = r.episode;
  j["g_t"] = nullable(r.g);
  j["steps"] = r.steps;
  j["faulted"] = r.faulted;
  j["probe_loss"] = nullable(r.probe_loss);
  j["train_loss"] = nullable(r.train_loss);
  j["model_faults"] = r.model_faults;
  j["grad_norm"] = nullable(r.grad_norm);
  j["step_norm"] = nullable(r.step_norm);
  j["lambda_min"] = nullable(r.lambda_min);
  j["lambda_max"] = nullable(r.lambda_max);
  j["drift_proxy"] = nullable(r.drift_proxy);
  j["delta_t"] = nullable(r.delta);
  j["delta_relative"] = nullable(r.delta_relative);
  j["delta_cosine"] = nullable(r.delta_cosine);
  j["payload"] = nullable(r.payload);
  j["eta"] = nullable(r.eta);
  j["action_clamped"] = r.action_clamped;
  j["reference_seed"] = r.reference_seed;
  j["noise_seed"] = r.noise_seed;
  return j;
}

inline EpisodeRecord record_from_json(const nlohmann::json& j) {
  using detail::read_nullable;
  if (!j.is_object()) throw ContractError("log: record is not an object");
  if (j.value("schema", -1) != kLogSchemaVersion) throw ContractError("log: unsupported schema version");
  EpisodeRecord r;
  try {
    r.episode = j.at("episode").get<int>();
    r.steps = j.at("steps").get<int>();
    r.faulted = j.at("faulted").get<bool>();
    r.model_faults = j.at("model_faults").get<int>();
    r.action_clamped = j.at("action_clamped").get<bool>();
    r.reference_seed = j.at("reference_seed").get<std::uint64_t>();
    r.noise_seed = j.at("noise_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("log: ") + e.what());
  }
  r.g = read_nullable(j, "g_t");
  r.probe_loss = read_nullable(j, "probe_loss");
  r.train_loss = read_nullable(j, "train_loss");
  r.grad_norm = read_nullable(j, "grad_norm");
  r.step_norm = read_nullable(j, "step_norm");
  r.lambda_min = read_nullable(j, "lambda_min");
  r.lambda_max = read_nullable(j, "lambda_max");
  r.drift_proxy = read_nullable(j, "drift_proxy");
  r.delta = read_nullable(j, "delta_t");
  r.delta_relative = read_nullable(j, "delta_relative");
  r.delta_cosine = read_nullable(j, "delta_cosine");
  r.payload = read_nullable(j, "payload");
  r.eta = read_nullable(j, "eta");
  return r;
}

inline void write_jsonl(std::ostream& out, const EpisodeRecord& r) { out << to_json(r).dump() << '\n'; }

inline TrainingLog read_jsonl(std::istream& in) {
  TrainingLog log;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      log.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ContractError("log line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ContractError& e) {
      throw ContractError("log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return log;
}

// CSV export: fixed columns, shortest round-trip decimal, empty cell for
// absent values.
inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"episode",    "g_t",         "probe_loss", "grad_norm", "lambda_min",
                                             "lambda_max", "drift_proxy", "delta_t",    "payload"};
  return cols;
}

namespace detail {

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_cell(const std::string& s, int lineno) {
  if (s.empty()) return NAN;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ContractError("csv line " + std::to_string(lineno) + ": bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline void write_csv(std::ostream& out, const TrainingLog& log) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  using detail::format_double;
  for (const auto& r : log) {
    out << r.episode << ',' << format_double(r.g) << ',' << format_double(r.probe_loss) << ','
        << format_double(r.grad_norm) << ',' << format_double(r.lambda_min) << ',' << format_double(r.lambda_max)
        << ',' << format_double(r.drift_proxy) << ',' << format_double(r.delta) << ',' << format_double(r.payload)
        << '\n';
  }
}

// Parses an export back into records; only the exported columns are set.
inline TrainingLog read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ContractError("csv: empty file");
  std::string expected;
  for (const auto& c : csv_columns()) expected += (expected.empty() ? "" : ",") + c;
  if (line != expected) throw ContractError("csv: unexpected header");
  TrainingLog log;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != csv_columns().size())
      throw ContractError("csv line " + std::to_string(lineno) + ": wrong column count");
    EpisodeRecord r;
    const double ep = detail::parse_cell(cells[0], lineno);
    r.episode = static_cast<int>(ep);
    r.g = detail::parse_cell(cells[1], lineno);
    r.probe_loss = detail::parse_cell(cells[2], lineno);
    r.grad_norm = detail::parse_cell(cells[3], lineno);
    r.lambda_min = detail::parse_cell(cells[4], lineno);
    r.lambda_max = detail::parse_cell(cells[5], lineno);
    r.drift_proxy = detail::parse_cell(cells[6], lineno);
    r.delta = detail::parse_cell(cells[7], lineno);
    r.payload = detail::parse_cell(cells[8], lineno);
    log.push_back(r);
  }
  return log;
}

}  // namespace ombrl

#endif  // OMBRL_TRAINER_LOG_HPP_
