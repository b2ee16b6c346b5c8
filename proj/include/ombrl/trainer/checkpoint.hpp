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

// Binary checkpoint: little-endian, magic + version + tagged sections +
// FNV-1a-64 trailer. The byte layout is specified in
// docs/checkpoint_format.md.

#ifndef OMBRL_TRAINER_CHECKPOINT_HPP_
#define OMBRL_TRAINER_CHECKPOINT_HPP_

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ombrl/model/dynamics_model.hpp"
#include "ombrl/policy/policy.hpp"

namespace ombrl {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::array<char, 8> kCheckpointMagic{'O', 'M', 'B', 'R', 'L', 'C', 'K', '\0'};

class CheckpointError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Everything needed to continue a run at `next_episode`. Random streams are
// derived from (seed, stream, episode), so no generator state is stored.
struct TrainerState {
  std::uint64_t seed = 0;
  int next_episode = 0;
  double payload = 0.0;
  DynamicsModel model;
  AdamState model_opt;
  Policy policy;
  ReplayBuffer buffer;
};

namespace detail {

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(const Vec& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& data() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t n, std::string what) : p_(data), end_(data + n), what_(std::move(what)) {}

  std::uint8_t u8() { return *take(1); }
  std::uint32_t u32() {
    const std::uint8_t* b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const std::uint8_t* b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  Vec vec() {
    const std::uint64_t n = u64();
    if (n > remaining() / 8) fail("vector length exceeds section");
    Vec v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    if (remaining() < n) fail("unexpected end of data");
    const std::uint8_t* b = p_;
    p_ += n;
    return b;
  }
  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }
  void expect_end() const {
    if (remaining() != 0) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& msg) const { throw CheckpointError("checkpoint " + what_ + ": " + msg); }

 private:
  const std::uint8_t* p_;
  const std::uint8_t* end_;
  std::string what_;
};

inline void write_net(ByteWriter& w, const MlpNet& net) {
  w.u32(static_cast<std::uint32_t>(net.layer_dims().size()));
  for (int d : net.layer_dims()) w.i32(d);
  w.u8(static_cast<std::uint8_t>(net.activation()));
  w.vec(net.params());
}

inline MlpNet read_net(ByteReader& r) {
  const std::uint32_t count = r.u32();
  if (count < 2 || count > 64) r.fail("bad layer count");
  std::vector<int> dims(count);
  for (auto& d : dims) {
    d = r.i32();
    if (d <= 0) r.fail("bad layer width");
  }
  const std::uint8_t act = r.u8();
  if (act > static_cast<std::uint8_t>(Activation::kIdentity)) r.fail("bad activation");
  MlpNet net(dims, static_cast<Activation>(act));
  const Vec params = r.vec();
  if (params.size() != net.num_params()) r.fail("parameter count does not match layer widths");
  net.set_params(params);
  return net;
}

inline void write_stats(ByteWriter& w, const RunningStats& s) {
  w.f64(s.count);
  w.vec(s.mean);
  w.vec(s.m2);
  w.u8(s.frozen ? 1 : 0);
}

inline RunningStats read_stats(ByteReader& r) {
  RunningStats s;
  s.count = r.f64();
  s.mean = r.vec();
  s.m2 = r.vec();
  s.frozen = r.u8() != 0;
  if (s.mean.size() != s.m2.size()) r.fail("statistics length mismatch");
  return s;
}

inline std::vector<std::uint8_t> section_meta(const TrainerState& s) {
  ByteWriter w;
  w.u64(s.seed);
  w.i32(s.next_episode);
  w.f64(s.payload);
  return std::move(w.data());
}

inline std::vector<std::uint8_t> section_model(const DynamicsModel& m) {
  ByteWriter w;
  w.i32(m.state_dim());
  w.i32(m.action_dim());
  w.u8(static_cast<std::uint8_t>(m.target()));
  w.f64(m.dt());
  w.u8(m.normalized() ? 1 : 0);
  write_net(w, m.net());
  write_stats(w, m.input_stats());
  write_stats(w, m.output_stats());
  return std::move(w.data());
}

inline std::vector<std::uint8_t> section_adam(const AdamState& a) {
  ByteWriter w;
  w.vec(a.first_moment);
  w.vec(a.second_moment);
  w.u64(a.step_count);
  w.f64(a.beta1);
  w.f64(a.beta2);
  w.f64(a.eps_adam);
  return std::move(w.data());
}

inline std::vector<std::uint8_t> section_policy(const Policy& p) {
  ByteWriter w;
  const PolicyLayout& l = p.layout();
  w.i32(l.state_dim);
  w.i32(l.reference_dim);
  w.i32(l.action_dim);
  w.i32(l.lookahead);
  w.i32(l.history);
  w.vec(l.state_scale);
  w.vec(l.reference_scale);
  w.vec(l.action_scale);
  write_net(w, p.net());
  return std::move(w.data());
}

inline std::vector<std::uint8_t> section_buffer(const ReplayBuffer& b) {
  ByteWriter w;
  w.u8(b.capacity() ? 1 : 0);
  w.u64(b.capacity().value_or(0));
  w.u64(b.size());
  for (const auto& t : b.transitions()) {
    w.i32(t.episode_index);
    w.vec(t.x);
    w.vec(t.u);
    w.vec(t.x_next);
  }
  return std::move(w.data());
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_checkpoint(const TrainerState& s) {
  const std::vector<std::pair<std::array<char, 4>, std::vector<std::uint8_t>>> sections{
      {{'M', 'E', 'T', 'A'}, detail::section_meta(s)},
      {{'M', 'O', 'D', 'L'}, detail::section_model(s.model)},
      {{'M', 'A', 'D', 'M'}, detail::section_adam(s.model_opt)},
      {{'P', 'O', 'L', 'I'}, detail::section_policy(s.policy)},
      {{'B', 'U', 'F', 'F'}, detail::section_buffer(s.buffer)},
  };
  detail::ByteWriter w;
  w.bytes(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [tag, payload] : sections) {
    w.bytes(tag.data(), 4);
    w.u64(payload.size());
    w.bytes(payload.data(), payload.size());
  }
  w.u64(detail::fnv1a64(w.data().data(), w.data().size()));
  return std::move(w.data());
}

// Parses a complete checkpoint image. Throws CheckpointError on any
// inconsistency; nothing is returned unless every section decoded.
inline TrainerState deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t kHeader = 8 + 4 + 4, kTrailer = 8;
  if (bytes.size() < kHeader + kTrailer) throw CheckpointError("checkpoint: file too short");
  if (std::memcmp(bytes.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0)
    throw CheckpointError("checkpoint: bad magic");
  detail::ByteReader head(bytes.data() + 8, bytes.size() - 8, "header");
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint: version " + std::to_string(version) + " not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  const std::size_t body = bytes.size() - kTrailer;
  detail::ByteReader trailer(bytes.data() + body, kTrailer, "trailer");
  if (trailer.u64() != detail::fnv1a64(bytes.data(), body))
    throw CheckpointError("checkpoint: checksum mismatch (truncated or corrupted)");

  const std::uint32_t count = head.u32();
  detail::ByteReader r(bytes.data() + kHeader, body - kHeader, "sections");
  std::map<std::string, std::pair<const std::uint8_t*, std::size_t>> sections;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t* tag = r.take(4);
    const std::uint64_t len = r.u64();
    if (len > r.remaining()) r.fail("section length exceeds file");
    sections[std::string(reinterpret_cast<const char*>(tag), 4)] = {r.take(len), len};
  }
  r.expect_end();
  auto open = [&](const char* tag) {
    auto it = sections.find(tag);
    if (it == sections.end()) throw CheckpointError(std::string("checkpoint: missing section ") + tag);
    return detail::ByteReader(it->second.first, it->second.second, tag);
  };

  TrainerState s;
  {
    auto m = open("META");
    s.seed = m.u64();
    s.next_episode = m.i32();
    s.payload = m.f64();
    m.expect_end();
    if (s.next_episode < 0) m.fail("negative episode counter");
  }
  try {
    {
      auto m = open("MODL");
      const int n = m.i32(), mm = m.i32();
      const std::uint8_t target = m.u8();
      if (target > 1) m.fail("bad model target");
      const double dt = m.f64();
      const bool normalize = m.u8() != 0;
      MlpNet net = detail::read_net(m);
      RunningStats in = detail::read_stats(m), out = detail::read_stats(m);
      m.expect_end();
      s.model = DynamicsModel(std::move(net), n, mm, static_cast<ModelTarget>(target), dt, normalize);
      s.model.set_stats(std::move(in), std::move(out));
    }
    {
      auto a = open("MADM");
      s.model_opt.first_moment = a.vec();
      s.model_opt.second_moment = a.vec();
      s.model_opt.step_count = a.u64();
      s.model_opt.beta1 = a.f64();
      s.model_opt.beta2 = a.f64();
      s.model_opt.eps_adam = a.f64();
      a.expect_end();
      if (s.model_opt.first_moment.size() != s.model.net().num_params() ||
          s.model_opt.second_moment.size() != s.model.net().num_params())
        a.fail("optimizer length does not match the model");
    }
    {
      auto p = open("POLI");
      PolicyLayout l;
      l.state_dim = p.i32();
      l.reference_dim = p.i32();
      l.action_dim = p.i32();
      l.lookahead = p.i32();
      l.history = p.i32();
      l.state_scale = p.vec();
      l.reference_scale = p.vec();
      l.action_scale = p.vec();
      MlpNet net = detail::read_net(p);
      p.expect_end();
      s.policy = Policy(std::move(net), std::move(l));
    }
    {
      auto b = open("BUFF");
      const bool has_cap = b.u8() != 0;
      const std::uint64_t cap = b.u64();
      const std::uint64_t n = b.u64();
      std::deque<Transition> data;
      for (std::uint64_t i = 0; i < n; ++i) {
        Transition t;
        t.episode_index = b.i32();
        t.x = b.vec();
        t.u = b.vec();
        t.x_next = b.vec();
        data.push_back(std::move(t));
      }
      b.expect_end();
      s.buffer = ReplayBuffer::from_transitions(std::move(data),
                                                has_cap ? std::optional<std::size_t>(cap) : std::nullopt);
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const ContractError& e) {
    throw CheckpointError(std::string("checkpoint: inconsistent contents: ") + e.what());
  }
  return s;
}

// Written to a temporary file and renamed, so a crash never leaves a
// partial checkpoint under `path`.
inline void checkpoint_save(const TrainerState& s, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(s);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("checkpoint: cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("checkpoint: write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline TrainerState checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace ombrl

#endif  // OMBRL_TRAINER_CHECKPOINT_HPP_
