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

#ifndef OMBRL_MODEL_REPLAY_BUFFER_HPP_
#define OMBRL_MODEL_REPLAY_BUFFER_HPP_

#include <cstddef>
#include <deque>
#include <optional>
#include <random>
#include <vector>

#include "ombrl/common.hpp"

namespace ombrl {

struct Transition {
  Vec x;
  Vec u;
  Vec x_next;
  int episode_index = 0;
};

// Append-only store of transitions in insertion order. With a capacity set,
// overflow evicts whole episodes, oldest first.
class ReplayBuffer {
 public:
  struct EpisodeSpan {
    int episode_index;
    std::size_t count;
  };

  ReplayBuffer() = default;
  explicit ReplayBuffer(std::optional<std::size_t> capacity) : capacity_(capacity) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::optional<std::size_t> capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return data_[i]; }
  const std::deque<Transition>& transitions() const { return data_; }
  const std::vector<EpisodeSpan>& episodes() const { return spans_; }

  // Adds (states[k], actions[k], states[k+1]) for every action.
  void push_episode(const std::vector<Vec>& states, const std::vector<Vec>& actions, int episode_index) {
    require(episode_index >= 0, "push_episode: negative episode index");
    require(states.size() == actions.size() + 1, "push_episode: need one more state than actions");
    require(spans_.empty() || spans_.back().episode_index < episode_index,
            "push_episode: episode indices must increase");
    for (std::size_t k = 0; k < actions.size(); ++k) {
      require(states[k].allFinite() && actions[k].allFinite() && states[k + 1].allFinite(),
              "push_episode: non-finite transition");
      data_.push_back({states[k], actions[k], states[k + 1], episode_index});
    }
    spans_.push_back({episode_index, actions.size()});
    evict();
  }

  // Uniform with replacement over the whole buffer.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const {
    require(!data_.empty(), "sample_minibatch: buffer is empty");
    std::uniform_int_distribution<std::size_t> dist(0, data_.size() - 1);
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx) i = dist(rng);
    return idx;
  }

  std::vector<Transition> sample_minibatch(std::size_t batch_size, Rng& rng) const {
    std::vector<Transition> batch;
    batch.reserve(batch_size);
    for (std::size_t i : sample_indices(batch_size, rng)) batch.push_back(data_[i]);
    return batch;
  }

  // Transitions stamped with `episode_index`; empty if absent or evicted.
  std::vector<Transition> episode(int episode_index) const {
    std::size_t begin = 0;
    for (const auto& s : spans_) {
      if (s.episode_index == episode_index) {
        return {data_.begin() + static_cast<std::ptrdiff_t>(begin),
                data_.begin() + static_cast<std::ptrdiff_t>(begin + s.count)};
      }
      begin += s.count;
    }
    return {};
  }

  std::optional<int> last_episode_index() const {
    if (spans_.empty()) return std::nullopt;
    return spans_.back().episode_index;
  }

  // Restores a buffer from its transitions (used by checkpoint loading).
  static ReplayBuffer from_transitions(std::deque<Transition> data, std::optional<std::size_t> capacity) {
    ReplayBuffer b(capacity);
    for (const auto& t : data) {
      if (b.spans_.empty() || b.spans_.back().episode_index != t.episode_index) {
        require(b.spans_.empty() || b.spans_.back().episode_index < t.episode_index,
                "ReplayBuffer: episode indices out of order");
        b.spans_.push_back({t.episode_index, 0});
      }
      b.spans_.back().count += 1;
    }
    b.data_ = std::move(data);
    return b;
  }

 private:
  void evict() {
    if (!capacity_) return;
    // The newest episode is always kept, even if it alone exceeds capacity.
    while (data_.size() > *capacity_ && spans_.size() > 1) {
      const std::size_t n = spans_.front().count;
      data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(n));
      spans_.erase(spans_.begin());
    }
  }

  std::deque<Transition> data_;
  std::vector<EpisodeSpan> spans_;
  std::optional<std::size_t> capacity_;
};

}  // namespace ombrl

#endif  // OMBRL_MODEL_REPLAY_BUFFER_HPP_
