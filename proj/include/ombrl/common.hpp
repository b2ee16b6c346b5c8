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

#ifndef OMBRL_COMMON_HPP_
#define OMBRL_COMMON_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ombrl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

// Raised when a caller violates a documented precondition (dimension
// mismatch, out-of-range hyperparameter, malformed file).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when arithmetic produced a non-finite value somewhere it must not.
class NumericFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named random streams. Every stochastic component draws from its own
// stream so it can be replayed without touching the others.
enum class Stream : std::uint64_t {
  kModelInit = 1,
  kPolicyInit = 2,
  kReference = 3,
  kProcessNoise = 4,
  kMinibatch = 5,
  kDiagnostics = 6,
  kEvaluation = 7,
  kComparator = 8,
};

// Sub-seed for (root seed, stream, index). Fixed rule: two rounds of
// splitmix64 over the xor-folded triple.
inline std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index = 0) {
  std::uint64_t h = mix64(root ^ mix64(static_cast<std::uint64_t>(stream) * 0x100000001b3ULL));
  return mix64(h ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t root, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

}  // namespace ombrl

#endif  // OMBRL_COMMON_HPP_
