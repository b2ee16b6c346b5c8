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

// Episode-to-episode drift proxy.
//
// The quantity of interest is the total-variation distance between the
// transition distributions of consecutive episodes, which cannot be
// estimated from samples without density estimation. This module reports
// the energy distance
//
//   E(P, Q) = 2 E|X - Y| - E|X - X'| - E|Y - Y'|
//
// between the two (x, u, x+) samples after standardizing every coordinate
// with the pooled mean and spread. It is a proxy only: it is zero for
// identical samples and grows with distribution shift, but bounds nothing
// about the total-variation distance.

#ifndef OMBRL_DIAGNOSTICS_DRIFT_HPP_
#define OMBRL_DIAGNOSTICS_DRIFT_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ombrl/model/replay_buffer.hpp"

namespace ombrl {

namespace detail {

inline Mat stack_rows(std::span<const Transition> ts, std::size_t max_samples) {
  const std::size_t stride = std::max<std::size_t>(1, (ts.size() + max_samples - 1) / max_samples);
  const std::size_t rows = (ts.size() + stride - 1) / stride;
  const Eigen::Index d = ts.front().x.size() * 2 + ts.front().u.size();
  Mat out(static_cast<Eigen::Index>(rows), d);
  for (std::size_t i = 0, r = 0; i < ts.size(); i += stride, ++r)
    out.row(static_cast<Eigen::Index>(r)) << ts[i].x.transpose(), ts[i].u.transpose(), ts[i].x_next.transpose();
  return out;
}

inline double mean_pair_distance(const Mat& a, const Mat& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) sum += (a.row(i) - b.row(j)).norm();
  return sum / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

// Lexicographic order on sample matrices, used to make the result exactly
// symmetric in its arguments.
inline bool sample_less(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return a.data()[i] < b.data()[i];
  return false;
}

}  // namespace detail

// Energy distance between standardized rows of `a` and `b` (V-statistic).
inline double energy_distance(Mat a, Mat b) {
  require(a.rows() > 0 && b.rows() > 0, "drift_proxy: empty sample");
  require(a.cols() == b.cols(), "drift_proxy: dimension mismatch");
  if (detail::sample_less(b, a)) std::swap(a, b);
  const double na = static_cast<double>(a.rows()), nb = static_cast<double>(b.rows());
  const Eigen::RowVectorXd mean = (a.colwise().sum() + b.colwise().sum()) / (na + nb);
  Eigen::RowVectorXd var = ((a.rowwise() - mean).array().square().colwise().sum() +
                            (b.rowwise() - mean).array().square().colwise().sum()) /
                           (na + nb);
  const Eigen::RowVectorXd inv =
      var.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; });
  a = (a.rowwise() - mean).array().rowwise() * inv.array();
  b = (b.rowwise() - mean).array().rowwise() * inv.array();
  const double cross = detail::mean_pair_distance(a, b);
  const double e = 2.0 * cross - detail::mean_pair_distance(a, a) - detail::mean_pair_distance(b, b);
  return std::max(e, 0.0);
}

inline double drift_proxy(std::span<const Transition> a, std::span<const Transition> b,
                          std::size_t max_samples = 1000) {
  require(!a.empty() && !b.empty(), "drift_proxy: empty transition set");
  return energy_distance(detail::stack_rows(a, max_samples), detail::stack_rows(b, max_samples));
}

}  // namespace ombrl

#endif  // OMBRL_DIAGNOSTICS_DRIFT_HPP_
