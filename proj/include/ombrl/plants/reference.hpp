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

#ifndef OMBRL_PLANTS_REFERENCE_HPP_
#define OMBRL_PLANTS_REFERENCE_HPP_

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ombrl/plants/plant.hpp"

namespace ombrl {

struct ReferenceTrajectory {
  std::vector<Vec> points;  // reference-space points, one per control step
  double dt = 0.01;
  std::string label;

  int horizon() const { return static_cast<int>(points.size()); }
};

// Quintic p(t) on [0, T] matching position, velocity and acceleration at
// both ends.
class Quintic {
 public:
  Quintic(double p0, double v0, double a0, double p1, double v1, double a1, double duration)
      : duration_(duration) {
    require(duration > 0.0, "Quintic: duration must be positive");
    const double T = duration, T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    c_[0] = p0;
    c_[1] = v0;
    c_[2] = 0.5 * a0;
    c_[3] = (20.0 * (p1 - p0) - (8.0 * v1 + 12.0 * v0) * T - (3.0 * a0 - a1) * T2) / (2.0 * T3);
    c_[4] = (30.0 * (p0 - p1) + (14.0 * v1 + 16.0 * v0) * T + (3.0 * a0 - 2.0 * a1) * T2) / (2.0 * T4);
    c_[5] = (12.0 * (p1 - p0) - 6.0 * (v1 + v0) * T - (a0 - a1) * T2) / (2.0 * T5);
  }

  double position(double t) const {
    return c_[0] + t * (c_[1] + t * (c_[2] + t * (c_[3] + t * (c_[4] + t * c_[5]))));
  }
  double velocity(double t) const {
    return c_[1] + t * (2.0 * c_[2] + t * (3.0 * c_[3] + t * (4.0 * c_[4] + t * 5.0 * c_[5])));
  }
  double acceleration(double t) const {
    return 2.0 * c_[2] + t * (6.0 * c_[3] + t * (12.0 * c_[4] + t * 20.0 * c_[5]));
  }
  double duration() const { return duration_; }

 private:
  std::array<double, 6> c_{};
  double duration_;
};

// H-step reference made of `horizon / segment_steps` quintic segments.
// Knots are drawn uniformly from the reference box; the spline rests at
// every knot (zero velocity and acceleration), which chains value,
// velocity and acceleration continuously and keeps every point inside the
// box.
inline ReferenceTrajectory sample_reference(const PlantConfig& c, int horizon, int segment_steps, Rng& rng) {
  require(segment_steps > 0, "sample_reference: segment length must be positive");
  require(horizon > 0 && horizon % segment_steps == 0,
          "sample_reference: horizon must be a positive multiple of the segment length");
  const int d = spline_dim(c);
  const int segments = horizon / segment_steps;
  std::vector<Vec> knots;
  knots.reserve(segments + 1);
  for (int k = 0; k <= segments; ++k) {
    Vec p(d);
    for (int i = 0; i < d; ++i) {
      std::uniform_real_distribution<double> dist(c.reference_box.lower[i], c.reference_box.upper[i]);
      p[i] = dist(rng);
    }
    knots.push_back(std::move(p));
  }
  ReferenceTrajectory ref;
  ref.dt = c.dt;
  ref.label = "spline";
  ref.points.reserve(horizon);
  const double duration = segment_steps * c.dt;
  for (int s = 0; s < segments; ++s) {
    std::vector<Quintic> polys;
    polys.reserve(d);
    for (int i = 0; i < d; ++i) polys.emplace_back(knots[s][i], 0.0, 0.0, knots[s + 1][i], 0.0, 0.0, duration);
    for (int step = 0; step < segment_steps; ++step) {
      const double t = step * c.dt;
      Vec pos(d), vel(d);
      for (int i = 0; i < d; ++i) {
        pos[i] = polys[i].position(t);
        vel[i] = polys[i].velocity(t);
      }
      ref.points.push_back(reference_from_spline(c, pos, vel));
    }
  }
  return ref;
}

namespace detail {

// Minimum-jerk time scaling s(t) in [0, 1] and its derivative.
inline std::pair<double, double> min_jerk(double t, double duration) {
  const double r = std::clamp(t / duration, 0.0, 1.0);
  const double s = r * r * r * (10.0 - 15.0 * r + 6.0 * r * r);
  const double ds = 30.0 * r * r * (1.0 - r) * (1.0 - r) / duration;
  return {s, ds};
}

}  // namespace detail

// Fixed evaluation suite: a straight line, a circle (a sinusoid for 1-D
// position spaces) and a seeded spline, all inside the reference box.
inline std::vector<ReferenceTrajectory> evaluation_suite(const PlantConfig& c, int horizon, int segment_steps,
                                                         std::uint64_t seed) {
  require(horizon > 1, "evaluation_suite: horizon must exceed 1");
  const int d = spline_dim(c);
  const Vec center = c.reference_box.center();
  const Vec half = c.reference_box.half_extent();
  const double duration = horizon * c.dt;
  std::vector<ReferenceTrajectory> suite;

  ReferenceTrajectory line;
  line.dt = c.dt;
  line.label = "line";
  const Vec start = center - 0.8 * half;
  const Vec end = center + 0.8 * half;
  for (int k = 0; k < horizon; ++k) {
    const auto [s, ds] = detail::min_jerk(k * c.dt, duration);
    line.points.push_back(reference_from_spline(c, start + s * (end - start), ds * (end - start)));
  }
  suite.push_back(std::move(line));

  ReferenceTrajectory circle;
  circle.dt = c.dt;
  circle.label = "circle";
  const double radius = 0.6 * half.minCoeff();
  const double omega = 2.0 * M_PI / duration;
  for (int k = 0; k < horizon; ++k) {
    const double t = k * c.dt;
    Vec pos = center, vel = Vec::Zero(d);
    pos[0] += radius * std::sin(omega * t);
    vel[0] = radius * omega * std::cos(omega * t);
    if (d > 1) {
      pos[1] += radius * (1.0 - std::cos(omega * t)) - radius;
      vel[1] = radius * omega * std::sin(omega * t);
    }
    circle.points.push_back(reference_from_spline(c, pos, vel));
  }
  suite.push_back(std::move(circle));

  Rng rng(seed);
  ReferenceTrajectory spline = sample_reference(c, horizon, segment_steps, rng);
  spline.label = "spline";
  suite.push_back(std::move(spline));
  return suite;
}

}  // namespace ombrl

#endif  // OMBRL_PLANTS_REFERENCE_HPP_
