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

// Simulated ground-truth plants. Three kinds share one config type:
//
//   linear     x+ = A x + B u                     (exact-Jacobian oracle plant)
//   pendulum   semi-implicit Euler on
//              th'' = (u - b th' - m g l sin th) / (m l^2),  state (th, th')
//   arm        2-link planar arm on a tilted work plane (gravity component
//              `gravity` along the plane), each joint driven through a
//              first-order actuator lag on a dead-banded command; payload is
//              a point mass at the end effector.
//              state (q1, q2, dq1, dq2, tau1, tau2)
//
// Reference trajectories live in "reference space": the full state for the
// linear and pendulum plants, end-effector position for the arm.

#ifndef OMBRL_PLANTS_PLANT_HPP_
#define OMBRL_PLANTS_PLANT_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "ombrl/common.hpp"

namespace ombrl {

enum class PlantKind { kLinear, kPendulum, kArm };

inline std::string_view to_string(PlantKind k) {
  switch (k) {
    case PlantKind::kLinear: return "linear";
    case PlantKind::kPendulum: return "pendulum";
    case PlantKind::kArm: return "arm";
  }
  return "linear";
}

inline PlantKind parse_plant_kind(std::string_view name) {
  if (name == "linear") return PlantKind::kLinear;
  if (name == "pendulum") return PlantKind::kPendulum;
  if (name == "arm" || name == "actuated-arm" || name == "actuated_arm") return PlantKind::kArm;
  throw ContractError("unknown plant kind '" + std::string(name) + "'");
}

struct Box {
  Vec lower;
  Vec upper;

  Eigen::Index dim() const { return lower.size(); }

  bool valid() const {
    return lower.size() == upper.size() && lower.allFinite() && upper.allFinite() &&
           (lower.array() <= upper.array()).all();
  }

  bool contains(const Vec& v) const {
    return v.size() == lower.size() && (v.array() >= lower.array()).all() &&
           (v.array() <= upper.array()).all();
  }

  // Clamp in place; returns true if any coordinate moved.
  bool clamp(Vec& v) const {
    bool moved = false;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double c = std::clamp(v[i], lower[i], upper[i]);
      if (c != v[i]) {
        moved = true;
        v[i] = c;
      }
    }
    return moved;
  }

  Vec center() const { return 0.5 * (lower + upper); }
  Vec half_extent() const { return 0.5 * (upper - lower); }

  static Box symmetric(const Vec& half) { return {-half, half}; }
};

struct PlantConfig {
  PlantKind kind = PlantKind::kLinear;
  double dt = 0.01;  // s

  // linear
  Mat a_matrix;
  Mat b_matrix;

  // pendulum
  double mass = 1.0;      // kg
  double length = 1.0;    // m
  double damping = 0.1;   // N m s / rad
  double gravity = 9.81;  // m / s^2

  // arm
  double link_length1 = 0.6;  // m
  double link_length2 = 0.5;  // m
  double link_mass1 = 1.0;    // kg, point mass at the elbow
  double link_mass2 = 0.5;    // kg, point mass at the end effector
  double joint_damping = 2.0;  // N m s / rad
  double actuator_lag = 0.05;  // s
  double deadband = 0.2;       // N m
  double payload = 1.0;        // kg, added at the end effector

  Box state_box;
  Box action_box;
  Box reference_box;  // in spline (position) space

  double process_noise_std = 0.0;
  double action_cost_weight = 0.0;  // lambda_u

  // Nominal magnitudes used to normalize policy inputs and outputs.
  Vec state_scale;
  Vec reference_scale;
  Vec action_scale;
};

inline int state_dim(const PlantConfig& c) {
  switch (c.kind) {
    case PlantKind::kLinear: return static_cast<int>(c.a_matrix.rows());
    case PlantKind::kPendulum: return 2;
    case PlantKind::kArm: return 6;
  }
  return 0;
}

inline int action_dim(const PlantConfig& c) {
  switch (c.kind) {
    case PlantKind::kLinear: return static_cast<int>(c.b_matrix.cols());
    case PlantKind::kPendulum: return 1;
    case PlantKind::kArm: return 2;
  }
  return 0;
}

inline int reference_dim(const PlantConfig& c) {
  switch (c.kind) {
    case PlantKind::kLinear: return state_dim(c);
    case PlantKind::kPendulum: return 2;
    case PlantKind::kArm: return 2;
  }
  return 0;
}

// Dimension of the position-like quantity splines are generated in.
inline int spline_dim(const PlantConfig& c) {
  switch (c.kind) {
    case PlantKind::kLinear: return state_dim(c);
    case PlantKind::kPendulum: return 1;
    case PlantKind::kArm: return 2;
  }
  return 0;
}

// True if the state carries velocities, i.e. the delta parameterization
// predicts a mechanical rate.
inline bool is_mechanical(const PlantConfig& c) { return c.kind != PlantKind::kLinear; }

inline void validate(const PlantConfig& c) {
  require(c.dt > 0.0 && std::isfinite(c.dt), "plant: dt must be positive");
  const int n = state_dim(c);
  const int m = action_dim(c);
  require(n > 0 && m > 0, "plant: empty state or action space");
  if (c.kind == PlantKind::kLinear) {
    require(c.a_matrix.rows() == c.a_matrix.cols(), "plant: A must be square");
    require(c.b_matrix.rows() == c.a_matrix.rows(), "plant: B rows must match A");
    require(c.a_matrix.allFinite() && c.b_matrix.allFinite(), "plant: A, B must be finite");
  }
  if (c.kind == PlantKind::kPendulum) {
    require(c.mass > 0 && c.length > 0 && c.damping >= 0 && c.gravity >= 0,
            "plant: pendulum parameters must be physically positive");
  }
  if (c.kind == PlantKind::kArm) {
    require(c.link_length1 > 0 && c.link_length2 > 0 && c.link_mass1 > 0 && c.link_mass2 > 0,
            "plant: arm links must have positive length and mass");
    require(c.joint_damping >= 0 && c.actuator_lag > 0 && c.deadband >= 0 && c.payload >= 0,
            "plant: arm actuator parameters out of range");
  }
  require(c.state_box.valid() && c.state_box.dim() == n, "plant: state box invalid");
  require(c.action_box.valid() && c.action_box.dim() == m, "plant: action box invalid");
  require(c.reference_box.valid() && c.reference_box.dim() == spline_dim(c),
          "plant: reference box invalid");
  require(c.process_noise_std >= 0.0, "plant: process noise must be non-negative");
  require(c.action_cost_weight >= 0.0, "plant: action cost weight must be non-negative");
  require(c.state_scale.size() == n && (c.state_scale.array() > 0).all(), "plant: state scale invalid");
  require(c.reference_scale.size() == reference_dim(c) && (c.reference_scale.array() > 0).all(),
          "plant: reference scale invalid");
  require(c.action_scale.size() == m && (c.action_scale.array() > 0).all(),
          "plant: action scale invalid");
}

inline PlantConfig make_linear_plant() {
  PlantConfig c;
  c.kind = PlantKind::kLinear;
  c.a_matrix.resize(3, 3);
  c.a_matrix << 0.90, 0.10, 0.00,
                0.00, 0.90, 0.10,
                0.05, 0.00, 0.85;
  c.b_matrix.resize(3, 2);
  c.b_matrix << 0.10, 0.00,
                0.00, 0.10,
                0.05, 0.05;
  c.state_box = Box::symmetric(Vec::Constant(3, 100.0));
  c.action_box = Box::symmetric(Vec::Constant(2, 100.0));
  c.reference_box = Box::symmetric(Vec::Constant(3, 1.0));
  c.state_scale = Vec::Ones(3);
  c.reference_scale = Vec::Ones(3);
  c.action_scale = Vec::Ones(2);
  return c;
}

inline PlantConfig make_pendulum_plant() {
  PlantConfig c;
  c.kind = PlantKind::kPendulum;
  c.state_box = {Vec{{-2.0 * M_PI, -25.0}}, Vec{{2.0 * M_PI, 25.0}}};
  c.action_box = Box::symmetric(Vec::Constant(1, 20.0));
  c.reference_box = Box::symmetric(Vec::Constant(1, 1.0));
  c.state_scale = Vec{{1.0, 3.0}};
  c.reference_scale = Vec{{0.2, 1.0}};
  c.action_scale = Vec::Constant(1, 5.0);
  return c;
}

inline PlantConfig make_arm_plant() {
  PlantConfig c;
  c.kind = PlantKind::kArm;
  Vec lo(6), hi(6);
  c.gravity = 2.0;
  lo << -M_PI, 0.05, -10.0, -10.0, -60.0, -60.0;
  hi << M_PI, M_PI - 0.05, 10.0, 10.0, 60.0, 60.0;
  c.state_box = {lo, hi};
  c.action_box = Box::symmetric(Vec::Constant(2, 60.0));
  c.reference_box = {Vec{{0.5, -0.3}}, Vec{{0.9, 0.2}}};
  c.state_scale = (Vec(6) << 1.0, 1.0, 2.0, 2.0, 20.0, 20.0).finished();
  c.reference_scale = Vec::Constant(2, 0.1);
  c.action_scale = Vec::Constant(2, 5.0);
  return c;
}

inline PlantConfig make_plant(PlantKind kind) {
  switch (kind) {
    case PlantKind::kLinear: return make_linear_plant();
    case PlantKind::kPendulum: return make_pendulum_plant();
    case PlantKind::kArm: return make_arm_plant();
  }
  return make_linear_plant();
}

// Returns a copy with a new end-effector payload. Only the arm's dynamics
// depend on it.
inline PlantConfig set_payload(const PlantConfig& c, double mass) {
  require(mass >= 0.0 && std::isfinite(mass), "set_payload: mass must be non-negative");
  PlantConfig out = c;
  out.payload = mass;
  return out;
}

namespace detail {

inline double deadband(double u, double d) {
  const double mag = std::max(std::abs(u) - d, 0.0);
  return u > 0 ? mag : -mag;
}

struct ArmTerms {
  Eigen::Matrix2d mass_matrix;
  Eigen::Vector2d bias;  // Coriolis + gravity + damping
};

inline ArmTerms arm_terms(const PlantConfig& c, const Vec& x) {
  const double q1 = x[0], q2 = x[1], dq1 = x[2], dq2 = x[3];
  const double l1 = c.link_length1, l2 = c.link_length2;
  const double m1 = c.link_mass1, m2 = c.link_mass2 + c.payload;
  const double c2 = std::cos(q2), s2 = std::sin(q2);
  const double h = m2 * l1 * l2 * s2;
  ArmTerms t;
  t.mass_matrix(0, 0) = (m1 + m2) * l1 * l1 + m2 * l2 * l2 + 2.0 * m2 * l1 * l2 * c2;
  t.mass_matrix(0, 1) = m2 * l2 * l2 + m2 * l1 * l2 * c2;
  t.mass_matrix(1, 0) = t.mass_matrix(0, 1);
  t.mass_matrix(1, 1) = m2 * l2 * l2;
  const double g1 = (m1 + m2) * c.gravity * l1 * std::cos(q1) + m2 * c.gravity * l2 * std::cos(q1 + q2);
  const double g2 = m2 * c.gravity * l2 * std::cos(q1 + q2);
  t.bias[0] = -h * (2.0 * dq1 * dq2 + dq2 * dq2) + g1 + c.joint_damping * dq1;
  t.bias[1] = h * dq1 * dq1 + g2 + c.joint_damping * dq2;
  return t;
}

inline Vec unclamped_next(const PlantConfig& c, const Vec& x, const Vec& u) {
  switch (c.kind) {
    case PlantKind::kLinear:
      return c.a_matrix * x + c.b_matrix * u;
    case PlantKind::kPendulum: {
      const double ml2 = c.mass * c.length * c.length;
      const double acc = (u[0] - c.damping * x[1] - c.mass * c.gravity * c.length * std::sin(x[0])) / ml2;
      Vec next(2);
      next[1] = x[1] + c.dt * acc;
      next[0] = x[0] + c.dt * next[1];
      return next;
    }
    case PlantKind::kArm: {
      Vec next(6);
      for (int j = 0; j < 2; ++j) {
        const double target = deadband(u[j], c.deadband);
        next[4 + j] = x[4 + j] + c.dt * (target - x[4 + j]) / c.actuator_lag;
      }
      const ArmTerms t = arm_terms(c, x);
      const Eigen::Vector2d torque(next[4], next[5]);
      const Eigen::Vector2d acc = t.mass_matrix.ldlt().solve(torque - t.bias);
      next[2] = x[2] + c.dt * acc[0];
      next[3] = x[3] + c.dt * acc[1];
      next[0] = x[0] + c.dt * next[2];
      next[1] = x[1] + c.dt * next[3];
      return next;
    }
  }
  return x;
}

}  // namespace detail

struct StepResult {
  Vec state;
  bool action_clamped = false;
  bool state_clamped = false;
  bool fault = false;
};

// x+ = f(x, u). Actions outside the action box are clamped (flagged); the
// result is clamped into the state box. Optional Gaussian process noise is
// drawn from `noise` when the config enables it.
inline StepResult step(const PlantConfig& c, const Vec& state, const Vec& action, Rng* noise = nullptr) {
  require(state.size() == state_dim(c), "step: state length mismatch");
  require(action.size() == action_dim(c), "step: action length mismatch");
  StepResult r;
  if (!state.allFinite() || !action.allFinite()) {
    r.state = state;
    r.fault = true;
    return r;
  }
  Vec u = action;
  r.action_clamped = c.action_box.clamp(u);
  r.state = detail::unclamped_next(c, state, u);
  if (noise != nullptr && c.process_noise_std > 0.0) {
    std::normal_distribution<double> gauss(0.0, c.process_noise_std);
    for (Eigen::Index i = 0; i < r.state.size(); ++i) r.state[i] += gauss(*noise);
  }
  if (!r.state.allFinite()) {
    r.fault = true;
    return r;
  }
  r.state_clamped = c.state_box.clamp(r.state);
  return r;
}

struct PlantJacobians {
  Mat dfdx;  // n x n
  Mat dfdu;  // n x m
};

// Exact for the linear plant; central differences of `step` (noise off)
// otherwise.
inline PlantJacobians true_jacobians(const PlantConfig& c, const Vec& state, const Vec& action,
                                     double fd_step = 1e-6) {
  require(state.size() == state_dim(c) && action.size() == action_dim(c),
          "true_jacobians: dimension mismatch");
  if (c.kind == PlantKind::kLinear) return {c.a_matrix, c.b_matrix};
  const int n = state_dim(c), m = action_dim(c);
  PlantJacobians j{Mat(n, n), Mat(n, m)};
  for (int k = 0; k < n; ++k) {
    Vec xp = state, xm = state;
    xp[k] += fd_step;
    xm[k] -= fd_step;
    j.dfdx.col(k) = (step(c, xp, action).state - step(c, xm, action).state) / (2.0 * fd_step);
  }
  for (int k = 0; k < m; ++k) {
    Vec up = action, um = action;
    up[k] += fd_step;
    um[k] -= fd_step;
    j.dfdu.col(k) = (step(c, state, up).state - step(c, state, um).state) / (2.0 * fd_step);
  }
  if (!j.dfdx.allFinite() || !j.dfdu.allFinite()) throw NumericFault("true_jacobians: non-finite");
  return j;
}

// End-effector position of the arm.
inline Eigen::Vector2d forward_kinematics(const PlantConfig& c, double q1, double q2) {
  return {c.link_length1 * std::cos(q1) + c.link_length2 * std::cos(q1 + q2),
          c.link_length1 * std::sin(q1) + c.link_length2 * std::sin(q1 + q2)};
}

// Elbow-positive inverse kinematics; targets outside the annulus of
// reachable radii are projected onto it.
inline Eigen::Vector2d inverse_kinematics(const PlantConfig& c, const Eigen::Vector2d& p) {
  const double l1 = c.link_length1, l2 = c.link_length2;
  const double r2 = p.squaredNorm();
  const double cos_q2 = std::clamp((r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double q2 = std::acos(cos_q2);
  const double q1 = std::atan2(p.y(), p.x()) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
  return {q1, q2};
}

// Projection p(x) of a state into reference space.
inline Vec tracked(const PlantConfig& c, const Vec& x) {
  if (c.kind == PlantKind::kArm) return forward_kinematics(c, x[0], x[1]);
  return x;
}

// d p / d x, reference_dim x state_dim.
inline Mat tracked_jacobian(const PlantConfig& c, const Vec& x) {
  const int n = state_dim(c);
  if (c.kind != PlantKind::kArm) return Mat::Identity(n, n);
  const double l1 = c.link_length1, l2 = c.link_length2;
  const double s1 = std::sin(x[0]), c1 = std::cos(x[0]);
  const double s12 = std::sin(x[0] + x[1]), c12 = std::cos(x[0] + x[1]);
  Mat j = Mat::Zero(2, n);
  j(0, 0) = -l1 * s1 - l2 * s12;
  j(0, 1) = -l2 * s12;
  j(1, 0) = l1 * c1 + l2 * c12;
  j(1, 1) = l2 * c12;
  return j;
}

// c(x, u, ref) = ||p(x) - ref||^2 + lambda_u ||u||^2
inline double stage_cost(const PlantConfig& c, const Vec& x, const Vec& u, const Vec& ref) {
  require(ref.size() == reference_dim(c), "stage_cost: reference length mismatch");
  require(u.size() == action_dim(c), "stage_cost: action length mismatch");
  return (tracked(c, x) - ref).squaredNorm() + c.action_cost_weight * u.squaredNorm();
}

struct CostGradient {
  Vec dx;  // partial d c / d x
  Vec du;  // partial d c / d u
};

inline CostGradient stage_cost_gradient(const PlantConfig& c, const Vec& x, const Vec& u, const Vec& ref) {
  const Vec e = tracked(c, x) - ref;
  return {2.0 * tracked_jacobian(c, x).transpose() * e, 2.0 * c.action_cost_weight * u};
}

// Position-like part of a state (spline space), used for tracking metrics.
inline Vec position(const PlantConfig& c, const Vec& x) {
  switch (c.kind) {
    case PlantKind::kLinear: return x;
    case PlantKind::kPendulum: return x.head(1);
    case PlantKind::kArm: return tracked(c, x);
  }
  return x;
}

inline Vec reference_position(const PlantConfig& c, const Vec& ref) {
  if (c.kind == PlantKind::kPendulum) return ref.head(1);
  return ref;
}

// Reference point from a spline sample (position, velocity).
inline Vec reference_from_spline(const PlantConfig& c, const Vec& pos, const Vec& vel) {
  if (c.kind == PlantKind::kPendulum) return Vec{{pos[0], vel[0]}};
  return pos;
}

// Initial state matched to the first reference point. The arm starts at
// rest with its actuators holding the gravity load.
inline Vec initial_state(const PlantConfig& c, const Vec& ref0) {
  require(ref0.size() == reference_dim(c), "initial_state: reference length mismatch");
  Vec x;
  if (c.kind == PlantKind::kArm) {
    const Eigen::Vector2d q = inverse_kinematics(c, ref0);
    x = Vec::Zero(6);
    x[0] = q[0];
    x[1] = q[1];
    const detail::ArmTerms t = detail::arm_terms(c, x);
    x[4] = t.bias[0];
    x[5] = t.bias[1];
  } else {
    x = ref0;
  }
  c.state_box.clamp(x);
  return x;
}

}  // namespace ombrl

#endif  // OMBRL_PLANTS_PLANT_HPP_
