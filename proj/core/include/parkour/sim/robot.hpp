/*
Copyright 2026 the parkourlab authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <array>

#include "parkour/common.hpp"

namespace parkour::sim {

// Planar legged robot: rigid base (x, z, pitch) with two 2-joint legs in the
// sagittal plane. Legs are massless with point-mass feet, so the generalized
// dynamics stay small enough to solve in closed form each substep.
//
// Joint order everywhere: [hip_fore, knee_fore, hip_hind, knee_hind].
struct RobotModel {
  double base_mass = 1.2;       // kg
  double base_inertia = 0.025;  // kg m^2 about the pitch axis
  double foot_mass = 0.08;      // kg per foot
  std::array<double, 2> hip_offsets = {0.19, -0.19};  // m, fore/hind
  double thigh_length = 0.16;   // m
  double shank_length = 0.16;   // m

  Vec4d joint_min = (Vec4d() << -1.6, -2.4, -1.6, -2.4).finished();
  Vec4d joint_max = (Vec4d() << 1.6, 2.4, 1.6, 2.4).finished();
  Vec4d default_pose = (Vec4d() << 0.4, -0.8, -0.4, 0.8).finished();

  // constraint limits
  double torque_limit = 3.0;            // N m, also the actuator saturation
  double joint_velocity_limit = 20.0;   // rad/s
  double joint_accel_limit = 800.0;     // rad/s^2
  double action_rate_limit = 40.0;      // rad/s on desired-offset changes
  double foot_contact_force_limit = 70.0;  // N
  double desired_airtime = 0.25;        // s
  double pitch_limit = 0.8;             // rad
  double heading_limit = 0.5;           // rad
  int desired_foot_contacts = 1;        // stance feet while stepping
  double stand_still_eps = 0.1;         // rad

  // mechanics
  double gravity = 9.81;
  double joint_armature = 0.005;        // kg m^2 reflected rotor inertia
  double contact_stiffness = 4000.0;    // N/m
  double contact_damping = 80.0;        // N s/m, normal (implicit)
  double tangential_damping = 20.0;     // N s/m
  double tangential_stiffness = 1000.0; // N/m, stick anchor spring (feet)
  double friction_mu = 0.8;
  double joint_stop_stiffness = 50.0;   // N m/rad past the soft limit
  double joint_stop_damping = 0.5;
  double joint_stop_margin = 0.2;       // rad of travel before the hard clamp
  double collision_margin = 0.01;       // m, knee/base proximity flag
  double penetration_tolerance = 0.03;  // m, mechanical bound on contact depth

  // base collision box (local frame, centered on the CoM)
  double base_half_length = 0.25;
  double base_half_height = 0.05;

  double action_scale = 0.8;  // rad of desired offset per unit action

  /// Standing height of the base over flat ground at the default pose.
  double stand_height() const;

  /// Throws ConfigError when a field violates its invariants.
  void validate() const;
};

struct RobotState {
  double base_x = 0.0, base_z = 0.0, pitch = 0.0;
  double base_vx = 0.0, base_vz = 0.0, pitch_rate = 0.0;
  Vec4d q = Vec4d::Zero();
  Vec4d qdot = Vec4d::Zero();
  Vec4d qddot_est = Vec4d::Zero();
  std::array<bool, 2> foot_contact = {false, false};
  std::array<Vec2d, 2> foot_force = {Vec2d::Zero(), Vec2d::Zero()};  // (fx, fz)
  std::array<double, 2> airtime = {0.0, 0.0};
  // tangential stick anchors; valid while the foot keeps ground contact
  std::array<double, 2> foot_anchor = {0.0, 0.0};
  std::array<bool, 2> anchor_valid = {false, false};
  bool knee_collision = false;
  bool base_collision = false;
  double sim_time = 0.0;

  bool finite() const;
};

// Raw per-step quantities consumed by the constraint suite; all maxima are
// taken over the physics substeps of one policy step.
struct ConstraintInputs {
  Vec4d torque_abs_max = Vec4d::Zero();  // unclipped PD torque magnitude
  Vec4d q = Vec4d::Zero();
  Vec4d qdot = Vec4d::Zero();
  Vec4d qddot_est = Vec4d::Zero();
  std::array<double, 2> foot_force_max = {0.0, 0.0};      // ||f||
  std::array<double, 2> stumble_excess = {0.0, 0.0};      // |fx| - 4|fz|
  std::array<bool, 2> touchdown = {false, false};
  std::array<double, 2> touchdown_airtime = {0.0, 0.0};
  int n_foot_contacts = 0;
  bool knee_collision = false;
  bool base_collision = false;
  double pitch = 0.0;
  Vec4d action = Vec4d::Zero();  // desired joint offsets, rad
  double dt = 0.02;
};

struct PdGains {
  double kp = 4.0;
  double kd = 0.2;
};

}  // namespace parkour::sim
