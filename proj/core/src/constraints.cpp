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

#include "parkour/task/constraints.hpp"

#include <algorithm>
#include <cmath>

namespace parkour::task {

double PMaxSchedule::at(double progress) const {
  if (ramp_fraction <= 0.0) return end;
  const double t = std::clamp(progress / ramp_fraction, 0.0, 1.0);
  return start + t * (end - start);
}

const std::vector<ConstraintSpec>& constraint_specs() {
  static const std::vector<ConstraintSpec> specs = [] {
    std::vector<ConstraintSpec> s(kNumConstraints);
    auto set = [&](int slot, const std::string& id, bool hard,
                   Conditional cond = Conditional::none) {
      s[slot].id = id;
      s[slot].hard = hard;
      s[slot].conditional = cond;
    };
    set(kKneeBaseCollision, "knee_base_collision", true);
    set(kFootForceFore, "foot_force_fore", true);
    set(kFootForceHind, "foot_force_hind", true);
    set(kStumbleFore, "stumble_fore", false);
    set(kStumbleHind, "stumble_hind", false);
    set(kHeading, "heading", false);
    static const char* joints[4] = {"hip_fore", "knee_fore", "hip_hind",
                                    "knee_hind"};
    for (int j = 0; j < 4; ++j) {
      set(kTorque0 + j, std::string("torque_") + joints[j], false);
      set(kJointVel0 + j, std::string("joint_vel_") + joints[j], false);
      set(kJointAcc0 + j, std::string("joint_acc_") + joints[j], false);
      set(kActionRate0 + j, std::string("action_rate_") + joints[j], false);
      set(kJointMin0 + j, std::string("joint_min_") + joints[j], false);
      set(kJointMax0 + j, std::string("joint_max_") + joints[j], false);
    }
    set(kAirTimeFore, "air_time_fore", false,
        Conditional::flat_or_early_terrain);
    set(kAirTimeHind, "air_time_hind", false,
        Conditional::flat_or_early_terrain);
    set(kOrientation, "orientation", false);
    set(kOrientationNorm, "orientation_norm", false,
        Conditional::flat_or_early_terrain);
    set(kNumFootContacts, "n_foot_contacts", false,
        Conditional::flat_or_early_terrain);
    set(kStandStill, "stand_still", false, Conditional::no_command);
    return s;
  }();
  return specs;
}

ConstraintReport evaluate_constraints(const sim::ConstraintInputs& in,
                                      const Vec4d& prev_action, double v_cmd,
                                      const TerrainContext& ctx,
                                      const sim::RobotModel& m,
                                      const std::vector<ConstraintSpec>& specs) {
  ConstraintReport rep;
  rep.violations = VecXd::Zero(kNumConstraints);
  rep.active.assign(kNumConstraints, true);

  const bool flat_or_early =
      ctx.kind == sim::TerrainKind::flat || ctx.level < 2;
  const bool in_gait = ctx.has_command && ctx.base_speed > 0.15;
  for (int i = 0; i < kNumConstraints; ++i) {
    switch (specs[i].conditional) {
      case Conditional::none:
        break;
      case Conditional::no_command:
        rep.active[i] = !ctx.has_command;
        break;
      case Conditional::flat_or_early_terrain:
        // gait-shaping rows apply while locomotion happens on easy ground;
        // a robot standing before it moves off is not in a gait yet
        rep.active[i] = flat_or_early && in_gait;
        break;
    }
  }

  auto clip0 = [](double c) { return c > 0.0 ? c : 0.0; };

  rep.violations[kKneeBaseCollision] =
      (in.knee_collision || in.base_collision) ? 1.0 : 0.0;
  for (int leg = 0; leg < 2; ++leg) {
    rep.violations[kFootForceFore + leg] =
        clip0(in.foot_force_max[leg] - m.foot_contact_force_limit);
    rep.violations[kStumbleFore + leg] = clip0(in.stumble_excess[leg]);
    if (in.touchdown[leg])
      rep.violations[kAirTimeFore + leg] =
          clip0(m.desired_airtime - in.touchdown_airtime[leg]);
  }
  rep.violations[kHeading] = clip0(std::abs(in.pitch) - m.heading_limit);
  for (int j = 0; j < 4; ++j) {
    rep.violations[kTorque0 + j] =
        clip0(in.torque_abs_max[j] - m.torque_limit);
    rep.violations[kJointVel0 + j] =
        clip0(std::abs(in.qdot[j]) - m.joint_velocity_limit);
    rep.violations[kJointAcc0 + j] =
        clip0(std::abs(in.qddot_est[j]) - m.joint_accel_limit);
    if (in.dt > 0.0)
      rep.violations[kActionRate0 + j] =
          clip0(std::abs(in.action[j] - prev_action[j]) / in.dt -
                m.action_rate_limit);
    rep.violations[kJointMin0 + j] = clip0(m.joint_min[j] - in.q[j]);
    rep.violations[kJointMax0 + j] = clip0(in.q[j] - m.joint_max[j]);
  }
  rep.violations[kOrientation] = clip0(std::abs(in.pitch) - m.pitch_limit);
  rep.violations[kOrientationNorm] = clip0(std::abs(in.pitch) - m.pitch_limit);
  rep.violations[kNumFootContacts] =
      std::abs(in.n_foot_contacts - m.desired_foot_contacts);
  rep.violations[kStandStill] =
      clip0((in.q - m.default_pose).norm() - m.stand_still_eps);

  (void)v_cmd;
  for (int i = 0; i < kNumConstraints; ++i)
    if (!rep.active[i]) rep.violations[i] = 0.0;
  return rep;
}

}  // namespace parkour::task
