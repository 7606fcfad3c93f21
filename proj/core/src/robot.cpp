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

#include "parkour/sim/robot.hpp"

#include <cmath>

namespace parkour::sim {

double RobotModel::stand_height() const {
  // foot drop below the hip at the default pose (fore leg; hind mirrors)
  const double a = default_pose[0];
  const double b = default_pose[0] + default_pose[1];
  return thigh_length * std::cos(a) + shank_length * std::cos(b);
}

void RobotModel::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0))
      throw ConfigError(std::string("robot model: ") + name +
                        " must be strictly positive");
  };
  positive(base_mass, "base_mass");
  positive(base_inertia, "base_inertia");
  positive(foot_mass, "foot_mass");
  positive(thigh_length, "thigh_length");
  positive(shank_length, "shank_length");
  positive(torque_limit, "torque_limit");
  positive(joint_velocity_limit, "joint_velocity_limit");
  positive(joint_accel_limit, "joint_accel_limit");
  positive(action_rate_limit, "action_rate_limit");
  positive(foot_contact_force_limit, "foot_contact_force_limit");
  positive(desired_airtime, "desired_airtime");
  positive(pitch_limit, "pitch_limit");
  positive(heading_limit, "heading_limit");
  positive(action_scale, "action_scale");
  for (int j = 0; j < 4; ++j) {
    if (!(joint_min[j] < default_pose[j] && default_pose[j] < joint_max[j]))
      throw ConfigError("robot model: default_pose outside joint limits at joint " +
                        std::to_string(j));
  }
}

bool RobotState::finite() const {
  return std::isfinite(base_x) && std::isfinite(base_z) &&
         std::isfinite(pitch) && std::isfinite(base_vx) &&
         std::isfinite(base_vz) && std::isfinite(pitch_rate) &&
         q.allFinite() && qdot.allFinite();
}

}  // namespace parkour::sim
