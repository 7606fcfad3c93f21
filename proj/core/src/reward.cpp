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

#include "parkour/task/reward.hpp"

#include <algorithm>
#include <cmath>

namespace parkour::task {

double reward_from_velocity(double v_forward, double v_cmd) {
  double r = kSurvivalBonus;
  if (v_cmd > 0.0) r += std::min(v_forward, v_cmd);
  return std::max(r, 0.0);
}

double reward(const sim::RobotState& s, double v_cmd) {
  // forward velocity expressed along the robot's own forward axis
  const double v_fwd =
      std::cos(s.pitch) * s.base_vx + std::sin(s.pitch) * s.base_vz;
  return reward_from_velocity(v_fwd, v_cmd);
}

}  // namespace parkour::task
