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

#include "parkour/sim/robot.hpp"

namespace parkour::task {

inline constexpr double kSurvivalBonus = 0.5;

/// Progress toward the commanded speed, capped at the command, plus the
/// survival bonus; the total is clipped at zero from below. With no command
/// the progress term vanishes and only the bonus remains.
double reward(const sim::RobotState& state, double v_cmd);

/// Same rule on an explicit forward velocity (used by the unit oracles).
double reward_from_velocity(double v_forward, double v_cmd);

}  // namespace parkour::task
