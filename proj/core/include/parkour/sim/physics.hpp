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
#include "parkour/sim/terrain.hpp"

namespace parkour::sim {

inline constexpr double kDtPolicy = 0.02;
inline constexpr int kSubsteps = 10;

struct StepResult {
  RobotState state;
  ConstraintInputs inputs;
};

/// Advances one policy step: PD torques recomputed at every physics substep,
/// semi-implicit Euler on the generalized coordinates (x, z, pitch, q[4]),
/// spring-damper contacts against the heightfield and ceiling. The desired
/// joint target is default_pose + action (rad). Throws SimulationDiverged if
/// the state goes non-finite, ConfigError on bad inputs.
StepResult step(const RobotState& state, const Vec4d& action,
                const TerrainSpec& terrain, const RobotModel& model,
                const PdGains& gains, double dt_policy = kDtPolicy,
                int substeps = kSubsteps);

// kinematics, exposed for observation building and test oracles
Vec2d hip_position(const RobotState& s, const RobotModel& m, int leg);
Vec2d knee_position(const RobotState& s, const RobotModel& m, int leg);
Vec2d foot_position(const RobotState& s, const RobotModel& m, int leg);
Vec2d foot_velocity(const RobotState& s, const RobotModel& m, int leg);

/// Total mechanical energy: base + feet kinetic and potential plus armature
/// rotor energy. Constant in free flight with zero torque.
double mechanical_energy(const RobotState& s, const RobotModel& m);

}  // namespace parkour::sim
