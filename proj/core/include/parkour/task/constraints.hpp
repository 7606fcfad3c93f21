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

#include <string>
#include <vector>

#include "parkour/sim/robot.hpp"
#include "parkour/sim/terrain.hpp"

namespace parkour::task {

enum class Conditional { none, no_command, flat_or_early_terrain };

struct PMaxSchedule {
  double start = 0.05;
  double end = 0.25;
  double ramp_fraction = 0.5;  // fraction of training over which to ramp

  double at(double progress) const;
};

struct ConstraintSpec {
  std::string id;
  bool hard = false;  // hard constraints terminate with probability 1
  PMaxSchedule p_max;
  Conditional conditional = Conditional::none;

  double p_max_at(double progress) const {
    return hard ? 1.0 : p_max.at(progress);
  }
};

// Per-step clipped violations c+ = max(0, c) for the whole constraint suite,
// with the activation mask of the conditional rows.
struct ConstraintReport {
  VecXd violations;
  std::vector<bool> active;

  double max_violation() const {
    return violations.size() ? violations.maxCoeff() : 0.0;
  }
};

struct TerrainContext {
  sim::TerrainKind kind = sim::TerrainKind::flat;
  int level = 0;
  bool has_command = true;
  double base_speed = 0.0;  // gait-shaping rows apply only in motion
};

// Fixed slot layout of the suite. Order is part of the metrics/report
// contract; see constraint_specs() for ids.
enum ConstraintSlot : int {
  kKneeBaseCollision = 0,
  kFootForceFore,
  kFootForceHind,
  kStumbleFore,
  kStumbleHind,
  kHeading,
  kTorque0,        // .. kTorque0+3
  kJointVel0 = kTorque0 + 4,
  kJointAcc0 = kJointVel0 + 4,
  kActionRate0 = kJointAcc0 + 4,
  kJointMin0 = kActionRate0 + 4,
  kJointMax0 = kJointMin0 + 4,
  kAirTimeFore = kJointMax0 + 4,
  kAirTimeHind,
  kOrientation,
  kOrientationNorm,
  kNumFootContacts,
  kStandStill,
  kNumConstraints,
};

/// Suite descriptors in slot order (ids, hard flags, conditionals).
const std::vector<ConstraintSpec>& constraint_specs();

/// Evaluates every row of the suite from the raw step quantities.
/// prev_action is the previous desired-offset vector (rad).
ConstraintReport evaluate_constraints(
    const sim::ConstraintInputs& inputs, const Vec4d& prev_action,
    double v_cmd, const TerrainContext& ctx, const sim::RobotModel& model,
    const std::vector<ConstraintSpec>& specs = constraint_specs());

}  // namespace parkour::task
