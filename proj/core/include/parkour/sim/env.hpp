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

#include <optional>

#include "parkour/sim/depth.hpp"
#include "parkour/sim/physics.hpp"
#include "parkour/sim/robot.hpp"
#include "parkour/sim/terrain.hpp"

namespace parkour::sim {

inline constexpr int kScanPoints = 11;
inline constexpr double kScanAhead = 0.8;   // m ahead of the base
inline constexpr double kScanBehind = 0.2;  // m behind
inline constexpr double kCeilingDefault = 2.0;  // m, reported when no block

inline constexpr int kProprioDim = 12;  // pitch, pitch rate, v, q, qdot
inline constexpr int kActionDim = 4;
inline constexpr int kPrivDim = kProprioDim + kScanPoints + 1 + 1 + kActionDim;

// Simulation-only observation: terrain heights sampled around the base
// (relative to base height), overhead clearance, plus the deployable part.
struct PrivObs {
  VecXd height_scan;      // kScanPoints entries, h(x+off) - base_z
  double ceiling_height = kCeilingDefault;
  VecXd proprio;          // kProprioDim entries
  double v_cmd = 0.0;
  Vec4d prev_action = Vec4d::Zero();

  VecXd flatten() const;
};

VecXd proprio_vector(const RobotState& state);
PrivObs privileged_obs(const RobotState& state, const TerrainSpec& terrain,
                       double v_cmd, const Vec4d& prev_action);

/// Initial state at start_x: default pose with uniform joint/pose noise of
/// the given scale; bitwise deterministic for a given rng state.
RobotState reset_state(const TerrainSpec& terrain, const RobotModel& model,
                       Rng& rng, double noise_scale);

struct EnvConfig {
  double dt_policy = kDtPolicy;
  int substeps = kSubsteps;
  double kp = 8.0;
  double episode_time_limit = 10.0;  // s
  double reset_noise = 0.05;
  int depth_period = 5;              // policy steps between renders
  DepthCamera camera;
  double cmd_min = 0.3, cmd_max = 0.8;  // m/s forward command range
  double zero_cmd_fraction = 0.1;
  // first-order lag on the PD target, modeling actuation/communication
  // smoothing; the raw policy command still drives the rate constraint
  double action_filter = 0.6;
  // fraction of resets that start with a forward push, and its upper speed
  double reset_walk_fraction = 0.5;
  double reset_speed_max = 0.5;
};

// One independent environment instance: owns terrain, state, RNG stream and
// the depth cadence. Not safe for concurrent mutation; instances are
// independent and may be stepped on parallel workers.
class Env {
 public:
  Env(const RobotModel& model, const EnvConfig& config, uint64_t seed);

  void set_terrain(TerrainSpec terrain);
  /// Regenerates terrain for (kind, level) and resets; samples a command.
  void reset(TerrainKind kind, int level);
  /// Reset on the current terrain.
  void reset();

  /// Applies a normalized action in [-1, 1]^4 (scaled to desired joint
  /// offsets) and advances one policy step.
  const ConstraintInputs& step(const Vec4d& normalized_action,
                               const PdGains& gains);

  const RobotState& state() const { return state_; }
  const TerrainSpec& terrain() const { return terrain_; }
  const RobotModel& model() const { return model_; }
  const EnvConfig& config() const { return config_; }

  PrivObs priv_obs() const;
  VecXd proprio() const { return proprio_vector(state_); }
  /// Depth scan honoring the render cadence; stale between renders.
  const DepthScan& depth() const { return depth_; }
  bool depth_fresh() const { return !depth_.stale; }

  double v_cmd() const { return v_cmd_; }
  void set_v_cmd(double v) { v_cmd_ = v; }
  const Vec4d& prev_action() const { return prev_action_; }      // rad
  const Vec4d& prev_prev_action() const { return prev_prev_action_; }
  int steps_taken() const { return step_count_; }
  bool timed_out() const {
    return state_.sim_time >= config_.episode_time_limit;
  }
  /// Fraction of the track span covered, capped at 1.
  double completion() const;
  bool finished() const { return completion() >= 0.999; }
  /// Base or knee drove into the world, or left it; ends evaluation episodes.
  bool fallen() const;

  Rng& rng() { return rng_; }

 private:
  void render_now();

  RobotModel model_;
  EnvConfig config_;
  TerrainSpec terrain_;
  RobotState state_;
  Rng rng_;
  DepthScan depth_;
  ConstraintInputs last_inputs_;
  Vec4d prev_action_ = Vec4d::Zero();
  Vec4d prev_prev_action_ = Vec4d::Zero();
  Vec4d filtered_action_ = Vec4d::Zero();
  double v_cmd_ = 0.0;
  double max_x_ = 0.0;
  int step_count_ = 0;
};

}  // namespace parkour::sim
