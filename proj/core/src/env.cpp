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

#include "parkour/sim/env.hpp"

#include <algorithm>
#include <cmath>

namespace parkour::sim {

VecXd PrivObs::flatten() const {
  VecXd out(kPrivDim);
  out.segment(0, kProprioDim) = proprio;
  out.segment(kProprioDim, kScanPoints) = height_scan;
  out[kProprioDim + kScanPoints] = ceiling_height;
  out[kProprioDim + kScanPoints + 1] = v_cmd;
  out.segment(kProprioDim + kScanPoints + 2, kActionDim) = prev_action;
  return out;
}

VecXd proprio_vector(const RobotState& s) {
  VecXd p(kProprioDim);
  p << s.pitch, s.pitch_rate, s.base_vx, s.base_vz, s.q[0], s.q[1], s.q[2],
      s.q[3], s.qdot[0], s.qdot[1], s.qdot[2], s.qdot[3];
  return p;
}

PrivObs privileged_obs(const RobotState& s, const TerrainSpec& t, double v_cmd,
                       const Vec4d& prev_action) {
  PrivObs obs;
  obs.height_scan.resize(kScanPoints);
  double clearance = TerrainSpec::kNoCeiling;
  for (int i = 0; i < kScanPoints; ++i) {
    const double off =
        -kScanBehind + (kScanBehind + kScanAhead) * i / (kScanPoints - 1);
    const double x = s.base_x + off;
    obs.height_scan[i] = t.height_at(x) - s.base_z;
    clearance = std::min(clearance, t.ceiling_at(x) - t.height_at(x));
  }
  obs.ceiling_height = std::min(clearance, kCeilingDefault);
  obs.proprio = proprio_vector(s);
  obs.v_cmd = v_cmd;
  obs.prev_action = prev_action;
  return obs;
}

RobotState reset_state(const TerrainSpec& t, const RobotModel& m, Rng& rng,
                       double noise_scale) {
  RobotState s;
  s.q = m.default_pose;
  for (int j = 0; j < 4; ++j)
    s.q[j] += rng.uniform(-noise_scale, noise_scale);
  s.base_x = t.start_x;
  s.pitch = 0.5 * rng.uniform(-noise_scale, noise_scale);
  // settle the feet on the ground at the perturbed pose
  const double ground = t.height_at(t.start_x);
  s.base_z = ground + m.stand_height();
  double lowest = 0.0;
  for (int leg = 0; leg < 2; ++leg)
    lowest = std::min(lowest, foot_position(s, m, leg).y() - ground);
  s.base_z -= lowest;
  return s;
}

Env::Env(const RobotModel& model, const EnvConfig& config, uint64_t seed)
    : model_(model), config_(config), rng_(seed) {
  model_.validate();
  set_terrain(make_terrain(TerrainKind::flat, 0, rng_));
  reset();
}

void Env::set_terrain(TerrainSpec terrain) {
  terrain.validate();
  terrain_ = std::move(terrain);
}

void Env::reset(TerrainKind kind, int level) {
  set_terrain(make_terrain(kind, level, rng_));
  reset();
}

void Env::reset() {
  state_ = reset_state(terrain_, model_, rng_, config_.reset_noise);
  if (config_.reset_noise > 0.0 && rng_.bernoulli(config_.reset_walk_fraction))
    state_.base_vx = rng_.uniform(0.0, config_.reset_speed_max);
  prev_action_.setZero();
  prev_prev_action_.setZero();
  filtered_action_.setZero();
  step_count_ = 0;
  max_x_ = state_.base_x;
  v_cmd_ = rng_.bernoulli(config_.zero_cmd_fraction)
               ? 0.0
               : rng_.uniform(config_.cmd_min, config_.cmd_max);
  render_now();
}

void Env::render_now() {
  depth_ = render_depth(state_, terrain_, config_.camera);
}

PrivObs Env::priv_obs() const {
  return privileged_obs(state_, terrain_, v_cmd_, prev_action_);
}

const ConstraintInputs& Env::step(const Vec4d& normalized_action,
                                  const PdGains& gains) {
  const Vec4d clipped = normalized_action.cwiseMax(-1.0).cwiseMin(1.0);
  const Vec4d offsets = model_.action_scale * clipped;
  filtered_action_ = config_.action_filter * filtered_action_ +
                     (1.0 - config_.action_filter) * offsets;
  StepResult r = sim::step(state_, filtered_action_, terrain_, model_, gains,
                           config_.dt_policy, config_.substeps);
  r.inputs.action = offsets;  // the commanded offsets, pre-filter
  state_ = r.state;
  last_inputs_ = r.inputs;
  prev_prev_action_ = prev_action_;
  prev_action_ = offsets;
  max_x_ = std::max(max_x_, state_.base_x);
  ++step_count_;
  if (step_count_ % config_.depth_period == 0) {
    render_now();
  } else {
    depth_.stale = true;
  }
  return last_inputs_;
}

double Env::completion() const {
  const double span = terrain_.finish_x - terrain_.start_x;
  return std::clamp((max_x_ - terrain_.start_x) / span, 0.0, 1.0);
}

bool Env::fallen() const {
  if (state_.base_collision) return true;
  if (std::abs(state_.pitch) > 1.5) return true;
  if (state_.base_z < terrain_.height_at(state_.base_x) - 1.5) return true;
  return false;
}

}  // namespace parkour::sim
