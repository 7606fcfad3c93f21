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

#include "parkour/nn/checkpoint.hpp"
#include "parkour/task/constraints.hpp"
#include "parkour/offpolicy/replay.hpp"
#include "parkour/sim/env.hpp"

namespace parkour::offpolicy {

// One teacher episode as stored in the experience file. Observation arrays
// have T+1 rows; depth frames cover every depth_period-th step from 0.
struct EpisodeRecord {
  MatXd proprio;     // (T+1, 17): proprio, command, previous action
  MatXd priv;        // (T+1, priv dim)
  MatXd actions;     // (T, act dim)
  VecXd rewards;     // (T)
  MatXd violations;  // (T, n_constraints)
  MatXd depth;       // (floor(T/period)+1, rays)
  uint8_t end_terminated = 0;
  double v_cmd = 0.0;

  int length() const { return static_cast<int>(actions.rows()); }
};

struct Dataset {
  std::vector<EpisodeRecord> episodes;
  int depth_period = 5;
  int proprio_dim = 0, priv_dim = 0, act_dim = 0, n_constraints = 0, rays = 0;

  int64_t total_steps() const;
  /// Chops episodes into replay windows (privileged source, zero hiddens).
  std::vector<Window> to_windows(int window_len = kWindowLen) const;

  void save(const std::string& path) const;
  static Dataset load(const std::string& path);
};

/// FNV-1a over a file's bytes; used to assert that every consumer of the
/// experience file trains from identical data.
uint64_t file_checksum(const std::string& path);

// Per-dimension action envelope observed in the dataset, widened by a
// fractional margin of the span.
struct ActionBounds {
  VecXd lo, hi;

  static ActionBounds from_dataset(const Dataset& data, double margin = 0.05);
  void validate() const;
};

struct CollectConfig {
  int64_t n_samples = 200000;
  std::vector<sim::TerrainKind> kinds = {
      sim::TerrainKind::flat, sim::TerrainKind::step, sim::TerrainKind::gap,
      sim::TerrainKind::crawl, sim::TerrainKind::hurdle};
  int min_level = 0;
  int max_level = sim::kMaxLevel;
  uint64_t seed = 0;
  double kd = 0.2;  // deployment damping
  std::vector<task::ConstraintSpec> suite = task::constraint_specs();
};

/// Rolls the privileged policy (stochastic, as trained) across the terrain
/// mix, recording privileged state, deployable observations, rendered depth
/// at the camera cadence, rewards and raw constraint violations.
Dataset collect_privileged_experience(const nn::PolicyCheckpoint& teacher,
                                      const sim::RobotModel& model,
                                      const sim::EnvConfig& env_config,
                                      const CollectConfig& cfg);

}  // namespace parkour::offpolicy
