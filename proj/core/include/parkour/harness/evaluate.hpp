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

#include <iosfwd>
#include <optional>
#include <string>

#include "parkour/harness/config.hpp"
#include "parkour/nn/checkpoint.hpp"

namespace parkour::harness {

// Deterministic evaluation protocol: policy mean actions, no exploration
// noise, constraint terminations disabled. Episodes end on finish, fall or
// timeout. Violation percentages are aggregated over the successful
// traversals only.
struct EvalCell {
  sim::TerrainKind kind = sim::TerrainKind::flat;
  int level = 0;
  double obstacle_dimension = 0.0;
  int episodes = 0;
  double completion = 0.0;    // mean over episodes, capped at 1 per episode
  double success_rate = 0.0;  // completion >= 0.999
  VecXd violation_pct;        // per constraint row, successful episodes only
  int64_t success_steps = 0;
};

struct EvalResult {
  std::vector<EvalCell> cells;
  std::string policy_name;

  const EvalCell* find(sim::TerrainKind kind, int level) const;
  double mean_completion(sim::TerrainKind kind) const;

  void save_csv(std::ostream& out) const;
  void save_csv(const std::string& path) const;
  static EvalResult load_csv(const std::string& path);
};

/// Evaluates a checkpoint over the configured (kind, level) grid.
/// teacher is required for reconstruction policies (frozen head) and
/// ignored otherwise.
EvalResult eval_policy(const nn::PolicyCheckpoint& ckpt,
                       const nn::PolicyCheckpoint* teacher,
                       const RunConfig& config, uint64_t seed);

}  // namespace parkour::harness
