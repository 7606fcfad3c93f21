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
#include <string>

#include "parkour/baselines/distill.hpp"
#include "parkour/offpolicy/stage2.hpp"
#include "parkour/ppo/ppo.hpp"

namespace parkour::harness {

// Flat key-value run configuration with section prefixes. Parsing is strict:
// unknown keys, duplicate keys and malformed values are errors.
//
//   # comment
//   seed = 7
//   ppo.n_actors = 256
//   robot.torque_limit = 3.0
//   eval.kinds = flat,step,gap
//   constraint.torque_hip_fore.p_max_end = 0.3
struct RunConfig {
  uint64_t seed = 0;
  std::string out_dir = "runs/out";

  sim::RobotModel robot;
  sim::EnvConfig env;
  ppo::PpoConfig ppo;
  offpolicy::CollectConfig collect;
  offpolicy::Stage2Config stage2;
  baselines::DistillConfig distill;
  std::vector<task::ConstraintSpec> suite = task::constraint_specs();

  struct Eval {
    std::vector<sim::TerrainKind> kinds = {
        sim::TerrainKind::flat, sim::TerrainKind::step, sim::TerrainKind::gap,
        sim::TerrainKind::crawl, sim::TerrainKind::hurdle};
    int min_level = 0;
    int max_level = sim::kMaxLevel;
    int episodes_per_cell = 10;
    double timeout_s = 15.0;
    double v_cmd = 0.6;
    double kd = 0.2;
    bool float32 = false;
  } eval;

  static RunConfig load(const std::string& path);
  static RunConfig parse(std::istream& in, const std::string& origin);

  /// Canonical text of every key (used for hashing and documentation).
  std::string dump() const;
  uint64_t content_hash() const;
};

/// Writes the full default configuration with one line per key.
void write_default_config(std::ostream& out);

}  // namespace parkour::harness
