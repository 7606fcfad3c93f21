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

#include "parkour/common.hpp"
#include "parkour/rng.hpp"

namespace parkour::sim {

enum class TerrainKind { flat, step, gap, crawl, hurdle };

const char* to_string(TerrainKind kind);
TerrainKind terrain_kind_from(const std::string& name);

inline constexpr int kMaxLevel = 9;

// 1-D parkour track: a piecewise-constant heightfield plus an overhead
// ceiling field (underside of floating blocks, kNoCeiling where free),
// both sampled on a uniform grid along x.
struct TerrainSpec {
  static constexpr double kNoCeiling = 1e9;

  TerrainKind kind = TerrainKind::flat;
  int difficulty = 0;
  double obstacle_dimension = 0.0;  // m: step/hurdle height, gap length, clearance
  double grid_resolution = 0.02;    // m
  double x_min = -1.0;
  double start_x = 0.5;
  double finish_x = 4.5;
  std::vector<double> height;
  std::vector<double> ceiling;

  int columns() const { return static_cast<int>(height.size()); }
  double x_max() const { return x_min + grid_resolution * columns(); }
  int col(double x) const;
  double col_left_edge(int c) const { return x_min + grid_resolution * c; }
  double height_at(double x) const;
  double ceiling_at(double x) const;
  bool has_ceiling_at(double x) const {
    return ceiling_at(x) < kNoCeiling * 0.5;
  }

  void validate() const;

  void save_text(const std::string& path) const;
  static TerrainSpec load_text(const std::string& path);
};

/// Obstacle size for a kind at a difficulty level; linear between the
/// per-kind easy and hard bounds. For crawl this is the clearance and it
/// decreases with level.
double obstacle_dimension_for(TerrainKind kind, int level);

/// Builds a track. The obstacle location carries a small seeded jitter; the
/// obstacle size is exactly obstacle_dimension_for(kind, difficulty).
TerrainSpec make_terrain(TerrainKind kind, int difficulty, Rng& rng);

}  // namespace parkour::sim
