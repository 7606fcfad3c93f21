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

// Forward depth sensor rigidly mounted at the base front, pitched downward.
// One angular dimension: a fan of R rays across the field of view.
struct DepthCamera {
  double mount_x = 0.25;       // m ahead of the base center
  double mount_z = 0.03;       // m above the base center
  double pitch_down = 0.5236;  // rad, 30 degrees
  double fov = 1.5184;         // rad, 87 degrees
  int rays = 32;
  double max_range = 2.0;      // m
};

struct DepthScan {
  VecXd ranges;
  double capture_time = 0.0;
  bool stale = false;  // held frame between renders
};

/// First-hit distance per ray against the ground solid {z < h(x)} and the
/// ceiling solid {z > c(x)}; misses clip to max_range.
DepthScan render_depth(const RobotState& state, const TerrainSpec& terrain,
                       const DepthCamera& camera);

/// Distance along a single ray; used directly by render_depth and exposed
/// for the raycast oracle tests.
double cast_ray(const TerrainSpec& terrain, const Vec2d& origin,
                const Vec2d& direction, double max_range);

}  // namespace parkour::sim
