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

#include "parkour/sim/depth.hpp"

#include <algorithm>
#include <cmath>

namespace parkour::sim {

namespace {

constexpr double kMinRange = 1e-6;

inline bool inside_solid(const TerrainSpec& t, double x, double z) {
  return z < t.height_at(x) || z > t.ceiling_at(x);
}

// hit of z(t) = oz + t*dz against the horizontal plane z = plane, within
// (t_lo, t_hi]; returns a negative value when there is none
double plane_hit(double oz, double dz, double plane, double t_lo, double t_hi) {
  if (dz == 0.0) return -1.0;
  const double t = (plane - oz) / dz;
  if (t > t_lo && t <= t_hi) return t;
  return -1.0;
}

}  // namespace

double cast_ray(const TerrainSpec& t, const Vec2d& o, const Vec2d& d,
                double max_range) {
  if (inside_solid(t, o.x(), o.y())) return kMinRange;

  const double res = t.grid_resolution;
  // vertical ray: single column
  if (std::abs(d.x()) < 1e-12) {
    const double h = t.height_at(o.x());
    const double c = t.ceiling_at(o.x());
    double best = max_range;
    const double th = plane_hit(o.y(), d.y(), h, 0.0, best);
    if (th > 0.0) best = th;
    const double tc = plane_hit(o.y(), d.y(), c, 0.0, best);
    if (tc > 0.0) best = std::min(best, tc);
    return std::max(best, kMinRange);
  }

  const int step = d.x() > 0.0 ? 1 : -1;
  int col = t.col(o.x());
  double t_in = 0.0;
  double best = max_range;
  while (t_in < best) {
    // exit parameter of the current column
    const double edge = step > 0 ? t.col_left_edge(col + 1) : t.col_left_edge(col);
    double t_out = (edge - o.x()) / d.x();
    t_out = std::min(t_out, best);

    const double h = t.height[std::clamp(col, 0, t.columns() - 1)];
    const double c = t.ceiling[std::clamp(col, 0, t.columns() - 1)];
    const double z_in = o.y() + t_in * d.y();

    if (z_in < h || z_in > c) {
      // entered a solid column through its face
      best = std::max(t_in, kMinRange);
      break;
    }
    const double th = plane_hit(o.y(), d.y(), h, t_in, t_out);
    if (th > 0.0 && d.y() < 0.0) {
      best = th;
      break;
    }
    const double tc = plane_hit(o.y(), d.y(), c, t_in, t_out);
    if (tc > 0.0 && d.y() > 0.0) {
      best = tc;
      break;
    }
    col += step;
    if (col < 0 || col >= t.columns()) break;  // leaves the track: miss
    t_in = t_out;
    if (t_out >= best) break;
  }
  return std::clamp(best, kMinRange, max_range);
}

DepthScan render_depth(const RobotState& state, const TerrainSpec& terrain,
                       const DepthCamera& cam) {
  if (cam.rays < 2 || !(cam.fov > 0.0))
    throw ConfigError("depth camera needs fov > 0 and at least 2 rays");
  DepthScan scan;
  scan.ranges.resize(cam.rays);
  scan.capture_time = state.sim_time;
  scan.stale = false;

  const double c = std::cos(state.pitch), s = std::sin(state.pitch);
  const Vec2d origin(state.base_x + c * cam.mount_x - s * cam.mount_z,
                     state.base_z + s * cam.mount_x + c * cam.mount_z);
  const double center = state.pitch - cam.pitch_down;
  for (int k = 0; k < cam.rays; ++k) {
    const double a =
        center + cam.fov * (0.5 - static_cast<double>(k) / (cam.rays - 1));
    const Vec2d d(std::cos(a), std::sin(a));
    scan.ranges[k] = cast_ray(terrain, origin, d, cam.max_range);
  }
  return scan;
}

}  // namespace parkour::sim
