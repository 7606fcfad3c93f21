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

#include "parkour/sim/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace parkour::sim {

const char* to_string(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::flat: return "flat";
    case TerrainKind::step: return "step";
    case TerrainKind::gap: return "gap";
    case TerrainKind::crawl: return "crawl";
    case TerrainKind::hurdle: return "hurdle";
  }
  return "?";
}

TerrainKind terrain_kind_from(const std::string& name) {
  if (name == "flat") return TerrainKind::flat;
  if (name == "step") return TerrainKind::step;
  if (name == "gap") return TerrainKind::gap;
  if (name == "crawl") return TerrainKind::crawl;
  if (name == "hurdle") return TerrainKind::hurdle;
  throw ConfigError("unknown terrain kind: " + name);
}

int TerrainSpec::col(double x) const {
  const int c = static_cast<int>(std::floor((x - x_min) / grid_resolution));
  return std::clamp(c, 0, columns() - 1);
}

double TerrainSpec::height_at(double x) const { return height[col(x)]; }

double TerrainSpec::ceiling_at(double x) const { return ceiling[col(x)]; }

void TerrainSpec::validate() const {
  if (height.empty() || height.size() != ceiling.size())
    throw ConfigError("terrain: height/ceiling arrays empty or mismatched");
  if (grid_resolution <= 0.0) throw ConfigError("terrain: bad grid resolution");
  if (!(start_x < finish_x)) throw ConfigError("terrain: start_x >= finish_x");
  for (size_t i = 0; i < height.size(); ++i) {
    if (!std::isfinite(height[i]))
      throw ConfigError("terrain: non-finite height at column " +
                        std::to_string(i));
    if (ceiling[i] <= height[i])
      throw ConfigError("terrain: ceiling below ground at column " +
                        std::to_string(i));
  }
}

double obstacle_dimension_for(TerrainKind kind, int level) {
  const double t = static_cast<double>(level) / kMaxLevel;
  switch (kind) {
    case TerrainKind::flat: return 0.0;
    case TerrainKind::step: return 0.05 + t * (0.40 - 0.05);
    case TerrainKind::gap: return 0.10 + t * (0.35 - 0.10);
    case TerrainKind::crawl: return 0.35 + t * (0.20 - 0.35);  // clearance shrinks
    case TerrainKind::hurdle: return 0.05 + t * (0.30 - 0.05);
  }
  return 0.0;
}

TerrainSpec make_terrain(TerrainKind kind, int difficulty, Rng& rng) {
  if (difficulty < 0 || difficulty > kMaxLevel)
    throw ConfigError("terrain difficulty out of range: " +
                      std::to_string(difficulty));
  TerrainSpec t;
  t.kind = kind;
  t.difficulty = difficulty;
  t.obstacle_dimension = obstacle_dimension_for(kind, difficulty);
  const int n = static_cast<int>(std::lround((6.0 - t.x_min) / t.grid_resolution));
  t.height.assign(n, 0.0);
  t.ceiling.assign(n, TerrainSpec::kNoCeiling);

  // obstacle placed mid-track with a little jitter so episodes differ
  const double a = 2.0 + rng.uniform(-0.2, 0.2);
  auto fill = [&](double x0, double x1, auto&& f) {
    for (int c = t.col(x0); c <= t.col(x1 - 1e-9); ++c) f(c);
  };
  const double dim = t.obstacle_dimension;
  switch (kind) {
    case TerrainKind::flat:
      break;
    case TerrainKind::step:
      // one ledge to climb onto and off again
      fill(a, a + 1.2, [&](int c) { t.height[c] = dim; });
      break;
    case TerrainKind::gap:
      fill(a, a + dim, [&](int c) { t.height[c] = -0.8; });
      break;
    case TerrainKind::crawl:
      fill(a, a + 0.8, [&](int c) { t.ceiling[c] = t.height[c] + dim; });
      break;
    case TerrainKind::hurdle:
      fill(a, a + 0.1, [&](int c) { t.height[c] = dim; });
      break;
  }
  t.validate();
  return t;
}

void TerrainSpec::save_text(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write terrain file: " + path);
  out << "parkour-terrain v1\n";
  out << "kind " << to_string(kind) << "\n";
  out << "difficulty " << difficulty << "\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "obstacle_dimension " << fmt(obstacle_dimension) << "\n";
  out << "grid_resolution " << fmt(grid_resolution) << "\n";
  out << "x_min " << fmt(x_min) << "\n";
  out << "start_x " << fmt(start_x) << "\n";
  out << "finish_x " << fmt(finish_x) << "\n";
  out << "columns " << columns() << "\n";
  out << "heights\n";
  for (int c = 0; c < columns(); ++c)
    out << fmt(height[c]) << ((c + 1) % 8 == 0 ? "\n" : " ");
  out << "\nceilings\n";
  for (int c = 0; c < columns(); ++c) {
    if (ceiling[c] >= kNoCeiling * 0.5)
      out << "inf";
    else
      out << fmt(ceiling[c]);
    out << ((c + 1) % 8 == 0 ? "\n" : " ");
  }
  out << "\nend\n";
  if (!out) throw ConfigError("terrain write failed: " + path);
}

TerrainSpec TerrainSpec::load_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read terrain file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "parkour-terrain v1")
    throw ConfigError("bad terrain header in " + path);
  TerrainSpec t;
  t.height.clear();
  t.ceiling.clear();
  int columns = -1;
  std::string key;
  while (in >> key) {
    if (key == "kind") {
      std::string v;
      in >> v;
      t.kind = terrain_kind_from(v);
    } else if (key == "difficulty") {
      in >> t.difficulty;
    } else if (key == "obstacle_dimension") {
      in >> t.obstacle_dimension;
    } else if (key == "grid_resolution") {
      in >> t.grid_resolution;
    } else if (key == "x_min") {
      in >> t.x_min;
    } else if (key == "start_x") {
      in >> t.start_x;
    } else if (key == "finish_x") {
      in >> t.finish_x;
    } else if (key == "columns") {
      in >> columns;
    } else if (key == "heights") {
      if (columns <= 0) throw ConfigError("terrain: columns must precede arrays");
      t.height.resize(columns);
      for (auto& h : t.height)
        if (!(in >> h)) throw ConfigError("terrain: truncated heights");
    } else if (key == "ceilings") {
      if (columns <= 0) throw ConfigError("terrain: columns must precede arrays");
      t.ceiling.resize(columns);
      for (auto& c : t.ceiling) {
        std::string v;
        if (!(in >> v)) throw ConfigError("terrain: truncated ceilings");
        c = (v == "inf") ? kNoCeiling : std::stod(v);
      }
    } else if (key == "end") {
      t.validate();
      return t;
    } else {
      throw ConfigError("terrain: unknown key '" + key + "' in " + path);
    }
  }
  throw ConfigError("terrain: missing 'end' in " + path);
}

}  // namespace parkour::sim
