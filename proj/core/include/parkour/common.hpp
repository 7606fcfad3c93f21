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

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace parkour {

using VecXd = Eigen::VectorXd;
using MatXd = Eigen::MatrixXd;
using Vec2d = Eigen::Vector2d;
using Vec4d = Eigen::Vector4d;

/// Raised on malformed configuration, file formats or shape mismatches.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when the integrator produces a non-finite state.
class SimulationDiverged : public std::runtime_error {
 public:
  SimulationDiverged(const std::string& what, int substep)
      : std::runtime_error(what + " (substep " + std::to_string(substep) + ")"),
        substep_index(substep) {}
  int substep_index;
};

inline bool all_finite(const Eigen::Ref<const VecXd>& v) {
  return v.allFinite();
}

}  // namespace parkour
