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
#include <utility>
#include <vector>

#include "parkour/nn/nets.hpp"
#include "parkour/nn/norm.hpp"

namespace parkour::nn {

// Serialized policy or critic: architecture descriptor, named parameter
// tensors, observation normalization statistics and action bounds.
struct PolicyCheckpoint {
  NetKind kind = NetKind::priv_actor;
  MlpSpec mlp_spec;
  bool has_visual = false;
  VisualSpec visual_spec;

  VecXd act_lo, act_hi;

  VecXd norm_mean;
  VecXd norm_m2;
  int64_t norm_count = 0;

  std::vector<std::pair<std::string, MatXd>> tensors;

  void save(const std::string& path) const;
  static PolicyCheckpoint load(const std::string& path);

  RunningNorm make_norm() const;
  void set_norm(const RunningNorm& norm);

  /// Snapshot a net's parameters into `tensors` (by registry name).
  void capture(const ParamList& params);
  /// Write stored tensors back into a live net; throws on name/shape mismatch.
  void restore(const ParamList& params) const;
};

/// Rescale a tanh-bounded output row into [lo, hi] per dimension.
VecXd rescale_action(const VecXd& tanh_out, const VecXd& lo, const VecXd& hi);

// Float32 inference path for dense policies. Parameters are cast once; the
// forward pass runs entirely in single precision.
class MlpF32 {
 public:
  MlpF32() = default;
  MlpF32(Mlp& net);

  Eigen::VectorXf forward(const Eigen::VectorXf& x) const;
  VecXd forward64(const VecXd& x) const;

 private:
  struct DenseF32 {
    Eigen::MatrixXf W;
    Eigen::VectorXf b;
  };
  std::vector<DenseF32> layers_;
  MlpSpec spec_;
};

}  // namespace parkour::nn
