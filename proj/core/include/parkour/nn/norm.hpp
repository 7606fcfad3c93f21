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

#include "parkour/common.hpp"

namespace parkour::nn {

// Running per-dimension mean/std used for observation whitening. Updates use
// Welford batch merging; apply() clips to a fixed range to bound outliers.
class RunningNorm {
 public:
  RunningNorm() = default;
  explicit RunningNorm(int dim) { reset(dim); }

  void reset(int dim);
  void update(const MatXd& batch_rows);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  VecXd apply(const VecXd& x) const;
  MatXd apply(const MatXd& rows) const;

  int dim() const { return static_cast<int>(mean_.size()); }
  int64_t count() const { return count_; }
  const VecXd& mean() const { return mean_; }
  VecXd stddev() const;

  void set_stats(const VecXd& mean, const VecXd& var, int64_t count);
  const VecXd& var_sum() const { return m2_; }

  static constexpr double kClip = 10.0;
  static constexpr double kMinStd = 1e-6;

 private:
  VecXd mean_;
  VecXd m2_;  // sum of squared deviations
  int64_t count_ = 0;
  bool frozen_ = false;
};

}  // namespace parkour::nn
