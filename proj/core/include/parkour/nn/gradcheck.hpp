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

#include <functional>
#include <string>

#include "parkour/nn/layers.hpp"
#include "parkour/rng.hpp"

namespace parkour::nn {

struct GradCheckReport {
  int checked = 0;
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;

  bool passed(double tol) const { return checked > 0 && max_rel_err < tol; }
};

// Central-difference check of analytic gradients on a random subset of
// parameter entries. loss_fn must be a pure forward evaluation; the caller
// fills the analytic grads before invoking this (they are snapshotted).
GradCheckReport grad_check(const ParamList& params,
                           const std::function<double()>& loss_fn,
                           Rng& rng, int n_samples, double h = 1e-5);

}  // namespace parkour::nn
