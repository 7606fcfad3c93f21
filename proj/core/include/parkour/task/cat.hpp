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

#include <vector>

#include "parkour/rng.hpp"
#include "parkour/task/constraints.hpp"

namespace parkour::task {

// Constraint violations become stochastic episode terminations: the episode
// ends with probability
//   delta = max_i  p_i(progress) * clip( sqrt(c_i+) / cmax_i, 0, 1 )
// where cmax_i tracks an exponential moving average of the per-batch maximum
// rescaled violation. Violations are stored raw in buffers; the square root
// is applied here so replayed experience follows the current normalizer.
struct CatState {
  VecXd c_max;              // EMA of max sqrt-rescaled violation, floored
  double ema_coeff = 0.9;
  double training_progress = 0.0;  // in [0, 1], drives the soft p_max ramp
  bool enabled = true;             // false forces delta = 0 (ablation)

  static constexpr double kFloor = 1e-3;

  explicit CatState(int n_constraints = kNumConstraints, double ema = 0.9)
      : c_max(VecXd::Constant(n_constraints, kFloor)), ema_coeff(ema) {}
};

/// Termination probability of one step under the current normalizer state.
double termination_prob(const ConstraintReport& report, const CatState& cat,
                        const std::vector<ConstraintSpec>& specs);

/// One normalizer update from a batch of reports (raw violations);
/// an empty batch leaves the state unchanged.
void update_cmax(CatState& cat, const std::vector<ConstraintReport>& batch);

/// Same update from a dense matrix of raw violations (rows = steps).
void update_cmax(CatState& cat, const MatXd& batch_violations);

inline bool sample_termination(double delta, Rng& rng) {
  return rng.uniform() < delta;
}

}  // namespace parkour::task
