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

#include "parkour/task/cat.hpp"

#include <cmath>

namespace parkour::task {

double termination_prob(const ConstraintReport& report, const CatState& cat,
                        const std::vector<ConstraintSpec>& specs) {
  if (!cat.enabled) return 0.0;
  double delta = 0.0;
  const int n = static_cast<int>(report.violations.size());
  for (int i = 0; i < n; ++i) {
    if (!report.active[i]) continue;
    const double c = report.violations[i];
    if (c <= 0.0) continue;
    const double rescaled = std::sqrt(c);
    double ratio = rescaled / cat.c_max[i];
    if (ratio > 1.0) ratio = 1.0;
    const double d = specs[i].p_max_at(cat.training_progress) * ratio;
    if (d > delta) delta = d;
  }
  return delta;
}

void update_cmax(CatState& cat, const std::vector<ConstraintReport>& batch) {
  if (batch.empty()) return;
  VecXd batch_max = VecXd::Zero(cat.c_max.size());
  for (const auto& rep : batch)
    batch_max = batch_max.cwiseMax(rep.violations.cwiseSqrt());
  cat.c_max = (cat.ema_coeff * cat.c_max +
               (1.0 - cat.ema_coeff) * batch_max)
                  .cwiseMax(CatState::kFloor);
}

void update_cmax(CatState& cat, const MatXd& batch_violations) {
  if (batch_violations.rows() == 0) return;
  const VecXd batch_max =
      batch_violations.cwiseSqrt().colwise().maxCoeff().transpose();
  cat.c_max = (cat.ema_coeff * cat.c_max +
               (1.0 - cat.ema_coeff) * batch_max)
                  .cwiseMax(CatState::kFloor);
}

}  // namespace parkour::task
