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

#include "parkour/nn/adam.hpp"

#include <cmath>

namespace parkour::nn {

void Adam::step(const ParamList& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto* p : params) {
    p->m = cfg_.beta1 * p->m + (1.0 - cfg_.beta1) * p->g;
    p->v = cfg_.beta2 * p->v.array() + (1.0 - cfg_.beta2) * p->g.array().square();
    p->w.array() -= cfg_.lr * (p->m.array() / bc1) /
                    ((p->v.array() / bc2).sqrt() + cfg_.eps);
  }
}

}  // namespace parkour::nn
