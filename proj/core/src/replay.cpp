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

#include "parkour/offpolicy/replay.hpp"

namespace parkour::offpolicy {

void ReplayBuffer::push(Window w) {
  total_steps_ += w.len;
  if (store_.size() < capacity_) {
    store_.push_back(std::move(w));
    return;
  }
  total_steps_ -= store_[cursor_].len;
  store_[cursor_] = std::move(w);
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<const Window*> sample_batch(const ReplayBuffer& online,
                                        const ReplayBuffer& priv,
                                        int batch_windows, Rng& rng) {
  std::vector<const Window*> out;
  out.reserve(batch_windows);
  if (online.empty() && priv.empty()) return out;
  if (online.empty() || priv.empty()) {
    const ReplayBuffer& only = online.empty() ? priv : online;
    for (int i = 0; i < batch_windows; ++i) out.push_back(&only.sample(rng));
    return out;
  }
  const int half = batch_windows / 2;
  for (int i = 0; i < half; ++i) out.push_back(&online.sample(rng));
  for (int i = 0; i < batch_windows - half; ++i)
    out.push_back(&priv.sample(rng));
  return out;
}

}  // namespace parkour::offpolicy
