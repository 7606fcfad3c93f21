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

#include <cstdint>
#include <vector>

#include "parkour/common.hpp"
#include "parkour/rng.hpp"

namespace parkour::offpolicy {

inline constexpr int kWindowLen = 25;

enum class Source : uint8_t { online = 0, privileged = 1 };

// Contiguous slice of one episode, stored by value so ring eviction can
// never corrupt a sampled window. Observation arrays carry one extra row
// (the boundary state after the last step) for bootstrap targets.
//
// Step indices within the episode start at a multiple of kWindowLen, so a
// window always begins on a fresh depth frame and the in-window frame
// cadence is implicit: step t uses frame (start_step + t) / depth_period.
struct Window {
  MatXd proprio;      // (len+1, proprio obs dim: proprio + cmd + prev action)
  MatXd priv;         // (len+1, priv dim), raw
  MatXd depth;        // (n_frames, rays), raw ranges
  MatXd actions;      // (len, act dim), normalized units
  VecXd rewards;      // (len)
  MatXd violations;   // (len, n_constraints), raw c+
  uint8_t end_terminated = 0;  // last step ended the episode hard
  double v_cmd = 0.0;
  VecXd h0;           // recurrent state before the first step; zeros when
                      // the window comes from privileged experience
  int start_step = 0;
  int len = 0;
  Source source = Source::online;

  int frames() const { return static_cast<int>(depth.rows()); }
  /// Frame row for in-window step t (t may equal len for the boundary).
  int frame_of(int t, int depth_period) const {
    return (start_step + t) / depth_period - start_step / depth_period;
  }
};

// Ring of whole windows; writes overwrite the oldest slot atomically.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity_windows = 8000)
      : capacity_(capacity_windows) {}

  void push(Window w);
  size_t size() const { return store_.size(); }
  bool empty() const { return store_.empty(); }
  int64_t total_steps() const { return total_steps_; }

  const Window& sample(Rng& rng) const {
    return store_[rng.below(store_.size())];
  }
  const Window& at(size_t i) const { return store_[i]; }

 private:
  std::vector<Window> store_;
  size_t capacity_;
  size_t cursor_ = 0;
  int64_t total_steps_ = 0;
};

/// Equal-proportion batch: half the windows from each buffer whenever both
/// are non-empty; all privileged during warm-up when the online side is
/// still empty. Returns pointers valid until the next push.
std::vector<const Window*> sample_batch(const ReplayBuffer& online,
                                        const ReplayBuffer& priv,
                                        int batch_windows, Rng& rng);

}  // namespace parkour::offpolicy
