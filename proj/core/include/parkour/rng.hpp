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
#include <utility>

namespace parkour {

// Deterministic PRNG with fully specified distributions. The standard
// library distributions are implementation-defined, which breaks the
// bitwise reproducibility contract, so uniform/normal are spelled out here.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) { reseed(seed); }

  void reseed(uint64_t seed);

  uint64_t next_u64();

  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Unbiased integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n);

  /// Standard normal via Box-Muller (caches the second deviate).
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniformly drawn unordered pair {i, j}, i < j < n, over all n*(n-1)/2 pairs.
  std::pair<int, int> unordered_pair(int n);

  /// Derive an independent stream (e.g. one per environment).
  Rng split(uint64_t stream) const;

 private:
  uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace parkour
