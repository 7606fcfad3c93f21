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
#include <vector>

#include "parkour/harness/config.hpp"

namespace parkour::harness {

// Every run directory gets a manifest capturing what produced it: the
// config hash, seed, a fingerprint of the executable and the timestamps,
// enough to rerun the command exactly.
class RunManifest {
 public:
  RunManifest(const RunConfig& config, uint64_t seed,
              const std::vector<std::string>& argv);

  void add_output(const std::string& path);
  /// Writes <out_dir>/manifest.json and returns its path.
  std::string finalize(const std::string& out_dir);

 private:
  uint64_t config_hash_;
  uint64_t seed_;
  std::vector<std::string> argv_;
  std::string started_at_;
  std::vector<std::string> outputs_;
  std::string config_text_;
};

std::string iso8601_now();
uint64_t executable_fingerprint();

}  // namespace parkour::harness
