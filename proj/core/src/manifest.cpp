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

#include "parkour/harness/manifest.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>

namespace parkour::harness {

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

uint64_t executable_fingerprint() {
  static const uint64_t fingerprint = [] {
    std::error_code ec;
    const auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
    if (ec) return uint64_t{0};
    std::ifstream in(self, std::ios::binary);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
      const std::streamsize got = in.gcount();
      for (std::streamsize i = 0; i < got; ++i) {
        h ^= static_cast<unsigned char>(buf[i]);
        h *= 0x100000001b3ULL;
      }
      if (got < static_cast<std::streamsize>(sizeof buf)) break;
    }
    return h;
  }();
  return fingerprint;
}

RunManifest::RunManifest(const RunConfig& config, uint64_t seed,
                         const std::vector<std::string>& argv)
    : config_hash_(config.content_hash()),
      seed_(seed),
      argv_(argv),
      started_at_(iso8601_now()),
      config_text_(config.dump()) {}

void RunManifest::add_output(const std::string& path) {
  outputs_.push_back(path);
}

std::string RunManifest::finalize(const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  nlohmann::json j;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(config_hash_));
  j["config_hash"] = hex;
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(executable_fingerprint()));
  j["binary_fingerprint"] = hex;
  j["seed"] = seed_;
  j["argv"] = argv_;
  j["started_at"] = started_at_;
  j["finished_at"] = iso8601_now();
  j["outputs"] = outputs_;

  const std::string path = out_dir + "/manifest.json";
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  // the resolved configuration rides along for exact reruns
  std::ofstream cfg(out_dir + "/config.resolved.cfg");
  cfg << config_text_;
  return path;
}

}  // namespace parkour::harness
