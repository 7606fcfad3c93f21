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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "parkour/harness/evaluate.hpp"
#include "parkour/harness/manifest.hpp"
#include "parkour/harness/report.hpp"
#include "parkour/ppo/ppo.hpp"

using namespace parkour;
using namespace parkour::harness;

namespace {

nn::PolicyCheckpoint stub_policy(uint64_t seed) {
  Rng rng(seed);
  nn::MlpSpec spec;
  spec.input_dim = sim::kPrivDim;
  spec.hidden = {16};
  spec.output_dim = sim::kActionDim;
  spec.head = nn::Head::tanh_bounded;
  nn::GaussianPolicy actor("actor", spec, -1.0, rng);
  nn::PolicyCheckpoint ckpt;
  ckpt.kind = nn::NetKind::priv_actor;
  ckpt.mlp_spec = spec;
  ckpt.act_lo = VecXd::Constant(4, -1.0);
  ckpt.act_hi = VecXd::Constant(4, 1.0);
  ckpt.set_norm(nn::RunningNorm(sim::kPrivDim));
  ckpt.capture(actor.params());
  return ckpt;
}

RunConfig quick_eval_config() {
  RunConfig cfg;
  cfg.eval.kinds = {sim::TerrainKind::flat, sim::TerrainKind::step};
  cfg.eval.max_level = 1;
  cfg.eval.episodes_per_cell = 2;
  cfg.eval.timeout_s = 1.0;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config: defaults round-trip through dump and parse") {
  RunConfig def;
  std::stringstream ss(def.dump());
  const RunConfig parsed = RunConfig::parse(ss, "<dump>");
  CHECK(parsed.content_hash() == def.content_hash());
  CHECK(parsed.ppo.n_actors == def.ppo.n_actors);
  CHECK(parsed.suite.size() == task::kNumConstraints);
}

TEST_CASE("config: values land in the right fields") {
  std::stringstream ss(
      "seed = 9\n"
      "ppo.n_actors = 32\n"
      "ppo.kinds = flat,gap\n"
      "robot.torque_limit = 2.5\n"
      "constraint.torque_hip_fore.p_max_end = 0.4\n"
      "eval.float32 = true\n");
  const RunConfig cfg = RunConfig::parse(ss, "<test>");
  CHECK(cfg.seed == 9);
  CHECK(cfg.ppo.n_actors == 32);
  REQUIRE(cfg.ppo.kinds.size() == 2);
  CHECK(cfg.ppo.kinds[1] == sim::TerrainKind::gap);
  CHECK(cfg.robot.torque_limit == 2.5);
  CHECK(cfg.suite[task::kTorque0].p_max.end == 0.4);
  CHECK(cfg.ppo.suite[task::kTorque0].p_max.end == 0.4);  // propagated
  CHECK(cfg.eval.float32);
}

TEST_CASE("config: unknown keys, duplicates and bad values are rejected") {
  {
    std::stringstream ss("nonsense.key = 1\n");
    CHECK_THROWS_AS(RunConfig::parse(ss, "<t>"), ConfigError);
  }
  {
    std::stringstream ss("seed = 1\nseed = 2\n");
    CHECK_THROWS_AS(RunConfig::parse(ss, "<t>"), ConfigError);
  }
  {
    std::stringstream ss("ppo.gamma = banana\n");
    CHECK_THROWS_AS(RunConfig::parse(ss, "<t>"), ConfigError);
  }
  {
    std::stringstream ss("ppo.kinds = flat,upsidedown\n");
    CHECK_THROWS_AS(RunConfig::parse(ss, "<t>"), ConfigError);
  }
}

TEST_CASE("eval: a do-nothing policy scores zero completion and success") {
  // an untrained stub mostly stands/wobbles: far from finishing in 1 s
  const auto ckpt = stub_policy(3);
  const RunConfig cfg = quick_eval_config();
  const EvalResult result = eval_policy(ckpt, nullptr, cfg, 7);
  REQUIRE(!result.cells.empty());
  for (const auto& cell : result.cells) {
    CHECK(cell.completion < 0.5);
    CHECK(cell.success_rate == 0.0);
    CHECK(cell.episodes == 2);
  }
}

TEST_CASE("eval: results are bitwise deterministic for a fixed seed") {
  const auto ckpt = stub_policy(5);
  const RunConfig cfg = quick_eval_config();
  const EvalResult a = eval_policy(ckpt, nullptr, cfg, 11);
  const EvalResult b = eval_policy(ckpt, nullptr, cfg, 11);
  REQUIRE(a.cells.size() == b.cells.size());
  for (size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].completion == b.cells[i].completion);
    CHECK(a.cells[i].success_rate == b.cells[i].success_rate);
    CHECK(a.cells[i].violation_pct == b.cells[i].violation_pct);
  }
}

TEST_CASE("eval csv round-trips through save and load") {
  const auto ckpt = stub_policy(8);
  RunConfig cfg = quick_eval_config();
  EvalResult result = eval_policy(ckpt, nullptr, cfg, 13);
  result.policy_name = "stub";
  const std::string path = "/tmp/parkour_eval_test.csv";
  result.save_csv(path);
  const EvalResult loaded = EvalResult::load_csv(path);
  CHECK(loaded.policy_name == "stub");
  REQUIRE(loaded.cells.size() == result.cells.size());
  for (size_t i = 0; i < loaded.cells.size(); ++i) {
    CHECK(loaded.cells[i].kind == result.cells[i].kind);
    CHECK(loaded.cells[i].completion == result.cells[i].completion);
    CHECK(loaded.cells[i].violation_pct == result.cells[i].violation_pct);
  }
  std::filesystem::remove(path);
}

TEST_CASE("report emits csv tables and svg plots from results alone") {
  const std::string dir = "/tmp/parkour_report_test";
  std::filesystem::remove_all(dir);
  MethodRun run;
  run.name = "stub";
  for (int level = 0; level <= 2; ++level) {
    EvalCell cell;
    cell.kind = sim::TerrainKind::step;
    cell.level = level;
    cell.obstacle_dimension = sim::obstacle_dimension_for(cell.kind, level);
    cell.completion = 1.0 - 0.2 * level;
    cell.success_rate = 1.0;
    cell.episodes = 4;
    cell.success_steps = 100;
    cell.violation_pct = VecXd::Zero(task::kNumConstraints);
    cell.violation_pct[task::kTorque0] = 0.02;
    run.result.cells.push_back(cell);
  }
  emit_report({run}, dir);
  CHECK(std::filesystem::exists(dir + "/completion_by_dimension.csv"));
  CHECK(std::filesystem::exists(dir + "/violations_by_dimension.csv"));
  CHECK(std::filesystem::exists(dir + "/completion_step.svg"));
  CHECK(std::filesystem::exists(dir + "/violations_torque_step.svg"));
  std::ifstream svg(dir + "/completion_step.svg");
  std::string contents((std::istreambuf_iterator<char>(svg)),
                       std::istreambuf_iterator<char>());
  CHECK(contents.find("<svg") != std::string::npos);
  CHECK(contents.find("polyline") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest records hashes, seed and outputs") {
  const std::string dir = "/tmp/parkour_manifest_test";
  std::filesystem::remove_all(dir);
  RunConfig cfg;
  RunManifest manifest(cfg, 42, {"parkour", "eval"});
  manifest.add_output("a.csv");
  const std::string path = manifest.finalize(dir);
  std::ifstream in(path);
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  CHECK(contents.find("config_hash") != std::string::npos);
  CHECK(contents.find("\"seed\": 42") != std::string::npos);
  CHECK(contents.find("a.csv") != std::string::npos);
  CHECK(std::filesystem::exists(dir + "/config.resolved.cfg"));
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
