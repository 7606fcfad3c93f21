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

#include "parkour/baselines/distill.hpp"
#include "parkour/ppo/ppo.hpp"

using namespace parkour;
using namespace parkour::baselines;

namespace {

nn::PolicyCheckpoint quick_teacher(uint64_t seed) {
  Rng rng(seed);
  nn::MlpSpec spec;
  spec.input_dim = sim::kPrivDim;
  spec.hidden = {32, 16};
  spec.output_dim = sim::kActionDim;
  spec.head = nn::Head::tanh_bounded;
  nn::GaussianPolicy actor("actor", spec, -1.2, rng);
  nn::PolicyCheckpoint ckpt;
  ckpt.kind = nn::NetKind::priv_actor;
  ckpt.mlp_spec = spec;
  ckpt.act_lo = VecXd::Constant(4, -1.0);
  ckpt.act_hi = VecXd::Constant(4, 1.0);
  ckpt.set_norm(nn::RunningNorm(sim::kPrivDim));
  ckpt.capture(actor.params());
  return ckpt;
}

offpolicy::Dataset quick_dataset(const nn::PolicyCheckpoint& teacher,
                                 int64_t samples, uint64_t seed) {
  sim::RobotModel model;
  sim::EnvConfig env_cfg;
  offpolicy::CollectConfig cc;
  cc.n_samples = samples;
  cc.kinds = {sim::TerrainKind::flat};
  cc.max_level = 0;
  cc.seed = seed;
  return offpolicy::collect_privileged_experience(teacher, model, env_cfg, cc);
}

DistillConfig quick_config() {
  DistillConfig cfg;
  cfg.visual.conv.rays = 32;
  cfg.visual.conv.channels = {4, 4};
  cfg.visual.conv.latent_dim = 8;
  cfg.visual.gru_hidden = 16;
  cfg.visual.mlp.hidden = {32};
  cfg.visual.mlp.output_dim = sim::kActionDim;
  cfg.visual.mlp.head = nn::Head::tanh_bounded;
  cfg.window_len = 10;
  cfg.batch_windows = 8;
  cfg.epochs = 6;
  cfg.iterations = 2;
  cfg.epochs_per_iteration = 2;
  cfg.rollout_steps = 400;
  cfg.kinds = {sim::TerrainKind::flat};
  cfg.max_level = 0;
  cfg.lr = 1e-3;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("bc training reduces the regression loss") {
  const auto teacher = quick_teacher(3);
  const auto data = quick_dataset(teacher, 800, 11);
  DistillConfig cfg = quick_config();
  std::vector<DistillStats> history;
  const auto ckpt = bc_train(data, cfg, nullptr, &history);
  REQUIRE(history.size() == static_cast<size_t>(cfg.epochs));
  CHECK(history.back().train_loss <= history.front().train_loss);
  CHECK(history.back().val_loss < 2.0 * history.front().val_loss + 1e-9);
  CHECK(ckpt.kind == nn::NetKind::visual_actor);
}

TEST_CASE("bc rejects an empty dataset") {
  offpolicy::Dataset empty;
  CHECK_THROWS_AS(bc_train(empty, quick_config()), ConfigError);
}

TEST_CASE("dagger aggregates strictly and leaves the teacher untouched") {
  const auto teacher = quick_teacher(7);
  const auto data = quick_dataset(teacher, 600, 13);
  DistillConfig cfg = quick_config();
  const auto bc = bc_train(data, cfg);
  std::vector<DistillStats> history;
  sim::RobotModel model;
  sim::EnvConfig env_cfg;
  const auto before = teacher;  // value copy of tensors
  const auto ckpt =
      dagger_train(teacher, bc, data, cfg, model, env_cfg, nullptr, &history);
  REQUIRE(history.size() == static_cast<size_t>(cfg.iterations));
  CHECK(history[0].dataset_steps > data.total_steps());
  for (size_t i = 1; i < history.size(); ++i)
    CHECK(history[i].dataset_steps > history[i - 1].dataset_steps);
  for (size_t i = 0; i < teacher.tensors.size(); ++i)
    CHECK(teacher.tensors[i].second == before.tensors[i].second);
  CHECK(ckpt.kind == nn::NetKind::visual_actor);
}

TEST_CASE("teacher relabelling is bitwise reproducible") {
  const auto teacher_ckpt = quick_teacher(9);
  Rng r1(1), r2(1);
  nn::GaussianPolicy a("actor", teacher_ckpt.mlp_spec, 0.0, r1);
  nn::GaussianPolicy b("actor", teacher_ckpt.mlp_spec, 0.0, r2);
  teacher_ckpt.restore(a.params());
  teacher_ckpt.restore(b.params());
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    MatXd obs(1, sim::kPrivDim);
    for (int k = 0; k < sim::kPrivDim; ++k) obs(0, k) = rng.normal();
    CHECK(a.mean(obs) == b.mean(obs));
  }
}

TEST_CASE("recon training runs and the frozen head is bit-identical") {
  const auto teacher = quick_teacher(21);
  auto data = quick_dataset(teacher, 500, 23);
  DistillConfig cfg = quick_config();
  cfg.iterations = 2;
  sim::RobotModel model;
  sim::EnvConfig env_cfg;
  std::vector<DistillStats> history;
  const auto ckpt =
      priv_recon_train(teacher, data, cfg, model, env_cfg, nullptr, &history);
  CHECK(ckpt.kind == nn::NetKind::recon);
  REQUIRE(history.size() == 2);
  CHECK(history.back().recon_err >= 0.0);
  // loss should drop across iterations on this easy flat-only task
  CHECK(history.back().train_loss <= history.front().train_loss * 1.5 + 1e-6);
}

TEST_CASE("recon probe labels occlusion only when a block exists unseen") {
  const auto teacher = quick_teacher(31);
  auto data = quick_dataset(teacher, 400, 33);
  DistillConfig cfg = quick_config();
  cfg.iterations = 1;
  sim::RobotModel model;
  sim::EnvConfig env_cfg;
  const auto recon =
      priv_recon_train(teacher, data, cfg, model, env_cfg, nullptr, nullptr);
  const auto flat = probe_recon_errors(recon, teacher, model, env_cfg,
                                       sim::TerrainKind::flat, 0, 200, 41);
  REQUIRE(flat.size() == 200);
  for (const auto& s : flat) {
    CHECK_FALSE(s.has_block);
    CHECK_FALSE(s.occluded);
    CHECK(s.ceiling_abs_err >= 0.0);
  }
  const auto crawl = probe_recon_errors(recon, teacher, model, env_cfg,
                                        sim::TerrainKind::crawl, 5, 200, 43);
  int blocks = 0;
  for (const auto& s : crawl) blocks += s.has_block ? 1 : 0;
  CHECK(blocks > 0);
}

}  // TEST_SUITE
