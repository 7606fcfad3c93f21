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

#include <cmath>

#include "parkour/ppo/ppo.hpp"

using namespace parkour;
using namespace parkour::ppo;

namespace {

PpoConfig tiny_config() {
  PpoConfig cfg;
  cfg.n_actors = 8;
  cfg.rollout_length = 16;
  cfg.epochs = 2;
  cfg.minibatches = 2;
  cfg.actor_hidden = {32, 32};
  cfg.critic_hidden = {32, 32};
  cfg.max_env_steps = 100000;
  cfg.eval_every = 0;
  cfg.kinds = {sim::TerrainKind::flat};
  cfg.max_level = 0;
  return cfg;
}

RolloutBatch single_actor_batch(int T) {
  RolloutBatch b;
  b.resize(1, T, 1, 1, 1);
  b.obs.setZero();
  b.actions.setZero();
  b.log_probs.setZero();
  b.rewards.setZero();
  b.values.setZero();
  b.deltas.setZero();
  b.violations.setZero();
  return b;
}

}  // namespace

TEST_SUITE("ppo") {

TEST_CASE("gae: single terminal step with r=1 and V=0 gives advantage 1") {
  RolloutBatch b = single_actor_batch(1);
  b.rewards[0] = 1.0;
  b.terminated[0] = 1;
  VecXd adv, ret;
  gae(b, 0.99, 0.95, adv, ret);
  CHECK(adv[0] == doctest::Approx(1.0));
  CHECK(ret[0] == doctest::Approx(1.0));
}

TEST_CASE("gae: two steps, lambda 1, matches discounted monte carlo minus V") {
  const double gamma = 0.9;
  RolloutBatch b = single_actor_batch(2);
  b.rewards << 1.0, 2.0;
  b.values << 0.3, 0.7;
  b.terminated[1] = 1;
  VecXd adv, ret;
  gae(b, gamma, 1.0, adv, ret);
  // hand evaluation: G1 = 2, G0 = 1 + 0.9*2 = 2.8
  CHECK(adv[1] == doctest::Approx(2.0 - 0.7));
  CHECK(adv[0] == doctest::Approx(2.8 - 0.3));
  CHECK(ret[0] == doctest::Approx(2.8));
}

TEST_CASE("gae: zero rewards and zero values give zero advantages") {
  RolloutBatch b = single_actor_batch(5);
  b.terminated[4] = 1;
  VecXd adv, ret;
  gae(b, 0.99, 0.95, adv, ret);
  CHECK(adv.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gae: truncation bootstraps the stored next value") {
  const double gamma = 0.99;
  RolloutBatch b = single_actor_batch(1);
  b.rewards[0] = 0.5;
  b.values[0] = 0.2;
  b.truncated[0] = 1;
  b.boot_values[0] = 2.0;
  VecXd adv, ret;
  gae(b, gamma, 0.95, adv, ret);
  CHECK(adv[0] == doctest::Approx(0.5 + gamma * 2.0 - 0.2));
}

TEST_CASE("ppo step: identical old and new policy gives unit ratios") {
  Rng rng(3);
  nn::MlpSpec aspec;
  aspec.input_dim = 4;
  aspec.hidden = {16};
  aspec.output_dim = 2;
  aspec.head = nn::Head::tanh_bounded;
  nn::GaussianPolicy actor("a", aspec, -0.5, rng);
  nn::MlpSpec cspec;
  cspec.input_dim = 4;
  cspec.hidden = {16};
  cspec.output_dim = 1;
  nn::Mlp critic("c", cspec, rng);

  const int B = 32;
  MatXd obs(B, 4);
  for (int r = 0; r < B; ++r)
    for (int c = 0; c < 4; ++c) obs(r, c) = rng.normal();
  const MatXd means = actor.mean(obs);
  MatXd actions(B, 2);
  VecXd old_lp(B), adv(B), ret(B);
  for (int r = 0; r < B; ++r) {
    const auto s = actor.sample(means.row(r).transpose(), rng);
    actions.row(r) = s.action.transpose();
    old_lp[r] = s.log_prob;
    adv[r] = rng.normal();
    ret[r] = rng.normal();
  }
  PpoConfig cfg = tiny_config();
  const auto stats = ppo_minibatch_step(actor, critic, obs, actions, old_lp,
                                        adv, ret, cfg, nullptr, nullptr);
  CHECK(stats.clip_fraction == 0.0);
  CHECK(stats.approx_kl == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(stats.policy_loss == doctest::Approx(-adv.mean()).epsilon(1e-9));
}

TEST_CASE("ppo step: zero advantages give zero policy gradients") {
  Rng rng(5);
  nn::MlpSpec aspec;
  aspec.input_dim = 3;
  aspec.hidden = {8};
  aspec.output_dim = 2;
  aspec.head = nn::Head::tanh_bounded;
  nn::GaussianPolicy actor("a", aspec, -0.5, rng);
  nn::MlpSpec cspec;
  cspec.input_dim = 3;
  cspec.hidden = {8};
  cspec.output_dim = 1;
  nn::Mlp critic("c", cspec, rng);

  const int B = 8;
  MatXd obs(B, 3);
  MatXd actions(B, 2);
  VecXd old_lp(B);
  for (int r = 0; r < B; ++r) {
    for (int c = 0; c < 3; ++c) obs(r, c) = rng.normal();
    const auto s = actor.sample(actor.mean(obs.row(r)).row(0).transpose(), rng);
    actions.row(r) = s.action.transpose();
    old_lp[r] = s.log_prob;
  }
  PpoConfig cfg = tiny_config();
  ppo_minibatch_step(actor, critic, obs, actions, old_lp, VecXd::Zero(B),
                     VecXd::Zero(B), cfg, nullptr, nullptr);
  // mlp weights see no policy gradient; log_std only the entropy bonus
  for (auto* p : actor.mlp.params())
    CHECK(p->g.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  for (int k = 0; k < 2; ++k)
    CHECK(actor.log_std.g(k, 0) == doctest::Approx(-cfg.entropy_coef));
}

TEST_CASE("ppo step: large ratio with positive advantage is clipped") {
  Rng rng(7);
  nn::MlpSpec aspec;
  aspec.input_dim = 2;
  aspec.hidden = {8};
  aspec.output_dim = 1;
  aspec.head = nn::Head::tanh_bounded;
  nn::GaussianPolicy actor("a", aspec, 0.0, rng);
  nn::MlpSpec cspec;
  cspec.input_dim = 2;
  cspec.hidden = {8};
  cspec.output_dim = 1;
  nn::Mlp critic("c", cspec, rng);

  MatXd obs(1, 2);
  obs << 0.3, -0.2;
  const double mean0 = actor.mean(obs)(0, 0);
  MatXd actions(1, 1);
  actions << mean0 + 0.1;
  const double new_lp =
      actor.log_prob(VecXd::Constant(1, mean0), actions.row(0).transpose());
  // fabricate an old log prob so that ratio = 1.5
  VecXd old_lp(1);
  old_lp << new_lp - std::log(1.5);
  VecXd adv(1), ret(1);
  adv << 2.0;
  ret << 0.0;
  PpoConfig cfg = tiny_config();
  cfg.clip_ratio = 0.2;
  cfg.entropy_coef = 0.0;
  const auto stats = ppo_minibatch_step(actor, critic, obs, actions, old_lp,
                                        adv, ret, cfg, nullptr, nullptr);
  CHECK(stats.policy_loss == doctest::Approx(-1.2 * 2.0).epsilon(1e-9));
  CHECK(stats.clip_fraction == 1.0);
  for (auto* p : actor.mlp.params())  // clipped branch: no gradient flows
    CHECK(p->g.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("rollout bookkeeping: 8 actors x 16 steps is 128 aligned rows") {
  PpoConfig cfg = tiny_config();
  sim::RobotModel model;
  sim::EnvConfig env_cfg;
  Stage1Trainer trainer(cfg, model, env_cfg, 42);
  const RolloutBatch b = trainer.collect_rollouts();
  CHECK(b.size() == 128);
  CHECK(b.obs.rows() == 128);
  CHECK(b.deltas.minCoeff() >= 0.0);
  CHECK(b.deltas.maxCoeff() <= 1.0);
  // time alignment: every terminated/truncated row cuts the sequence
  for (int i = 0; i < b.size(); ++i) {
    CHECK((b.terminated[i] & b.truncated[i]) == 0);
  }
}

TEST_CASE("stored log probs match recomputation from stored actions") {
  PpoConfig cfg = tiny_config();
  sim::RobotModel model;
  sim::EnvConfig env_cfg;
  Stage1Trainer trainer(cfg, model, env_cfg, 43);
  const RolloutBatch b = trainer.collect_rollouts();
  const MatXd means = trainer.actor().mean(b.obs);
  const MatXd lp = trainer.actor().log_prob_batch(means, b.actions);
  for (int i = 0; i < b.size(); ++i)
    CHECK(std::abs(lp(i, 0) - b.log_probs[i]) < 1e-9);
}

TEST_CASE("identical seeds and config give identical batches and updates") {
  PpoConfig cfg = tiny_config();
  sim::RobotModel model;
  sim::EnvConfig env_cfg;
  Stage1Trainer a(cfg, model, env_cfg, 7);
  Stage1Trainer b(cfg, model, env_cfg, 7);
  for (int i = 0; i < 3; ++i) {
    const IterStats sa = a.iterate();
    const IterStats sb = b.iterate();
    REQUIRE(sa.mean_reward == sb.mean_reward);
    REQUIRE(sa.policy_loss == sb.policy_loss);
    REQUIRE(sa.value_loss == sb.value_loss);
    REQUIRE(sa.approx_kl == sb.approx_kl);
  }
}

TEST_CASE("curriculum levels stay within bounds during training") {
  PpoConfig cfg = tiny_config();
  cfg.kinds = {sim::TerrainKind::flat, sim::TerrainKind::step};
  cfg.min_level = 0;
  cfg.max_level = 2;
  sim::RobotModel model;
  sim::EnvConfig env_cfg;
  env_cfg.episode_time_limit = 1.0;  // fast episode turnover
  Stage1Trainer trainer(cfg, model, env_cfg, 11);
  for (int i = 0; i < 6; ++i) trainer.iterate();
  for (const int level : trainer.levels()) {
    CHECK(level >= 0);
    CHECK(level <= 2);
  }
}

TEST_CASE("smoke: reward trends upward on flat ground with terminations off") {
  PpoConfig cfg = tiny_config();
  cfg.cat_enabled = false;
  cfg.n_actors = 16;
  cfg.rollout_length = 32;
  cfg.epochs = 3;
  cfg.minibatches = 4;
  cfg.lr = 1e-3;
  cfg.max_env_steps = 16 * 32 * 40;
  sim::RobotModel model;
  sim::EnvConfig env_cfg;
  env_cfg.episode_time_limit = 4.0;
  Stage1Trainer trainer(cfg, model, env_cfg, 21);
  std::vector<double> rewards;
  for (int i = 0; i < 40; ++i) rewards.push_back(trainer.iterate().mean_reward);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 10; ++i) {
    first += rewards[i] / 10.0;
    last += rewards[30 + i] / 10.0;
  }
  INFO("first ", first, " last ", last);
  CHECK(last >= first);
}

}  // TEST_SUITE
