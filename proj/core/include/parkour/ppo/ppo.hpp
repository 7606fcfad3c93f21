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

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "parkour/nn/adam.hpp"
#include "parkour/nn/checkpoint.hpp"
#include "parkour/nn/nets.hpp"
#include "parkour/nn/norm.hpp"
#include "parkour/sim/env.hpp"
#include "parkour/task/cat.hpp"

namespace parkour::ppo {

struct PpoConfig {
  int n_actors = 256;
  int rollout_length = 32;
  int epochs = 5;
  int minibatches = 4;
  double clip_ratio = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  double entropy_coef = 0.005;
  double value_coef = 0.5;
  double lr = 3e-4;
  double grad_clip = 1.0;
  double init_log_std = -1.0;
  double min_log_std = -1.6;  // exploration floor; entropy alone is too weak
  double min_log_std_final = -2.5;  // floor released late so gaits consolidate
  double explore_hold_fraction = 0.6;
  int64_t max_env_steps = 3000000;

  // PD damping ramps up over training; stiffness stays fixed
  double kd_start = 0.05;
  double kd_end = 0.2;

  // curriculum
  std::vector<sim::TerrainKind> kinds = {sim::TerrainKind::flat,
                                         sim::TerrainKind::step};
  int min_level = 0;
  int max_level = sim::kMaxLevel;
  int demote_after = 3;          // consecutive early failures
  double early_fail_completion = 0.4;
  double promote_completion = 0.6;  // traversal success clears the obstacle

  std::vector<int> actor_hidden = {512, 256, 128};
  std::vector<int> critic_hidden = {512, 256, 128};

  bool cat_enabled = true;       // all p_max forced to 0 when false
  double cat_ema = 0.9;
  std::vector<task::ConstraintSpec> suite = task::constraint_specs();

  int eval_every = 25;           // iterations between in-loop evaluations
  int eval_episodes = 4;         // per (kind, level) cell

  void validate() const;
};

// Time-major flattened rollout storage: index = actor * T + t.
struct RolloutBatch {
  MatXd obs;         // normalized privileged observations
  MatXd obs_raw;     // raw observations (feeds the normalizer update)
  MatXd actions;     // sampled actions, normalized units
  VecXd log_probs;
  VecXd rewards;
  VecXd values;
  VecXd deltas;            // termination probabilities
  VecXd boot_values;       // bootstrap value at episode cuts
  std::vector<uint8_t> terminated;  // absorbing cut: bootstrap 0
  std::vector<uint8_t> truncated;   // timeout/finish cut: bootstrap boot_values
  MatXd violations;  // raw c+ per step
  int n_actors = 0;
  int rollout_length = 0;

  int size() const { return n_actors * rollout_length; }
  void resize(int actors, int T, int obs_dim, int act_dim, int n_constraints);
};

/// Generalized advantage estimation over a rollout batch. Terminated rows
/// bootstrap zero (absorbing per the termination reformulation), truncated
/// rows bootstrap the stored value of the successor state.
void gae(const RolloutBatch& batch, double gamma, double lambda,
         VecXd& advantages, VecXd& returns);

struct PpoLossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

/// One clipped-surrogate + value + entropy update on a minibatch; pass null
/// optimizers to compute losses/grads without applying them.
PpoLossStats ppo_minibatch_step(nn::GaussianPolicy& actor, nn::Mlp& critic,
                                const MatXd& obs, const MatXd& actions,
                                const VecXd& old_log_probs,
                                const VecXd& advantages, const VecXd& returns,
                                const PpoConfig& cfg, nn::Adam* actor_opt,
                                nn::Adam* critic_opt);

struct IterStats {
  int iteration = 0;
  int64_t env_steps = 0;
  double mean_reward = 0.0;     // per step
  double mean_delta = 0.0;
  double mean_episode_len = 0.0;
  double mean_completion = 0.0;  // episodes that ended this iteration
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double kd = 0.0;
  double p_max_soft = 0.0;
  int episodes_finished = 0;
  int episodes_ended = 0;
  int diverged = 0;
  VecXd violation_rate;          // fraction of steps violating each row
  std::vector<double> eval_completion;  // per (kind, level) cell, if run
  bool eval_ran = false;
};

// Privileged on-policy learner. Owns the actor/critic pair, the observation
// normalizer and the curriculum state of its environments.
class Stage1Trainer {
 public:
  Stage1Trainer(const PpoConfig& config, const sim::RobotModel& model,
                const sim::EnvConfig& env_config, uint64_t seed);

  /// One collect + update cycle.
  IterStats iterate();

  /// Runs until the step budget is exhausted or stop(stats) returns true.
  /// Returns the final checkpoint.
  nn::PolicyCheckpoint train(
      const std::function<bool(const IterStats&)>& stop = nullptr,
      std::ostream* metrics_csv = nullptr);

  nn::PolicyCheckpoint checkpoint() const;

  /// Deterministic completion probe on a (kind, level) grid with the policy
  /// mean and terminations disabled.
  std::vector<double> evaluate_completion(
      const std::vector<std::pair<sim::TerrainKind, int>>& cells,
      int episodes_per_cell);

  const task::CatState& cat() const { return cat_; }
  const PpoConfig& config() const { return cfg_; }
  const std::vector<int>& levels() const { return levels_; }
  nn::GaussianPolicy& actor() { return actor_; }
  const nn::RunningNorm& norm() const { return norm_; }
  int64_t env_steps() const { return env_steps_; }

  /// Exposed for the bookkeeping and determinism tests.
  RolloutBatch collect_rollouts();
  double progress() const {
    return std::min(1.0, static_cast<double>(env_steps_) /
                             static_cast<double>(cfg_.max_env_steps));
  }

 private:
  void compute_gae(const RolloutBatch& batch, VecXd& advantages,
                   VecXd& returns) const;
  void ppo_update(const RolloutBatch& batch, const VecXd& advantages,
                  const VecXd& returns, IterStats& stats);
  sim::PdGains gains_now() const;
  void end_episode(int actor, bool finished, double completion);

  PpoConfig cfg_;
  sim::RobotModel model_;
  sim::EnvConfig env_cfg_;
  Rng rng_;
  std::vector<sim::Env> envs_;
  std::vector<int> levels_;
  std::vector<int> fail_streak_;
  std::vector<int> ep_steps_;
  nn::GaussianPolicy actor_;
  nn::Mlp critic_;
  nn::Adam actor_opt_;
  nn::Adam critic_opt_;
  nn::RunningNorm norm_;
  task::CatState cat_;
  int64_t env_steps_ = 0;
  int iteration_ = 0;
  double min_log_std_base_ = -1.6;
  IterStats last_stats_;
};

/// CSV header matching Stage1Trainer metric rows.
std::string stage1_metrics_header();
void write_stage1_metrics_row(std::ostream& out, const IterStats& stats);

}  // namespace parkour::ppo
