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

#include "parkour/ppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "parkour/task/reward.hpp"
#include "parkour/threadpool.hpp"

namespace parkour::ppo {

void PpoConfig::validate() const {
  if (n_actors <= 0 || rollout_length <= 0)
    throw ConfigError("ppo: actors and rollout length must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0) || !(lambda > 0.0 && lambda <= 1.0))
    throw ConfigError("ppo: gamma and lambda must lie in (0, 1]");
  if (minibatches <= 0 || epochs <= 0)
    throw ConfigError("ppo: epochs/minibatches must be positive");
  if (n_actors * rollout_length % minibatches != 0)
    throw ConfigError("ppo: batch size must divide into minibatches");
  if (kinds.empty()) throw ConfigError("ppo: no terrain kinds configured");
  if (min_level < 0 || max_level > sim::kMaxLevel || min_level > max_level)
    throw ConfigError("ppo: bad level range");
}

void RolloutBatch::resize(int actors, int T, int obs_dim, int act_dim,
                          int n_constraints) {
  n_actors = actors;
  rollout_length = T;
  const int n = actors * T;
  obs.resize(n, obs_dim);
  obs_raw.resize(n, obs_dim);
  actions.resize(n, act_dim);
  log_probs.resize(n);
  rewards.resize(n);
  values.resize(n);
  deltas.resize(n);
  boot_values = VecXd::Zero(n);
  terminated.assign(n, 0);
  truncated.assign(n, 0);
  violations.resize(n, n_constraints);
}

// ---------------------------------------------------------------------------

Stage1Trainer::Stage1Trainer(const PpoConfig& config,
                             const sim::RobotModel& model,
                             const sim::EnvConfig& env_config, uint64_t seed)
    : cfg_(config),
      model_(model),
      env_cfg_(env_config),
      rng_(seed),
      cat_(task::kNumConstraints, config.cat_ema) {
  cfg_.validate();
  min_log_std_base_ = cfg_.min_log_std;
  cat_.enabled = cfg_.cat_enabled;

  Rng init_rng = rng_.split(0xA11C);
  nn::MlpSpec actor_spec;
  actor_spec.input_dim = sim::kPrivDim;
  actor_spec.hidden = cfg_.actor_hidden;
  actor_spec.output_dim = sim::kActionDim;
  actor_spec.head = nn::Head::tanh_bounded;
  actor_ = nn::GaussianPolicy("actor", actor_spec, cfg_.init_log_std, init_rng);

  nn::MlpSpec critic_spec;
  critic_spec.input_dim = sim::kPrivDim;
  critic_spec.hidden = cfg_.critic_hidden;
  critic_spec.output_dim = 1;
  critic_spec.layer_norm = true;
  critic_ = nn::Mlp("critic", critic_spec, init_rng);

  actor_opt_ = nn::Adam(nn::AdamConfig{.lr = cfg_.lr});
  critic_opt_ = nn::Adam(nn::AdamConfig{.lr = cfg_.lr});
  norm_.reset(sim::kPrivDim);

  envs_.reserve(cfg_.n_actors);
  levels_.assign(cfg_.n_actors, cfg_.min_level);
  fail_streak_.assign(cfg_.n_actors, 0);
  ep_steps_.assign(cfg_.n_actors, 0);
  for (int i = 0; i < cfg_.n_actors; ++i) {
    envs_.emplace_back(model_, env_cfg_, rng_.split(100 + i).next_u64());
    const sim::TerrainKind kind = cfg_.kinds[i % cfg_.kinds.size()];
    envs_[i].reset(kind, levels_[i]);
  }
}

sim::PdGains Stage1Trainer::gains_now() const {
  return {env_cfg_.kp,
          cfg_.kd_start + progress() * (cfg_.kd_end - cfg_.kd_start)};
}

void Stage1Trainer::end_episode(int actor, bool finished, double completion) {
  if (finished || completion >= cfg_.promote_completion) {
    levels_[actor] = std::min(levels_[actor] + 1, cfg_.max_level);
    fail_streak_[actor] = 0;
  } else if (completion < cfg_.early_fail_completion) {
    if (++fail_streak_[actor] >= cfg_.demote_after) {
      levels_[actor] = std::max(levels_[actor] - 1, cfg_.min_level);
      fail_streak_[actor] = 0;
    }
  } else {
    fail_streak_[actor] = 0;
  }
  const sim::TerrainKind kind = cfg_.kinds[actor % cfg_.kinds.size()];
  envs_[actor].reset(kind, levels_[actor]);
  ep_steps_[actor] = 0;
}

RolloutBatch Stage1Trainer::collect_rollouts() {
  const int N = cfg_.n_actors;
  const int T = cfg_.rollout_length;
  RolloutBatch batch;
  batch.resize(N, T, sim::kPrivDim, sim::kActionDim, task::kNumConstraints);

  const sim::PdGains gains = gains_now();
  cat_.training_progress = progress();
  const auto& specs = cfg_.suite;
  auto& pool = ThreadPool::global();

  // per-actor episode bookkeeping gathered for the stats pass
  last_stats_.episodes_finished = 0;
  last_stats_.episodes_ended = 0;
  last_stats_.diverged = 0;
  double completion_sum = 0.0;
  double ep_len_sum = 0.0;

  MatXd obs_raw(N, sim::kPrivDim);
  std::vector<double> boot_rows(N);
  std::vector<int8_t> need_boot(N);

  for (int t = 0; t < T; ++t) {
    pool.parallel_for(N, [&](int i) {
      obs_raw.row(i) =
          envs_[i].priv_obs().flatten().transpose();
    });
    const MatXd obs = norm_.apply(obs_raw);
    const MatXd means = actor_.mean(obs);
    const VecXd values = critic_.forward(obs).col(0);

    struct StepScratch {
      bool ended = false, finished = false, diverged = false;
      double completion = 0.0;
      int ep_len = 0;
    };
    std::vector<StepScratch> scratch(N);
    std::fill(need_boot.begin(), need_boot.end(), 0);

    pool.parallel_for(N, [&](int i) {
      sim::Env& env = envs_[i];
      const int row = i * T + t;
      const auto sample = actor_.sample(means.row(i).transpose(), env.rng());
      batch.obs.row(row) = obs.row(i);
      batch.obs_raw.row(row) = obs_raw.row(i);
      batch.actions.row(row) = sample.action.transpose();
      batch.log_probs[row] = sample.log_prob;
      batch.values[row] = values[i];

      double reward = 0.0;
      double delta = 0.0;
      bool terminated = false;
      bool truncated = false;
      VecXd viol = VecXd::Zero(task::kNumConstraints);
      bool diverged = false;
      const Vec4d prev_offsets = env.prev_action();
      try {
        const sim::ConstraintInputs& ci = env.step(sample.action, gains);
        reward = task::reward(env.state(), env.v_cmd());
        task::TerrainContext ctx{
            env.terrain().kind, env.terrain().difficulty, env.v_cmd() > 0.0,
            std::hypot(env.state().base_vx, env.state().base_vz)};
        const auto rep = task::evaluate_constraints(
            ci, prev_offsets, env.v_cmd(), ctx, model_, specs);
        viol = rep.violations;
        delta = task::termination_prob(rep, cat_, specs);
        terminated = task::sample_termination(delta, env.rng());
        if (!terminated && env.fallen()) terminated = true;
        if (!terminated) {
          if (env.finished() || env.timed_out()) truncated = true;
        }
      } catch (const SimulationDiverged&) {
        diverged = true;
        terminated = true;
        delta = 1.0;
      }

      batch.rewards[row] = reward;
      batch.deltas[row] = delta;
      batch.violations.row(row) = viol.transpose();
      batch.terminated[row] = terminated ? 1 : 0;
      batch.truncated[row] = truncated ? 1 : 0;
      ++ep_steps_[i];

      if (truncated) need_boot[i] = 1;

      if (terminated || truncated) {
        scratch[i].ended = true;
        scratch[i].finished = env.finished();
        scratch[i].completion = env.completion();
        scratch[i].ep_len = ep_steps_[i];
        scratch[i].diverged = diverged;
      }
    });

    // bootstrap values for episodes cut by timeout/finish
    std::vector<int> boot_envs;
    for (int i = 0; i < N; ++i)
      if (need_boot[i]) boot_envs.push_back(i);
    if (!boot_envs.empty()) {
      MatXd next_obs(static_cast<int>(boot_envs.size()), sim::kPrivDim);
      for (size_t k = 0; k < boot_envs.size(); ++k)
        next_obs.row(static_cast<int>(k)) =
            envs_[boot_envs[k]].priv_obs().flatten().transpose();
      const VecXd next_values = critic_.forward(norm_.apply(next_obs)).col(0);
      for (size_t k = 0; k < boot_envs.size(); ++k)
        batch.boot_values[boot_envs[k] * T + t] = next_values[k];
    }

    // serial episode-end pass: resets, curriculum moves, stats
    for (int i = 0; i < N; ++i) {
      if (!scratch[i].ended) continue;
      ++last_stats_.episodes_ended;
      if (scratch[i].finished) ++last_stats_.episodes_finished;
      if (scratch[i].diverged) ++last_stats_.diverged;
      completion_sum += scratch[i].completion;
      ep_len_sum += scratch[i].ep_len;
      end_episode(i, scratch[i].finished, scratch[i].completion);
    }
  }

  // cut every still-running trajectory at the batch boundary
  {
    std::vector<int> open_envs;
    for (int i = 0; i < N; ++i) {
      const int row = i * T + (T - 1);
      if (!batch.terminated[row] && !batch.truncated[row]) open_envs.push_back(i);
    }
    if (!open_envs.empty()) {
      MatXd next_obs(static_cast<int>(open_envs.size()), sim::kPrivDim);
      for (size_t k = 0; k < open_envs.size(); ++k)
        next_obs.row(static_cast<int>(k)) =
            envs_[open_envs[k]].priv_obs().flatten().transpose();
      const VecXd next_values = critic_.forward(norm_.apply(next_obs)).col(0);
      for (size_t k = 0; k < open_envs.size(); ++k) {
        const int row = open_envs[k] * T + (T - 1);
        batch.truncated[row] = 1;
        batch.boot_values[row] = next_values[k];
      }
    }
  }

  last_stats_.mean_reward = batch.rewards.mean();
  last_stats_.mean_delta = batch.deltas.mean();
  last_stats_.mean_completion =
      last_stats_.episodes_ended
          ? completion_sum / last_stats_.episodes_ended
          : 0.0;
  last_stats_.mean_episode_len =
      last_stats_.episodes_ended ? ep_len_sum / last_stats_.episodes_ended : 0.0;
  last_stats_.violation_rate =
      (batch.violations.array() > 0.0).cast<double>().colwise().mean();
  return batch;
}

void Stage1Trainer::compute_gae(const RolloutBatch& batch, VecXd& advantages,
                                VecXd& returns) const {
  gae(batch, cfg_.gamma, cfg_.lambda, advantages, returns);
}

void gae(const RolloutBatch& batch, double gamma, double lambda,
         VecXd& advantages, VecXd& returns) {
  const int N = batch.n_actors;
  const int T = batch.rollout_length;
  advantages.resize(N * T);
  returns.resize(N * T);
  for (int i = 0; i < N; ++i) {
    double next_adv = 0.0;
    double next_value = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      const int row = i * T + t;
      if (batch.terminated[row]) {
        next_value = 0.0;
        next_adv = 0.0;
      } else if (batch.truncated[row]) {
        next_value = batch.boot_values[row];
        next_adv = 0.0;
      }
      const double delta =
          batch.rewards[row] + gamma * next_value - batch.values[row];
      advantages[row] = delta + gamma * lambda * next_adv;
      returns[row] = advantages[row] + batch.values[row];
      next_value = batch.values[row];
      next_adv = advantages[row];
    }
  }
}

PpoLossStats ppo_minibatch_step(nn::GaussianPolicy& actor, nn::Mlp& critic,
                                const MatXd& obs, const MatXd& actions,
                                const VecXd& old_log_probs,
                                const VecXd& advantages, const VecXd& returns,
                                const PpoConfig& cfg, nn::Adam* actor_opt,
                                nn::Adam* critic_opt) {
  const int B = static_cast<int>(obs.rows());
  const int A = static_cast<int>(actions.cols());
  PpoLossStats out;

  nn::Mlp::Cache actor_cache;
  const MatXd means = actor.mlp.forward(obs, actor_cache);
  const VecXd new_lp = actor.log_prob_batch(means, actions).col(0);

  nn::Mlp::Cache critic_cache;
  const VecXd v = critic.forward(obs, critic_cache).col(0);

  MatXd dmean = MatXd::Zero(B, A);
  VecXd dlogstd = VecXd::Zero(A);
  MatXd dv = MatXd::Zero(B, 1);

  double policy_loss = 0.0, value_loss = 0.0, kl = 0.0;
  int clipped = 0;
  const double inv_b = 1.0 / B;
  for (int r = 0; r < B; ++r) {
    const double ratio = std::exp(new_lp[r] - old_log_probs[r]);
    const double adv = advantages[r];
    const double clip_lo = 1.0 - cfg.clip_ratio;
    const double clip_hi = 1.0 + cfg.clip_ratio;
    const double surr1 = ratio * adv;
    const double surr2 = std::clamp(ratio, clip_lo, clip_hi) * adv;
    policy_loss -= std::min(surr1, surr2) * inv_b;
    kl += (old_log_probs[r] - new_lp[r]) * inv_b;
    if (std::abs(ratio - 1.0) > cfg.clip_ratio) ++clipped;

    // d(-min(surr1, surr2))/d(new_lp): surr1 path only, and only when the
    // unclipped branch is active
    double dlp = 0.0;
    if (surr1 <= surr2) dlp = -adv * ratio * inv_b;

    const double verr = v[r] - returns[r];
    value_loss += verr * verr * inv_b;
    dv(r, 0) = cfg.value_coef * 2.0 * verr * inv_b;

    for (int k = 0; k < A; ++k) {
      const double sd = std::exp(actor.log_std.w(k, 0));
      const double z = (actions(r, k) - means(r, k)) / sd;
      dmean(r, k) = dlp * (z / sd);
      dlogstd[k] += dlp * (z * z - 1.0);
    }
  }
  for (int k = 0; k < A; ++k) dlogstd[k] -= cfg.entropy_coef;  // entropy bonus

  out.policy_loss = policy_loss;
  out.value_loss = value_loss;
  out.entropy = actor.entropy();
  out.approx_kl = kl;
  out.clip_fraction = static_cast<double>(clipped) / B;
  const double total_loss =
      policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * out.entropy;
  if (!std::isfinite(total_loss))
    throw std::runtime_error("ppo: non-finite loss, aborting update");

  nn::ParamList actor_params = actor.params();
  nn::ParamList critic_params = critic.params();
  nn::zero_grads(actor_params);
  nn::zero_grads(critic_params);
  actor.mlp.backward(actor_cache, dmean);
  actor.log_std.g.col(0) += dlogstd;
  critic.backward(critic_cache, dv);
  nn::clip_grads_by_norm(actor_params, cfg.grad_clip);
  nn::clip_grads_by_norm(critic_params, cfg.grad_clip);
  if (actor_opt) actor_opt->step(actor_params);
  if (critic_opt) critic_opt->step(critic_params);
  actor.log_std.w = actor.log_std.w.cwiseMax(cfg.min_log_std);
  return out;
}

void Stage1Trainer::ppo_update(const RolloutBatch& batch,
                               const VecXd& advantages, const VecXd& returns,
                               IterStats& stats) {
  const int n = batch.size();
  // per-batch advantage normalization
  const double mean = advantages.mean();
  const double sd = std::sqrt((advantages.array() - mean).square().mean() + 1e-8);
  const VecXd adv = (advantages.array() - mean) / sd;

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const int mb_size = n / cfg_.minibatches;

  double pl = 0, vl = 0, ent = 0, kl = 0, cf = 0;
  int updates = 0;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i)  // Fisher-Yates with the trainer rng
      std::swap(idx[i], idx[rng_.below(static_cast<uint64_t>(i + 1))]);
    for (int mb = 0; mb < cfg_.minibatches; ++mb) {
      MatXd obs(mb_size, batch.obs.cols());
      MatXd act(mb_size, batch.actions.cols());
      VecXd lp(mb_size), a(mb_size), ret(mb_size);
      for (int k = 0; k < mb_size; ++k) {
        const int src = idx[mb * mb_size + k];
        obs.row(k) = batch.obs.row(src);
        act.row(k) = batch.actions.row(src);
        lp[k] = batch.log_probs[src];
        a[k] = adv[src];
        ret[k] = returns[src];
      }
      const auto s = ppo_minibatch_step(actor_, critic_, obs, act, lp, a, ret,
                                        cfg_, &actor_opt_, &critic_opt_);
      pl += s.policy_loss;
      vl += s.value_loss;
      ent += s.entropy;
      kl += s.approx_kl;
      cf += s.clip_fraction;
      ++updates;
    }
  }
  stats.policy_loss = pl / updates;
  stats.value_loss = vl / updates;
  stats.entropy = ent / updates;
  stats.approx_kl = kl / updates;
  stats.clip_fraction = cf / updates;
}

IterStats Stage1Trainer::iterate() {
  last_stats_ = IterStats{};
  last_stats_.iteration = iteration_;
  {
    // exploration floor: held early, then released so sigma can anneal
    const double hold = cfg_.explore_hold_fraction;
    const double t = std::clamp((progress() - hold) / std::max(1e-9, 1.0 - hold),
                                0.0, 1.0);
    cfg_.min_log_std =
        min_log_std_base_ * (1.0 - t) + cfg_.min_log_std_final * t;
  }
  const RolloutBatch batch = collect_rollouts();
  VecXd advantages, returns;
  compute_gae(batch, advantages, returns);
  ppo_update(batch, advantages, returns, last_stats_);

  norm_.update(batch.obs_raw);
  task::update_cmax(cat_, batch.violations);

  env_steps_ += batch.size();
  ++iteration_;
  last_stats_.env_steps = env_steps_;
  last_stats_.kd = gains_now().kd;
  last_stats_.p_max_soft = cfg_.suite[task::kTorque0].p_max_at(progress());
  return last_stats_;
}

std::vector<double> Stage1Trainer::evaluate_completion(
    const std::vector<std::pair<sim::TerrainKind, int>>& cells,
    int episodes_per_cell) {
  std::vector<double> out(cells.size(), 0.0);
  sim::EnvConfig eval_cfg = env_cfg_;
  eval_cfg.episode_time_limit = 15.0;
  eval_cfg.zero_cmd_fraction = 0.0;
  const sim::PdGains gains = gains_now();
  for (size_t c = 0; c < cells.size(); ++c) {
    double sum = 0.0;
    for (int e = 0; e < episodes_per_cell; ++e) {
      sim::Env env(model_, eval_cfg,
                   0x9E3779B9u ^ (iteration_ * 1315423911u) ^
                       (c * 2654435761u) ^ e);
      env.reset(cells[c].first, cells[c].second);
      env.set_v_cmd(0.6);
      while (!env.finished() && !env.fallen() && !env.timed_out()) {
        const VecXd obs = norm_.apply(env.priv_obs().flatten());
        const VecXd mean = actor_.mean(obs.transpose()).row(0).transpose();
        env.step(mean, gains);
      }
      sum += env.completion();
    }
    out[c] = sum / episodes_per_cell;
  }
  return out;
}

nn::PolicyCheckpoint Stage1Trainer::checkpoint() const {
  nn::PolicyCheckpoint ckpt;
  ckpt.kind = nn::NetKind::priv_actor;
  ckpt.mlp_spec = const_cast<nn::GaussianPolicy&>(actor_).mlp.spec();
  ckpt.act_lo = VecXd::Constant(sim::kActionDim, -1.0);
  ckpt.act_hi = VecXd::Constant(sim::kActionDim, 1.0);
  ckpt.set_norm(norm_);
  ckpt.capture(const_cast<nn::GaussianPolicy&>(actor_).params());
  return ckpt;
}

nn::PolicyCheckpoint Stage1Trainer::train(
    const std::function<bool(const IterStats&)>& stop,
    std::ostream* metrics_csv) {
  if (metrics_csv) *metrics_csv << stage1_metrics_header() << "\n";
  while (env_steps_ < cfg_.max_env_steps) {
    IterStats stats = iterate();
    if (cfg_.eval_every > 0 && iteration_ % cfg_.eval_every == 0) {
      std::vector<std::pair<sim::TerrainKind, int>> cells;
      for (const auto kind : cfg_.kinds)
        cells.emplace_back(kind,
                           kind == sim::TerrainKind::flat ? 0 : cfg_.max_level);
      stats.eval_completion = evaluate_completion(cells, cfg_.eval_episodes);
      stats.eval_ran = true;
      last_stats_ = stats;
    }
    if (metrics_csv) write_stage1_metrics_row(*metrics_csv, stats);
    if (stop && stop(stats)) break;
  }
  return checkpoint();
}

std::string stage1_metrics_header() {
  std::string h =
      "iteration,env_steps,mean_reward,mean_delta,mean_episode_len,"
      "mean_completion,episodes_finished,episodes_ended,diverged,policy_loss,"
      "value_loss,entropy,approx_kl,clip_fraction,kd,p_max_soft";
  for (const auto& spec : task::constraint_specs()) h += ",viol_" + spec.id;
  return h;
}

void write_stage1_metrics_row(std::ostream& out, const IterStats& s) {
  out << s.iteration << ',' << s.env_steps << ',' << s.mean_reward << ','
      << s.mean_delta << ',' << s.mean_episode_len << ',' << s.mean_completion
      << ',' << s.episodes_finished << ',' << s.episodes_ended << ','
      << s.diverged << ',' << s.policy_loss << ',' << s.value_loss << ','
      << s.entropy << ',' << s.approx_kl << ',' << s.clip_fraction << ','
      << s.kd << ',' << s.p_max_soft;
  for (int i = 0; i < s.violation_rate.size(); ++i)
    out << ',' << s.violation_rate[i];
  out << "\n";
  out.flush();
}

}  // namespace parkour::ppo
