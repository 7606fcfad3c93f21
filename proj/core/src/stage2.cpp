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

#include "parkour/offpolicy/stage2.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "parkour/task/reward.hpp"

namespace parkour::offpolicy {

void Stage2Config::validate() const {
  if (n_actors <= 0 || batch_windows <= 0 || window_len <= 0)
    throw ConfigError("stage2: actor/batch/window sizes must be positive");
  if (window_len % visual.depth_period != 0)
    throw ConfigError("stage2: window length must be a multiple of the depth period");
  if (target_subset > n_critics || target_subset < 1)
    throw ConfigError("stage2: target subset exceeds the ensemble");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("stage2: bad gamma");
  if (no_priv_critic && n_critics > 2)
    throw ConfigError(
        "stage2: the visual-critic ablation supports at most 2 critics "
        "(each carries its own encoder)");
}

nn::VisualSpec default_visual_spec() {
  nn::VisualSpec v;
  v.conv.rays = 32;
  v.conv.channels = {8, 16, 32};
  v.conv.kernel = 5;
  v.conv.latent_dim = 64;
  v.proprio_dim = sim::kProprioDim + 1 + sim::kActionDim;
  v.gru_hidden = 256;
  v.mlp.input_dim = 256;
  v.mlp.hidden = {512, 256, 128};
  v.mlp.output_dim = sim::kActionDim;
  v.mlp.head = nn::Head::tanh_bounded;
  v.depth_period = 5;
  return v;
}

// ---------------------------------------------------------------------------

VisualPolicy::VisualPolicy(const nn::VisualSpec& spec,
                           const ActionBounds& bounds, Rng& rng)
    : spec_(spec), bounds_(bounds) {
  nn::VisualSpec s = spec;
  s.mlp.input_dim = s.gru_hidden;
  if (s.mlp.output_dim != static_cast<int>(bounds.lo.size()) ||
      s.mlp.head != nn::Head::tanh_bounded)
    throw ConfigError("visual policy: head must be tanh with one output per action");
  trunk = nn::VisualTrunk("visual.trunk", s, rng);
  head = nn::Mlp("visual.head", s.mlp, rng);
  spec_ = s;
}

MatXd VisualPolicy::forward(const WindowBatch& batch, Cache& cache) const {
  auto [feat, hT] = trunk.forward(batch.proprio, batch.frames, batch.frame_of,
                                  batch.batch, batch.steps, batch.h0,
                                  cache.trunk);
  cache.tanh_out = head.forward(feat, cache.head);
  const VecXd mid = 0.5 * (bounds_.lo + bounds_.hi);
  const VecXd half = 0.5 * (bounds_.hi - bounds_.lo);
  MatXd actions = cache.tanh_out;
  actions.array().rowwise() *= half.transpose().array();
  actions.rowwise() += mid.transpose();
  return actions;
}

void VisualPolicy::backward(const Cache& cache, const MatXd& dactions) {
  const VecXd half = 0.5 * (bounds_.hi - bounds_.lo);
  MatXd dtanh = dactions;
  dtanh.array().rowwise() *= half.transpose().array();
  const MatXd dfeat = const_cast<nn::Mlp&>(head).backward(cache.head, dtanh);
  const_cast<nn::VisualTrunk&>(trunk).backward(cache.trunk, dfeat);
}

VecXd VisualPolicy::encode_frame(const VecXd& scan_normalized) const {
  nn::ConvEncoder::Cache cache;
  return trunk.encoder.forward(scan_normalized.transpose(), cache)
      .row(0)
      .transpose();
}

VecXd VisualPolicy::act(const VecXd& proprio_row, const VecXd& latent,
                        VecXd& hidden) const {
  MatXd in(1, spec_.proprio_dim + spec_.conv.latent_dim);
  in.block(0, 0, 1, spec_.proprio_dim) = proprio_row.transpose();
  in.block(0, spec_.proprio_dim, 1, spec_.conv.latent_dim) =
      latent.transpose();
  nn::GruCell::Cache cache;
  const MatXd h = trunk.gru.forward(in, hidden.transpose(), cache);
  hidden = h.row(0).transpose();
  const MatXd tanh_out = head.forward(h);
  return nn::rescale_action(tanh_out.row(0).transpose(), bounds_.lo,
                            bounds_.hi);
}

nn::ParamList VisualPolicy::params() {
  nn::ParamList out = trunk.params();
  for (auto* p : head.params()) out.push_back(p);
  return out;
}

// ---------------------------------------------------------------------------

CriticEnsemble::CriticEnsemble(int n, int input_dim,
                               const std::vector<int>& hidden, Rng& rng,
                               const std::string& tag) {
  nets_.reserve(n);
  for (int i = 0; i < n; ++i) {
    nn::MlpSpec spec;
    spec.input_dim = input_dim;
    spec.hidden = hidden;
    spec.output_dim = 1;
    spec.layer_norm = true;
    nets_.emplace_back(tag + std::to_string(i), spec, rng);
  }
}

nn::ParamList CriticEnsemble::params() {
  nn::ParamList out;
  for (auto& n : nets_)
    for (auto* p : n.params()) out.push_back(p);
  return out;
}

VecXd CriticEnsemble::min_pair(int i, int j, const MatXd& sa) const {
  return nets_[i].forward(sa).col(0).cwiseMin(nets_[j].forward(sa).col(0));
}

void CriticEnsemble::copy_from(CriticEnsemble& other) {
  nn::ParamList mine = params();
  nn::ParamList theirs = other.params();
  for (size_t i = 0; i < mine.size(); ++i) mine[i]->w = theirs[i]->w;
}

void CriticEnsemble::polyak_from(CriticEnsemble& other, double tau) {
  nn::ParamList mine = params();
  nn::ParamList theirs = other.params();
  for (size_t i = 0; i < mine.size(); ++i)
    mine[i]->w = tau * mine[i]->w + (1.0 - tau) * theirs[i]->w;
}

namespace {

void polyak_params(nn::ParamList target, nn::ParamList online, double tau) {
  for (size_t i = 0; i < target.size(); ++i)
    target[i]->w = tau * target[i]->w + (1.0 - tau) * online[i]->w;
}

void copy_params(nn::ParamList dst, nn::ParamList src) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i]->w = src[i]->w;
}

}  // namespace

// ---------------------------------------------------------------------------

Stage2Trainer::Stage2Trainer(const Stage2Config& cfg,
                             const sim::RobotModel& model,
                             const sim::EnvConfig& env_cfg,
                             const Dataset* dataset, uint64_t seed)
    : cfg_(cfg),
      model_(model),
      env_cfg_(env_cfg),
      rng_(seed),
      cat_(task::kNumConstraints, cfg.cat_ema) {
  cfg_.validate();
  cat_.enabled = !cfg_.no_cat;
  if (!cfg_.from_scratch && (dataset == nullptr || dataset->episodes.empty()))
    throw ConfigError("stage2: privileged experience required unless from_scratch");

  norm_proprio_.reset(cfg_.visual.proprio_dim);
  norm_priv_.reset(sim::kPrivDim);
  if (!cfg_.from_scratch) {
    bounds_ = ActionBounds::from_dataset(*dataset);
    for (const auto& ep : dataset->episodes) {
      norm_proprio_.update(ep.proprio);
      norm_priv_.update(ep.priv);
      task::update_cmax(cat_, ep.violations);
    }
    norm_proprio_.freeze();
    norm_priv_.freeze();
  } else {
    bounds_.lo = VecXd::Constant(sim::kActionDim, -1.0);
    bounds_.hi = VecXd::Constant(sim::kActionDim, 1.0);
  }

  Rng init = rng_.split(0xB0B);
  actor_ = VisualPolicy(cfg_.visual, bounds_, init);
  actor_target_ = VisualPolicy(cfg_.visual, bounds_, init);
  copy_params(actor_target_.params(), actor_.params());

  const int critic_in =
      cfg_.no_priv_critic ? cfg_.visual.gru_hidden + sim::kActionDim
                          : sim::kPrivDim + sim::kActionDim;
  critics_ = CriticEnsemble(cfg_.n_critics, critic_in, cfg_.critic_hidden,
                            init, "critic");
  critic_targets_ = CriticEnsemble(cfg_.n_critics, critic_in,
                                   cfg_.critic_hidden, init, "critic_t");
  critic_targets_.copy_from(critics_);
  if (cfg_.no_priv_critic) {
    critic_encoder_ = std::make_unique<VisualPolicy>(cfg_.visual, bounds_, init);
    critic_encoder_target_ =
        std::make_unique<VisualPolicy>(cfg_.visual, bounds_, init);
    copy_params(critic_encoder_target_->params(), critic_encoder_->params());
  }

  actor_opt_ = nn::Adam(nn::AdamConfig{.lr = cfg_.actor_lr});
  critic_opt_ = nn::Adam(nn::AdamConfig{.lr = cfg_.critic_lr});

  online_ = ReplayBuffer(cfg_.online_capacity_windows);
  priv_ = ReplayBuffer(SIZE_MAX);
  if (!cfg_.from_scratch)
    for (auto& w : dataset->to_windows(cfg_.window_len)) priv_.push(std::move(w));

  envs_.reserve(cfg_.n_actors);
  traces_.resize(cfg_.n_actors);
  for (int i = 0; i < cfg_.n_actors; ++i) {
    envs_.emplace_back(model_, env_cfg_, rng_.split(500 + i).next_u64());
    reset_actor_env(i);
  }
}

void Stage2Trainer::reset_actor_env(int i) {
  const sim::TerrainKind kind = cfg_.kinds[i % cfg_.kinds.size()];
  const int level =
      cfg_.min_level + static_cast<int>(envs_[i].rng().below(
                           cfg_.max_level - cfg_.min_level + 1));
  envs_[i].reset(kind, level);
  ActorTrace& tr = traces_[i];
  tr = ActorTrace{};
  tr.hidden = VecXd::Zero(cfg_.visual.gru_hidden);
  tr.window_h0 = tr.hidden;
  tr.start_step = 0;
  VecXd pr(cfg_.visual.proprio_dim);
  pr.segment(0, sim::kProprioDim) = envs_[i].proprio();
  pr[sim::kProprioDim] = envs_[i].v_cmd();
  pr.segment(sim::kProprioDim + 1, sim::kActionDim) = envs_[i].prev_action();
  tr.proprio.push_back(pr);
  tr.priv.push_back(envs_[i].priv_obs().flatten());
  tr.depth.push_back(envs_[i].depth().ranges);
  tr.latent = actor_.encode_frame(envs_[i].depth().ranges / env_cfg_.camera.max_range);
}

void Stage2Trainer::flush_window(int i, bool terminated) {
  ActorTrace& tr = traces_[i];
  const int len = static_cast<int>(tr.actions.size());
  if (len == 0) return;
  Window w;
  w.source = Source::online;
  w.start_step = tr.start_step;
  w.len = len;
  w.v_cmd = envs_[i].v_cmd();
  w.h0 = tr.window_h0;
  w.end_terminated = terminated ? 1 : 0;
  w.proprio.resize(len + 1, cfg_.visual.proprio_dim);
  w.priv.resize(len + 1, sim::kPrivDim);
  for (int t = 0; t <= len; ++t) {
    w.proprio.row(t) = tr.proprio[t].transpose();
    w.priv.row(t) = tr.priv[t].transpose();
  }
  w.actions.resize(len, sim::kActionDim);
  w.rewards.resize(len);
  w.violations.resize(len, task::kNumConstraints);
  for (int t = 0; t < len; ++t) {
    w.actions.row(t) = tr.actions[t].transpose();
    w.rewards[t] = tr.rewards[t];
    w.violations.row(t) = tr.violations[t].transpose();
  }
  w.depth.resize(static_cast<int>(tr.depth.size()), envs_[i].config().camera.rays);
  for (size_t f = 0; f < tr.depth.size(); ++f)
    w.depth.row(static_cast<int>(f)) = tr.depth[f].transpose();

  if (!norm_proprio_.frozen()) {
    norm_proprio_.update(w.proprio);
    norm_priv_.update(w.priv);
    if (env_steps_ >= cfg_.warmup_online_steps) {
      norm_proprio_.freeze();
      norm_priv_.freeze();
    }
  }
  task::update_cmax(cat_, w.violations);
  online_.push(std::move(w));

  // roll the trace forward: the flushed boundary becomes the next start
  ActorTrace next;
  next.hidden = tr.hidden;
  next.window_h0 = tr.hidden;
  next.latent = tr.latent;
  next.start_step = tr.start_step + len;
  next.proprio.push_back(tr.proprio.back());
  next.priv.push_back(tr.priv.back());
  next.depth.push_back(tr.depth.back());
  traces_[i] = std::move(next);
}

void Stage2Trainer::collect_online_step() {
  const sim::PdGains gains{env_cfg_.kp, cfg_.kd};
  const auto& specs = cfg_.suite;
  for (int i = 0; i < cfg_.n_actors; ++i) {
    sim::Env& env = envs_[i];
    ActorTrace& tr = traces_[i];
    const VecXd proprio_raw = tr.proprio.back();
    const VecXd proprio_n = norm_proprio_.apply(proprio_raw);
    VecXd action = actor_.act(proprio_n, tr.latent, tr.hidden);
    // exploration noise in normalized units, clipped back into bounds
    const VecXd half = 0.5 * (bounds_.hi - bounds_.lo);
    for (int k = 0; k < action.size(); ++k) {
      action[k] += cfg_.explore_noise * half[k] * env.rng().normal();
      action[k] = std::clamp(action[k], bounds_.lo[k], bounds_.hi[k]);
    }

    const Vec4d prev_offsets = env.prev_action();
    bool terminated = false;
    double reward = 0.0;
    VecXd viol = VecXd::Zero(task::kNumConstraints);
    double delta = 0.0;
    try {
      const auto& ci = env.step(action, gains);
      reward = task::reward(env.state(), env.v_cmd());
      task::TerrainContext ctx{
          env.terrain().kind, env.terrain().difficulty, env.v_cmd() > 0.0,
          std::hypot(env.state().base_vx, env.state().base_vz)};
      const auto rep = task::evaluate_constraints(ci, prev_offsets,
                                                  env.v_cmd(), ctx, model_,
                                                  specs);
      viol = rep.violations;
      if (!cfg_.no_cat) {
        delta = task::termination_prob(rep, cat_, specs);
        terminated = task::sample_termination(delta, env.rng());
      }
      if (!terminated && env.fallen()) terminated = true;
    } catch (const SimulationDiverged&) {
      terminated = true;
    }

    tr.actions.push_back(action);
    tr.rewards.push_back(reward);
    tr.violations.push_back(viol);
    VecXd pr(cfg_.visual.proprio_dim);
    pr.segment(0, sim::kProprioDim) = env.proprio();
    pr[sim::kProprioDim] = env.v_cmd();
    pr.segment(sim::kProprioDim + 1, sim::kActionDim) = env.prev_action();
    tr.proprio.push_back(pr);
    tr.priv.push_back(env.priv_obs().flatten());
    if (env.depth_fresh()) {
      tr.depth.push_back(env.depth().ranges);
      tr.latent =
          actor_.encode_frame(env.depth().ranges / env_cfg_.camera.max_range);
    }

    last_stats_.mean_reward += reward / cfg_.n_actors;
    last_stats_.mean_delta += delta / cfg_.n_actors;

    const bool episode_over = terminated || env.finished() || env.timed_out();
    if (static_cast<int>(tr.actions.size()) == cfg_.window_len || episode_over)
      flush_window(i, terminated && episode_over);
    if (episode_over) reset_actor_env(i);
  }
  env_steps_ += cfg_.n_actors;
}

WindowBatch build_window_batch(const std::vector<const Window*>& windows,
                               int window_len, const nn::VisualSpec& visual,
                               const nn::RunningNorm& norm_proprio,
                               const nn::RunningNorm& norm_priv,
                               double depth_max_range,
                               const DepthAugment* augment_cfg, Rng& rng,
                               const task::CatState* cat,
                               const std::vector<task::ConstraintSpec>& specs,
                               double* hidden_divergence) {
  const int B = static_cast<int>(windows.size());
  const int steps = window_len + 1;
  const int pd = visual.proprio_dim;
  const int R = visual.conv.rays;
  WindowBatch batch;
  batch.batch = B;
  batch.steps = steps;
  batch.proprio = MatXd::Zero(B * steps, pd);
  batch.priv = MatXd::Zero(B * steps, sim::kPrivDim);
  batch.actions = MatXd::Zero(B * steps, sim::kActionDim);
  batch.rewards = VecXd::Zero(B * steps);
  batch.deltas = VecXd::Zero(B * steps);
  batch.valid.assign(B * steps, 0);
  batch.frame_of.assign(B * steps, -1);
  batch.h0 = MatXd::Zero(B, visual.gru_hidden);

  int total_frames = 0;
  for (const auto* w : windows) total_frames += w->frames();
  batch.frames.resize(total_frames, R);

  int frame_base = 0;
  double h0_norm = 0.0;
  for (int b = 0; b < B; ++b) {
    const Window& w = *windows[b];
    if (w.source == Source::online) {
      ++batch.n_online;
      if (w.h0.size() > 0) {
        batch.h0.row(b) = w.h0.transpose();
        h0_norm += w.h0.norm();
      }
    } else {
      ++batch.n_priv;
    }
    for (int f = 0; f < w.frames(); ++f) {
      VecXd scan = w.depth.row(f).transpose() / depth_max_range;
      if (augment_cfg && augment_cfg->enabled) {
        const double unit = augment_cfg->noise_std / depth_max_range;
        for (int k = 0; k < R; ++k) scan[k] += unit * rng.normal();
        if (augment_cfg->max_shift > 0) {
          const int shift = static_cast<int>(rng.below(
                                2 * augment_cfg->max_shift + 1)) -
                            augment_cfg->max_shift;
          if (shift != 0) {
            VecXd shifted = scan;
            for (int k = 0; k < R; ++k) {
              const int src = std::clamp(k - shift, 0, R - 1);
              shifted[k] = scan[src];
            }
            scan = shifted;
          }
        }
        if (augment_cfg->max_cutout > 0 && rng.bernoulli(0.5)) {
          const int len = 1 + static_cast<int>(rng.below(augment_cfg->max_cutout));
          const int at = static_cast<int>(rng.below(std::max(1, R - len)));
          for (int k = at; k < at + len; ++k) scan[k] = 1.0;
        }
        scan = scan.cwiseMax(0.0).cwiseMin(1.0);
      }
      batch.frames.row(frame_base + f) = scan.transpose();
    }
    for (int t = 0; t <= w.len && t < steps; ++t) {
      const int r = batch.row(b, t);
      batch.proprio.row(r) =
          norm_proprio.apply(VecXd(w.proprio.row(t).transpose())).transpose();
      batch.priv.row(r) =
          norm_priv.apply(VecXd(w.priv.row(t).transpose())).transpose();
      const int f = std::min(w.frame_of(t, visual.depth_period),
                             w.frames() - 1);
      batch.frame_of[r] = frame_base + f;
      if (t < w.len) {
        batch.actions.row(r) = w.actions.row(t);
        batch.rewards[r] = w.rewards[t];
        if (cat) {
          task::ConstraintReport rep;
          rep.violations = w.violations.row(t).transpose();
          rep.active.assign(task::kNumConstraints, true);
          batch.deltas[r] = task::termination_prob(rep, *cat, specs);
        }
        batch.valid[r] = 1;
        ++batch.n_valid;
      }
    }
    frame_base += w.frames();
  }
  if (hidden_divergence)
    *hidden_divergence = batch.n_online > 0 ? h0_norm / batch.n_online : 0.0;
  return batch;
}

WindowBatch Stage2Trainer::make_batch(const std::vector<const Window*>& windows,
                                      bool augment) {
  double div = 0.0;
  WindowBatch batch = build_window_batch(
      windows, cfg_.window_len, cfg_.visual, norm_proprio_, norm_priv_,
      env_cfg_.camera.max_range, augment ? &cfg_.augment : nullptr, rng_,
      cfg_.no_cat ? nullptr : &cat_, cfg_.suite, &div);
  last_stats_.hidden_divergence = div;
  return batch;
}

void fit_normalizers(const Dataset& data, nn::RunningNorm& norm_proprio,
                     nn::RunningNorm& norm_priv) {
  for (const auto& ep : data.episodes) {
    norm_proprio.update(ep.proprio);
    norm_priv.update(ep.priv);
  }
  norm_proprio.freeze();
  norm_priv.freeze();
}

MatXd Stage2Trainer::critic_input(const WindowBatch& batch,
                                  const MatXd& actions) const {
  MatXd sa(batch.priv.rows(), batch.priv.cols() + actions.cols());
  sa << batch.priv, actions;
  return sa;
}

VecXd Stage2Trainer::critic_targets(const WindowBatch& batch) {
  VisualPolicy::Cache tcache;
  const MatXd next_actions = actor_target_.forward(batch, tcache);

  MatXd sa;
  if (cfg_.no_priv_critic) {
    nn::VisualTrunk::Cache ecache;
    auto [feats, hT] = critic_encoder_target_->trunk.forward(
        batch.proprio, batch.frames, batch.frame_of, batch.batch, batch.steps,
        batch.h0, ecache);
    sa = MatXd(feats.rows(), feats.cols() + next_actions.cols());
    sa << feats, next_actions;
  } else {
    sa = critic_input(batch, next_actions);
  }

  const auto [i, j] = rng_.unordered_pair(cfg_.n_critics);
  const VecXd min_q = critic_targets_.min_pair(i, j, sa);

  VecXd y = VecXd::Zero(batch.priv.rows());
  for (int b = 0; b < batch.batch; ++b) {
    for (int t = 0; t + 1 < batch.steps; ++t) {
      const int r = batch.row(b, t);
      if (!batch.valid[r]) continue;
      y[r] = batch.rewards[r] +
             cfg_.gamma * (1.0 - batch.deltas[r]) * min_q[r + 1];
    }
  }
  return y;
}

double Stage2Trainer::critic_round(Rng& rng) {
  const auto windows =
      sample_batch(online_, priv_, cfg_.batch_windows, rng);
  if (windows.empty()) return 0.0;
  WindowBatch batch = make_batch(windows, true);
  if (batch.n_valid == 0) return 0.0;
  const VecXd y = critic_targets(batch);

  MatXd sa;
  VisualPolicy::Cache ecache;
  if (cfg_.no_priv_critic) {
    auto [feats, hT] = critic_encoder_->trunk.forward(
        batch.proprio, batch.frames, batch.frame_of, batch.batch, batch.steps,
        batch.h0, ecache.trunk);
    sa = MatXd(feats.rows(), feats.cols() + batch.actions.cols());
    sa << feats, batch.actions;
  } else {
    sa = critic_input(batch, batch.actions);
  }

  nn::ParamList cparams = critics_.params();
  if (cfg_.no_priv_critic)
    for (auto* p : critic_encoder_->trunk.params()) cparams.push_back(p);
  nn::zero_grads(cparams);

  double loss = 0.0;
  const double inv = 1.0 / (batch.n_valid * critics_.size());
  MatXd dfeat_total;
  if (cfg_.no_priv_critic)
    dfeat_total = MatXd::Zero(sa.rows(), cfg_.visual.gru_hidden);
  for (int c = 0; c < critics_.size(); ++c) {
    nn::Mlp::Cache cache;
    const VecXd q = critics_.net(c).forward(sa, cache).col(0);
    MatXd dq = MatXd::Zero(sa.rows(), 1);
    for (int r = 0; r < sa.rows(); ++r) {
      if (!batch.valid[r]) continue;
      const double err = q[r] - y[r];
      loss += err * err * inv;
      dq(r, 0) = 2.0 * err * inv;
    }
    const MatXd dsa = critics_.net(c).backward(cache, dq);
    if (cfg_.no_priv_critic)
      dfeat_total += dsa.leftCols(cfg_.visual.gru_hidden);
  }
  if (cfg_.no_priv_critic)
    critic_encoder_->trunk.backward(ecache.trunk, dfeat_total);

  nn::clip_grads_by_norm(cparams, cfg_.grad_clip);
  critic_opt_.step(cparams);
  critic_targets_.polyak_from(critics_, cfg_.polyak);
  if (cfg_.no_priv_critic)
    polyak_params(critic_encoder_target_->params(), critic_encoder_->params(),
                  cfg_.polyak);
  return loss;
}

double Stage2Trainer::actor_round(Rng& rng) {
  const auto windows =
      sample_batch(online_, priv_, cfg_.batch_windows, rng);
  if (windows.empty()) return 0.0;
  WindowBatch batch = make_batch(windows, true);
  if (batch.n_valid == 0) return 0.0;

  VisualPolicy::Cache acache;
  const MatXd pi_actions = actor_.forward(batch, acache);

  MatXd sa;
  VisualPolicy::Cache ecache;
  if (cfg_.no_priv_critic) {
    auto [feats, hT] = critic_encoder_->trunk.forward(
        batch.proprio, batch.frames, batch.frame_of, batch.batch, batch.steps,
        batch.h0, ecache.trunk);
    sa = MatXd(feats.rows(), feats.cols() + pi_actions.cols());
    sa << feats, pi_actions;
  } else {
    sa = critic_input(batch, pi_actions);
  }

  const int k = static_cast<int>(rng.below(cfg_.n_critics));
  nn::Mlp::Cache ccache;
  const VecXd q = critics_.net(k).forward(sa, ccache).col(0);

  double mean_q = 0.0;
  MatXd dq = MatXd::Zero(sa.rows(), 1);
  const double inv = 1.0 / batch.n_valid;
  for (int r = 0; r < sa.rows(); ++r) {
    if (!batch.valid[r]) continue;
    mean_q += q[r] * inv;
    dq(r, 0) = -inv;  // maximize Q
  }

  nn::ParamList aparams = actor_.params();
  nn::ParamList cparams = critics_.net(k).params();
  nn::zero_grads(aparams);
  nn::zero_grads(cparams);  // scratch; the critic is not stepped here
  const MatXd dsa = critics_.net(k).backward(ccache, dq);
  const MatXd dactions = dsa.rightCols(sim::kActionDim);
  actor_.backward(acache, dactions);
  nn::clip_grads_by_norm(aparams, cfg_.grad_clip);
  actor_opt_.step(aparams);
  polyak_params(actor_target_.params(), actor_.params(), cfg_.polyak);
  return mean_q;
}

Stage2Stats Stage2Trainer::iterate() {
  last_stats_ = Stage2Stats{};
  last_stats_.warmup = env_steps_ < cfg_.warmup_online_steps;
  collect_online_step();

  const bool can_update = !online_.empty() || !priv_.empty();
  double closs = 0.0, aq = 0.0;
  int rounds = 0;
  if (can_update) {
    for (int s = 0; s < cfg_.n_actors; ++s) {
      for (int u = 0; u < cfg_.utd; ++u) {
        closs += critic_round(rng_);
        ++rounds;
      }
      aq += actor_round(rng_);
      ++last_stats_.actor_rounds;
    }
    last_stats_.critic_rounds = rounds;
  }
  last_stats_.env_steps = env_steps_;
  last_stats_.critic_loss = rounds ? closs / rounds : 0.0;
  last_stats_.actor_q = cfg_.n_actors ? aq / cfg_.n_actors : 0.0;
  last_stats_.online_windows = online_.size();
  last_stats_.priv_windows = priv_.size();
  return last_stats_;
}

nn::PolicyCheckpoint Stage2Trainer::checkpoint() const {
  nn::PolicyCheckpoint ckpt;
  ckpt.kind = nn::NetKind::visual_actor;
  ckpt.has_visual = true;
  ckpt.visual_spec = actor_.spec();
  ckpt.mlp_spec = actor_.spec().mlp;
  ckpt.act_lo = bounds_.lo;
  ckpt.act_hi = bounds_.hi;
  ckpt.set_norm(norm_proprio_);
  ckpt.capture(const_cast<VisualPolicy&>(actor_).params());
  return ckpt;
}

nn::PolicyCheckpoint Stage2Trainer::train(
    const std::function<bool(const Stage2Stats&)>& stop,
    std::ostream* metrics_csv) {
  if (metrics_csv) *metrics_csv << stage2_metrics_header() << "\n";
  while (env_steps_ < cfg_.online_steps) {
    const Stage2Stats stats = iterate();
    if (metrics_csv) write_stage2_metrics_row(*metrics_csv, stats);
    if (stop && stop(stats)) break;
  }
  return checkpoint();
}

std::string stage2_metrics_header() {
  return "env_steps,critic_loss,actor_q,mean_reward,mean_delta,online_windows,"
         "priv_windows,warmup,hidden_divergence";
}

void write_stage2_metrics_row(std::ostream& out, const Stage2Stats& s) {
  out << s.env_steps << ',' << s.critic_loss << ',' << s.actor_q << ','
      << s.mean_reward << ',' << s.mean_delta << ',' << s.online_windows << ','
      << s.priv_windows << ',' << (s.warmup ? 1 : 0) << ','
      << s.hidden_divergence << "\n";
  out.flush();
}

}  // namespace parkour::offpolicy
