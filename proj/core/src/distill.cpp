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

#include "parkour/baselines/distill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "parkour/sim/depth.hpp"

namespace parkour::baselines {

using offpolicy::ActionBounds;
using offpolicy::Dataset;
using offpolicy::Source;
using offpolicy::VisualPolicy;
using offpolicy::Window;
using offpolicy::WindowBatch;

Method method_from(const std::string& name) {
  if (name == "bc") return Method::bc;
  if (name == "dagger") return Method::dagger;
  if (name == "priv-recon" || name == "priv_recon") return Method::priv_recon;
  throw ConfigError("unknown distillation method: " + name);
}

const char* to_string(Method m) {
  switch (m) {
    case Method::bc: return "bc";
    case Method::dagger: return "dagger";
    case Method::priv_recon: return "priv-recon";
  }
  return "?";
}

void DistillConfig::validate() const {
  if (epochs <= 0 || iterations <= 0 || batch_windows <= 0)
    throw ConfigError("distill: epochs/iterations/batch must be positive");
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw ConfigError("distill: bad validation fraction");
  if (window_len % visual.depth_period != 0)
    throw ConfigError("distill: window length must align with the depth period");
}

std::string distill_metrics_header() {
  return "iteration,train_loss,val_loss,dataset_steps,recon_err";
}

void write_distill_metrics_row(std::ostream& out, const DistillStats& s) {
  out << s.iteration << ',' << s.train_loss << ',' << s.val_loss << ','
      << s.dataset_steps << ',' << s.recon_err << "\n";
  out.flush();
}

namespace {

struct StudentSetup {
  ActionBounds bounds;
  nn::RunningNorm norm_proprio;
  nn::RunningNorm norm_priv;
};

StudentSetup make_setup(const Dataset& data) {
  StudentSetup s;
  s.bounds = ActionBounds::from_dataset(data);
  s.norm_proprio.reset(data.proprio_dim);
  s.norm_priv.reset(data.priv_dim);
  offpolicy::fit_normalizers(data, s.norm_proprio, s.norm_priv);
  return s;
}

// normalized-action regression: loss = mean ||(pi(s) - a*) / half||^2
double regression_epoch(VisualPolicy& student, const StudentSetup& setup,
                        const std::vector<const Window*>& windows,
                        const DistillConfig& cfg, const nn::VisualSpec& visual,
                        double max_range, Rng& rng, nn::Adam* opt) {
  if (windows.empty()) return 0.0;
  std::vector<int> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  if (opt) {
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[rng.below(static_cast<uint64_t>(i + 1))]);
  }
  const VecXd half = 0.5 * (setup.bounds.hi - setup.bounds.lo);
  double loss_sum = 0.0;
  int64_t loss_count = 0;
  for (size_t at = 0; at < order.size(); at += cfg.batch_windows) {
    std::vector<const Window*> chunk;
    for (size_t k = at; k < std::min(order.size(), at + cfg.batch_windows); ++k)
      chunk.push_back(windows[order[k]]);
    WindowBatch batch = offpolicy::build_window_batch(
        chunk, cfg.window_len, visual, setup.norm_proprio, setup.norm_priv,
        max_range, nullptr, rng, nullptr);
    VisualPolicy::Cache cache;
    const MatXd actions = student.forward(batch, cache);
    MatXd dact = MatXd::Zero(actions.rows(), actions.cols());
    for (int r = 0; r < actions.rows(); ++r) {
      if (!batch.valid[r]) continue;
      for (int k = 0; k < actions.cols(); ++k) {
        const double diff = (actions(r, k) - batch.actions(r, k)) / half[k];
        loss_sum += diff * diff;
        dact(r, k) = 2.0 * diff / (half[k] * batch.n_valid * actions.cols());
      }
      loss_count += actions.cols();
    }
    if (opt) {
      nn::ParamList params = student.params();
      nn::zero_grads(params);
      student.backward(cache, dact);
      nn::clip_grads_by_norm(params, cfg.grad_clip);
      opt->step(params);
    }
  }
  return loss_count ? loss_sum / loss_count : 0.0;
}

void split_windows(const std::vector<Window>& all, double val_fraction,
                   std::vector<const Window*>& train,
                   std::vector<const Window*>& val) {
  const int stride =
      val_fraction > 0.0 ? std::max(2, static_cast<int>(1.0 / val_fraction)) : 0;
  for (size_t i = 0; i < all.size(); ++i) {
    if (stride > 0 && i % stride == 0)
      val.push_back(&all[i]);
    else
      train.push_back(&all[i]);
  }
}

nn::PolicyCheckpoint student_checkpoint(VisualPolicy& student,
                                        const StudentSetup& setup,
                                        nn::NetKind kind) {
  nn::PolicyCheckpoint ckpt;
  ckpt.kind = kind;
  ckpt.has_visual = true;
  ckpt.visual_spec = student.spec();
  ckpt.mlp_spec = student.spec().mlp;
  ckpt.act_lo = setup.bounds.lo;
  ckpt.act_hi = setup.bounds.hi;
  ckpt.set_norm(setup.norm_proprio);
  ckpt.capture(student.params());
  return ckpt;
}

// teacher policy restored for relabelling / frozen-head composition
struct Teacher {
  Rng init_rng{1};
  nn::GaussianPolicy actor;
  nn::RunningNorm norm;

  static const nn::MlpSpec& checked_spec(const nn::PolicyCheckpoint& ckpt) {
    if (ckpt.kind != nn::NetKind::priv_actor)
      throw ConfigError("teacher checkpoint must be a privileged policy");
    return ckpt.mlp_spec;
  }

  explicit Teacher(const nn::PolicyCheckpoint& ckpt)
      : actor("actor", checked_spec(ckpt), 0.0, init_rng),
        norm(ckpt.make_norm()) {
    ckpt.restore(actor.params());
  }

  VecXd label(const VecXd& priv_raw) const {
    return actor.mean(norm.apply(priv_raw).transpose()).row(0).transpose();
  }
};

}  // namespace

nn::PolicyCheckpoint bc_train(const Dataset& data, const DistillConfig& cfg,
                              std::ostream* metrics_csv,
                              std::vector<DistillStats>* history) {
  cfg.validate();
  if (data.episodes.empty())
    throw ConfigError("bc: empty demonstration dataset");
  StudentSetup setup = make_setup(data);
  Rng rng(cfg.seed);
  VisualPolicy student(cfg.visual, setup.bounds, rng);
  nn::Adam opt(nn::AdamConfig{.lr = cfg.lr});

  const std::vector<Window> all = data.to_windows(cfg.window_len);
  std::vector<const Window*> train, val;
  split_windows(all, cfg.val_fraction, train, val);

  if (metrics_csv) *metrics_csv << distill_metrics_header() << "\n";
  const double max_range = 2.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    DistillStats s;
    s.iteration = epoch;
    s.train_loss = regression_epoch(student, setup, train, cfg, cfg.visual,
                                    max_range, rng, &opt);
    s.val_loss = regression_epoch(student, setup, val, cfg, cfg.visual,
                                  max_range, rng, nullptr);
    s.dataset_steps = data.total_steps();
    if (metrics_csv) write_distill_metrics_row(*metrics_csv, s);
    if (history) history->push_back(s);
  }
  return student_checkpoint(student, setup, nn::NetKind::visual_actor);
}

namespace {

// Rolls one policy and returns windows whose action rows are relabelled by
// the teacher (for dagger) or left as executed (for recon gathering).
std::vector<Window> gather_windows(
    const std::function<VecXd(const VecXd& proprio_raw, const VecXd& priv_raw,
                              const VecXd& scan, VecXd& hidden)>& act,
    const Teacher* relabel, const sim::RobotModel& model,
    const sim::EnvConfig& env_cfg, const DistillConfig& cfg, int gru_hidden,
    int64_t steps_budget, Rng& rng) {
  std::vector<Window> out;
  sim::Env env(model, env_cfg, rng.next_u64());
  const sim::PdGains gains{env_cfg.kp, cfg.kd};
  int64_t steps = 0;
  while (steps < steps_budget) {
    const sim::TerrainKind kind =
        cfg.kinds[rng.below(cfg.kinds.size())];
    const int level = cfg.min_level + static_cast<int>(rng.below(
                                          cfg.max_level - cfg.min_level + 1));
    env.reset(kind, level);
    VecXd hidden = VecXd::Zero(gru_hidden);

    auto compose_row = [&] {
      VecXd pr(sim::kProprioDim + 1 + sim::kActionDim);
      pr.segment(0, sim::kProprioDim) = env.proprio();
      pr[sim::kProprioDim] = env.v_cmd();
      pr.segment(sim::kProprioDim + 1, sim::kActionDim) = env.prev_action();
      return pr;
    };

    std::vector<VecXd> proprio{compose_row()};
    std::vector<VecXd> priv{env.priv_obs().flatten()};
    std::vector<VecXd> depth{env.depth().ranges};
    std::vector<VecXd> labels;
    int start_step = 0;
    VecXd h0 = hidden;

    auto flush = [&](bool terminated) {
      const int len = static_cast<int>(labels.size());
      if (len == 0) return;
      Window w;
      w.source = Source::online;
      w.start_step = start_step;
      w.len = len;
      w.v_cmd = env.v_cmd();
      w.h0 = h0;
      w.end_terminated = terminated ? 1 : 0;
      w.proprio.resize(len + 1, proprio[0].size());
      w.priv.resize(len + 1, priv[0].size());
      for (int t = 0; t <= len; ++t) {
        w.proprio.row(t) = proprio[t].transpose();
        w.priv.row(t) = priv[t].transpose();
      }
      w.actions.resize(len, sim::kActionDim);
      for (int t = 0; t < len; ++t) w.actions.row(t) = labels[t].transpose();
      w.rewards = VecXd::Zero(len);
      w.violations = MatXd::Zero(len, task::kNumConstraints);
      w.depth.resize(static_cast<int>(depth.size()), env_cfg.camera.rays);
      for (size_t f = 0; f < depth.size(); ++f)
        w.depth.row(static_cast<int>(f)) = depth[f].transpose();
      out.push_back(std::move(w));

      start_step += len;
      h0 = hidden;
      proprio.erase(proprio.begin(), proprio.end() - 1);
      priv.erase(priv.begin(), priv.end() - 1);
      depth.erase(depth.begin(), depth.end() - 1);
      labels.clear();
    };

    while (true) {
      const VecXd action =
          act(proprio.back(), priv.back(), depth.back(), hidden);
      labels.push_back(relabel ? relabel->label(priv.back()) : action);
      env.step(action, gains);
      ++steps;
      proprio.push_back(compose_row());
      priv.push_back(env.priv_obs().flatten());
      if (env.depth_fresh()) depth.push_back(env.depth().ranges);
      const bool over = env.fallen() || env.finished() || env.timed_out() ||
                        steps >= steps_budget;
      if (static_cast<int>(labels.size()) == cfg.window_len || over)
        flush(env.fallen());
      if (over) break;
    }
  }
  return out;
}

}  // namespace

nn::PolicyCheckpoint dagger_train(const nn::PolicyCheckpoint& teacher_ckpt,
                                  const nn::PolicyCheckpoint& bc_init,
                                  const Dataset& data, const DistillConfig& cfg,
                                  const sim::RobotModel& model,
                                  const sim::EnvConfig& env_cfg,
                                  std::ostream* metrics_csv,
                                  std::vector<DistillStats>* history) {
  cfg.validate();
  Teacher teacher(teacher_ckpt);
  StudentSetup setup = make_setup(data);
  Rng rng(cfg.seed);
  VisualPolicy student(cfg.visual, setup.bounds, rng);
  bc_init.restore(student.params());
  nn::Adam opt(nn::AdamConfig{.lr = cfg.lr});

  // aggregation starts from the shared demonstrations
  std::vector<Window> aggregate = data.to_windows(cfg.window_len);
  if (metrics_csv) *metrics_csv << distill_metrics_header() << "\n";

  for (int it = 0; it < cfg.iterations; ++it) {
    const double mix =
        cfg.dagger_mix_start +
        (cfg.dagger_mix_end - cfg.dagger_mix_start) *
            std::min(1.0, 2.0 * it / std::max(1, cfg.iterations - 1));
    const size_t before = aggregate.size();

    auto act = [&](const VecXd& proprio_raw, const VecXd& priv_raw,
                   const VecXd& scan, VecXd& hidden) -> VecXd {
      const VecXd latent = student.encode_frame(scan / env_cfg.camera.max_range);
      const VecXd student_action =
          student.act(setup.norm_proprio.apply(proprio_raw), latent, hidden);
      if (rng.uniform() < mix) return student_action;
      return teacher.label(priv_raw);
    };
    auto rolled = gather_windows(act, &teacher, model, env_cfg, cfg,
                                 cfg.visual.gru_hidden, cfg.rollout_steps, rng);
    for (auto& w : rolled) aggregate.push_back(std::move(w));
    if (aggregate.size() <= before)
      throw std::runtime_error("dagger: aggregation failed to grow");

    std::vector<const Window*> train, val;
    split_windows(aggregate, cfg.val_fraction, train, val);
    DistillStats s;
    s.iteration = it;
    for (int e = 0; e < cfg.epochs_per_iteration; ++e)
      s.train_loss = regression_epoch(student, setup, train, cfg, cfg.visual,
                                      env_cfg.camera.max_range, rng, &opt);
    s.val_loss = regression_epoch(student, setup, val, cfg, cfg.visual,
                                  env_cfg.camera.max_range, rng, nullptr);
    int64_t steps = 0;
    for (const auto& w : aggregate) steps += w.len;
    s.dataset_steps = steps;
    if (metrics_csv) write_distill_metrics_row(*metrics_csv, s);
    if (history) history->push_back(s);
  }
  return student_checkpoint(student, setup, nn::NetKind::visual_actor);
}

// ---------------------------------------------------------------------------

ReconPolicy::ReconPolicy(const nn::VisualSpec& spec, Rng& rng) {
  nn::VisualSpec s = spec;
  trunk = nn::VisualTrunk("recon.trunk", s, rng);
  nn::MlpSpec head_spec;
  head_spec.input_dim = s.gru_hidden;
  head_spec.hidden = {};
  head_spec.output_dim = kReconDim;
  head_spec.head = nn::Head::linear;
  head = nn::Mlp("recon.head", head_spec, rng);
}

nn::ParamList ReconPolicy::params() {
  nn::ParamList out = trunk.params();
  for (auto* p : head.params()) out.push_back(p);
  return out;
}

nn::PolicyCheckpoint priv_recon_train(const nn::PolicyCheckpoint& teacher_ckpt,
                                      const Dataset& data,
                                      const DistillConfig& cfg,
                                      const sim::RobotModel& model,
                                      const sim::EnvConfig& env_cfg,
                                      std::ostream* metrics_csv,
                                      std::vector<DistillStats>* history) {
  cfg.validate();
  Teacher teacher(teacher_ckpt);
  StudentSetup setup = make_setup(data);
  Rng rng(cfg.seed);
  ReconPolicy recon(cfg.visual, rng);
  nn::Adam opt(nn::AdamConfig{.lr = cfg.lr});

  const MatXd teacher_params_before = teacher.actor.mlp.params()[0]->w;

  // reconstruction targets live in the teacher's normalized units
  const int priv_off = sim::kProprioDim;
  std::vector<Window> buffer;
  if (metrics_csv) *metrics_csv << distill_metrics_header() << "\n";

  for (int it = 0; it < cfg.iterations; ++it) {
    // gather experience under the composed policy: reconstruction + frozen head
    auto act = [&](const VecXd& proprio_raw, const VecXd& priv_raw,
                   const VecXd& scan, VecXd& hidden) -> VecXd {
      const VecXd latent_in = scan / env_cfg.camera.max_range;
      nn::ConvEncoder::Cache ecache;
      const VecXd latent =
          recon.trunk.encoder.forward(latent_in.transpose(), ecache)
              .row(0)
              .transpose();
      MatXd in(1, cfg.visual.proprio_dim + cfg.visual.conv.latent_dim);
      in.block(0, 0, 1, cfg.visual.proprio_dim) =
          setup.norm_proprio.apply(proprio_raw).transpose();
      in.block(0, cfg.visual.proprio_dim, 1, cfg.visual.conv.latent_dim) =
          latent.transpose();
      nn::GruCell::Cache gcache;
      const MatXd h = recon.trunk.gru.forward(in, hidden.transpose(), gcache);
      hidden = h.row(0).transpose();
      const VecXd rec = recon.head.forward(h).row(0).transpose();
      VecXd teacher_obs = teacher.norm.apply(priv_raw);
      teacher_obs.segment(priv_off, ReconPolicy::kReconDim) = rec;
      return teacher.actor.mean(teacher_obs.transpose()).row(0).transpose();
    };
    auto rolled = gather_windows(act, nullptr, model, env_cfg, cfg,
                                 cfg.visual.gru_hidden, cfg.rollout_steps, rng);
    for (auto& w : rolled) buffer.push_back(std::move(w));

    // regression on the gathered windows
    DistillStats s;
    s.iteration = it;
    std::vector<const Window*> train;
    for (const auto& w : buffer) train.push_back(&w);
    double last_loss = 0.0;
    for (int e = 0; e < cfg.epochs_per_iteration; ++e) {
      double loss_sum = 0.0;
      int64_t count = 0;
      for (size_t at = 0; at < train.size(); at += cfg.batch_windows) {
        std::vector<const Window*> chunk;
        for (size_t k = at;
             k < std::min(train.size(), at + static_cast<size_t>(cfg.batch_windows));
             ++k)
          chunk.push_back(train[k]);
        WindowBatch batch = offpolicy::build_window_batch(
            chunk, cfg.window_len, cfg.visual, setup.norm_proprio,
            setup.norm_priv, env_cfg.camera.max_range, nullptr, rng, nullptr);
        // forward trunk + head over the window
        nn::VisualTrunk::Cache tcache;
        auto [feat, hT] = recon.trunk.forward(batch.proprio, batch.frames,
                                              batch.frame_of, batch.batch,
                                              batch.steps, batch.h0, tcache);
        nn::Mlp::Cache hcache;
        const MatXd rec = recon.head.forward(feat, hcache);
        // teacher-normalized targets from the raw priv rows
        MatXd drec = MatXd::Zero(rec.rows(), rec.cols());
        int64_t batch_count = 0;
        for (int b = 0; b < batch.batch; ++b) {
          const Window& w = *chunk[b];
          for (int t = 0; t <= w.len && t < batch.steps; ++t) {
            const int r = batch.row(b, t);
            const VecXd truth =
                teacher.norm.apply(VecXd(w.priv.row(t).transpose()))
                    .segment(priv_off, ReconPolicy::kReconDim);
            for (int k = 0; k < ReconPolicy::kReconDim; ++k) {
              const double diff = rec(r, k) - truth[k];
              loss_sum += diff * diff;
              drec(r, k) = 2.0 * diff;
              ++batch_count;
            }
          }
        }
        count += batch_count;
        if (batch_count > 0) drec /= static_cast<double>(batch_count);
        nn::ParamList params = recon.params();
        nn::zero_grads(params);
        const MatXd dfeat = recon.head.backward(hcache, drec);
        recon.trunk.backward(tcache, dfeat);
        nn::clip_grads_by_norm(params, cfg.grad_clip);
        opt.step(params);
      }
      last_loss = count ? loss_sum / count : 0.0;
    }
    s.train_loss = last_loss;
    s.recon_err = std::sqrt(std::max(0.0, last_loss));
    int64_t steps = 0;
    for (const auto& w : buffer) steps += w.len;
    s.dataset_steps = steps;
    if (metrics_csv) write_distill_metrics_row(*metrics_csv, s);
    if (history) history->push_back(s);

    // keep the buffer bounded to recent on-policy experience
    const size_t cap = 4096;
    if (buffer.size() > cap)
      buffer.erase(buffer.begin(), buffer.end() - cap);
  }

  // frozen-head contract
  if (teacher.actor.mlp.params()[0]->w != teacher_params_before)
    throw std::runtime_error("priv_recon: teacher parameters changed");

  nn::PolicyCheckpoint ckpt;
  ckpt.kind = nn::NetKind::recon;
  ckpt.has_visual = true;
  ckpt.visual_spec = cfg.visual;
  ckpt.mlp_spec = recon.head.spec();
  ckpt.act_lo = setup.bounds.lo;
  ckpt.act_hi = setup.bounds.hi;
  ckpt.set_norm(setup.norm_proprio);
  ckpt.capture(recon.params());
  return ckpt;
}

std::vector<ReconProbeSample> probe_recon_errors(
    const nn::PolicyCheckpoint& recon_ckpt,
    const nn::PolicyCheckpoint& teacher_ckpt, const sim::RobotModel& model,
    const sim::EnvConfig& env_cfg, sim::TerrainKind kind, int level,
    int n_samples, uint64_t seed) {
  Teacher teacher(teacher_ckpt);
  Rng rng(seed);
  ReconPolicy recon(recon_ckpt.visual_spec, rng);
  recon_ckpt.restore(recon.params());
  nn::RunningNorm norm_proprio = recon_ckpt.make_norm();
  const int priv_off = sim::kProprioDim;
  const int settle_steps = 8;  // recurrent state warm-up on the static scene

  std::vector<ReconProbeSample> samples;
  samples.reserve(n_samples);
  while (static_cast<int>(samples.size()) < n_samples) {
    // one scene: a pose dropped somewhere along the track (around the
    // overhead block when there is one), observed statically
    sim::TerrainSpec terrain = sim::make_terrain(kind, level, rng);
    sim::RobotState state = sim::reset_state(terrain, model, rng, 0.03);
    double x_lo = terrain.start_x, x_hi = terrain.finish_x - 0.5;
    double block_lo = 0.0, block_hi = 0.0;
    bool terrain_has_block = false;
    for (int c = 0; c < terrain.columns(); ++c) {
      if (terrain.ceiling[c] < sim::TerrainSpec::kNoCeiling * 0.5) {
        if (!terrain_has_block) block_lo = terrain.col_left_edge(c);
        block_hi = terrain.col_left_edge(c + 1);
        terrain_has_block = true;
      }
    }
    if (terrain_has_block) {
      x_lo = block_lo - 0.6;
      x_hi = block_hi - 0.1;
    }
    state.base_x = rng.uniform(x_lo, x_hi);
    const double ground = terrain.height_at(state.base_x);
    double base_z = ground + model.stand_height();
    const double overhead = terrain.ceiling_at(state.base_x);
    if (overhead < sim::TerrainSpec::kNoCeiling * 0.5)
      base_z = std::min(base_z, overhead - model.base_half_height - 0.02);
    state.base_z = base_z;

    const sim::DepthScan scan =
        sim::render_depth(state, terrain, env_cfg.camera);
    const sim::PrivObs priv = sim::privileged_obs(state, terrain, 0.5,
                                                  Vec4d::Zero());
    const VecXd priv_raw = priv.flatten();
    VecXd pr(sim::kProprioDim + 1 + sim::kActionDim);
    pr.segment(0, sim::kProprioDim) = sim::proprio_vector(state);
    pr[sim::kProprioDim] = 0.5;
    pr.segment(sim::kProprioDim + 1, sim::kActionDim).setZero();

    nn::ConvEncoder::Cache ecache;
    const VecXd latent =
        recon.trunk.encoder
            .forward((scan.ranges / env_cfg.camera.max_range).transpose(),
                     ecache)
            .row(0)
            .transpose();
    MatXd in(1, recon_ckpt.visual_spec.proprio_dim +
                    recon_ckpt.visual_spec.conv.latent_dim);
    in.block(0, 0, 1, recon_ckpt.visual_spec.proprio_dim) =
        norm_proprio.apply(pr).transpose();
    in.block(0, recon_ckpt.visual_spec.proprio_dim, 1,
             recon_ckpt.visual_spec.conv.latent_dim) = latent.transpose();
    MatXd h = MatXd::Zero(1, recon_ckpt.visual_spec.gru_hidden);
    for (int k = 0; k < settle_steps; ++k) {
      nn::GruCell::Cache gcache;
      h = recon.trunk.gru.forward(in, h, gcache);
    }
    const VecXd rec = recon.head.forward(h).row(0).transpose();
    const VecXd truth = teacher.norm.apply(priv_raw);

    ReconProbeSample sample;
    const int ceil_idx = priv_off + sim::kScanPoints;
    sample.ceiling_abs_err = std::abs(rec[sim::kScanPoints] - truth[ceil_idx]);
    sample.has_block = priv_raw[ceil_idx] < sim::kCeilingDefault - 1e-9;
    if (sample.has_block) {
      // the block counts as visible when some ray ends on its underside
      bool seen = false;
      const double c = std::cos(state.pitch), sn = std::sin(state.pitch);
      const Vec2d origin(
          state.base_x + c * env_cfg.camera.mount_x - sn * env_cfg.camera.mount_z,
          state.base_z + sn * env_cfg.camera.mount_x + c * env_cfg.camera.mount_z);
      for (int k = 0; k < env_cfg.camera.rays && !seen; ++k) {
        const double a = state.pitch - env_cfg.camera.pitch_down +
                         env_cfg.camera.fov *
                             (0.5 - static_cast<double>(k) /
                                        (env_cfg.camera.rays - 1));
        const Vec2d hit =
            origin + scan.ranges[k] * Vec2d(std::cos(a), std::sin(a));
        if (scan.ranges[k] < env_cfg.camera.max_range - 1e-6 &&
            terrain.has_ceiling_at(hit.x()) &&
            std::abs(hit.y() - terrain.ceiling_at(hit.x())) <
                2.0 * terrain.grid_resolution)
          seen = true;
      }
      sample.occluded = !seen;
    }
    samples.push_back(sample);
  }
  return samples;
}

}  // namespace parkour::baselines
