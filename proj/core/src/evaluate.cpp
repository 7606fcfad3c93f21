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

#include "parkour/harness/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "parkour/baselines/distill.hpp"
#include "parkour/threadpool.hpp"

namespace parkour::harness {

namespace {

// per-episode acting state for each checkpoint kind
class Acting {
 public:
  Acting(const nn::PolicyCheckpoint& ckpt, const nn::PolicyCheckpoint* teacher,
         const RunConfig& cfg)
      : kind_(ckpt.kind), cfg_(cfg) {
    Rng init(1);
    norm_ = ckpt.make_norm();
    switch (ckpt.kind) {
      case nn::NetKind::priv_actor: {
        priv_ = std::make_unique<nn::GaussianPolicy>("actor", ckpt.mlp_spec,
                                                     0.0, init);
        ckpt.restore(priv_->params());
        if (cfg.eval.float32) f32_ = std::make_unique<nn::MlpF32>(priv_->mlp);
        break;
      }
      case nn::NetKind::visual_actor: {
        visual_ = std::make_unique<offpolicy::VisualPolicy>(
            ckpt.visual_spec, offpolicy::ActionBounds{ckpt.act_lo, ckpt.act_hi},
            init);
        ckpt.restore(visual_->params());
        break;
      }
      case nn::NetKind::recon: {
        if (!teacher)
          throw ConfigError("evaluating a reconstruction policy needs --teacher");
        recon_ = std::make_unique<baselines::ReconPolicy>(ckpt.visual_spec, init);
        ckpt.restore(recon_->params());
        teacher_ = std::make_unique<nn::GaussianPolicy>(
            "actor", teacher->mlp_spec, 0.0, init);
        teacher->restore(teacher_->params());
        teacher_norm_ = teacher->make_norm();
        break;
      }
      default:
        throw ConfigError("checkpoint kind is not an actable policy");
    }
    if (visual_ || recon_) {
      const auto& vs = ckpt.visual_spec;
      hidden_ = VecXd::Zero(vs.gru_hidden);
      latent_ = VecXd::Zero(vs.conv.latent_dim);
    }
  }

  void reset(const sim::Env& env) {
    if (hidden_.size()) hidden_.setZero();
    if (latent_.size()) refresh_latent(env);
  }

  void on_step(const sim::Env& env) {
    if (latent_.size() && env.depth_fresh()) refresh_latent(env);
  }

  VecXd act(const sim::Env& env) {
    switch (kind_) {
      case nn::NetKind::priv_actor: {
        const VecXd obs = norm_.apply(env.priv_obs().flatten());
        if (f32_) return f32_->forward64(obs);
        return priv_->mean(obs.transpose()).row(0).transpose();
      }
      case nn::NetKind::visual_actor: {
        return visual_->act(norm_.apply(compose_proprio(env)), latent_, hidden_);
      }
      case nn::NetKind::recon: {
        MatXd in(1, static_cast<int>(norm_.dim() + latent_.size()));
        in.block(0, 0, 1, norm_.dim()) =
            norm_.apply(compose_proprio(env)).transpose();
        in.block(0, norm_.dim(), 1, latent_.size()) = latent_.transpose();
        nn::GruCell::Cache cache;
        const MatXd h = recon_->trunk.gru.forward(in, hidden_.transpose(), cache);
        hidden_ = h.row(0).transpose();
        const VecXd rec = recon_->head.forward(h).row(0).transpose();
        VecXd teacher_obs = teacher_norm_.apply(env.priv_obs().flatten());
        teacher_obs.segment(sim::kProprioDim, baselines::ReconPolicy::kReconDim) =
            rec;
        return teacher_->mean(teacher_obs.transpose()).row(0).transpose();
      }
      default:
        return VecXd::Zero(sim::kActionDim);
    }
  }

 private:
  static VecXd compose_proprio(const sim::Env& env) {
    VecXd pr(sim::kProprioDim + 1 + sim::kActionDim);
    pr.segment(0, sim::kProprioDim) = env.proprio();
    pr[sim::kProprioDim] = env.v_cmd();
    pr.segment(sim::kProprioDim + 1, sim::kActionDim) = env.prev_action();
    return pr;
  }

  void refresh_latent(const sim::Env& env) {
    const VecXd scan = env.depth().ranges / cfg_.env.camera.max_range;
    if (visual_) {
      latent_ = visual_->encode_frame(scan);
    } else if (recon_) {
      nn::ConvEncoder::Cache cache;
      latent_ =
          recon_->trunk.encoder.forward(scan.transpose(), cache).row(0).transpose();
    }
  }

  nn::NetKind kind_;
  const RunConfig& cfg_;
  nn::RunningNorm norm_;
  nn::RunningNorm teacher_norm_;
  std::unique_ptr<nn::GaussianPolicy> priv_;
  std::unique_ptr<nn::MlpF32> f32_;
  std::unique_ptr<offpolicy::VisualPolicy> visual_;
  std::unique_ptr<baselines::ReconPolicy> recon_;
  std::unique_ptr<nn::GaussianPolicy> teacher_;
  VecXd hidden_, latent_;
};

}  // namespace

const EvalCell* EvalResult::find(sim::TerrainKind kind, int level) const {
  for (const auto& c : cells)
    if (c.kind == kind && c.level == level) return &c;
  return nullptr;
}

double EvalResult::mean_completion(sim::TerrainKind kind) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : cells)
    if (c.kind == kind) {
      sum += c.completion;
      ++n;
    }
  return n ? sum / n : 0.0;
}

void EvalResult::save_csv(std::ostream& out) const {
  out << "policy,kind,level,obstacle_dimension,episodes,completion,"
         "success_rate,success_steps";
  for (const auto& spec : task::constraint_specs()) out << ",viol_" << spec.id;
  out << "\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& c : cells) {
    out << policy_name << ',' << sim::to_string(c.kind) << ',' << c.level << ','
        << fmt(c.obstacle_dimension) << ',' << c.episodes << ','
        << fmt(c.completion) << ',' << fmt(c.success_rate) << ','
        << c.success_steps;
    for (int i = 0; i < c.violation_pct.size(); ++i)
      out << ',' << fmt(c.violation_pct[i]);
    out << "\n";
  }
}

void EvalResult::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  save_csv(out);
}

EvalResult EvalResult::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("policy,kind,level,", 0) != 0)
    throw ConfigError("not an evaluation csv: " + path);
  EvalResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string item;
    EvalCell cell;
    std::getline(ss, result.policy_name, ',');
    std::getline(ss, item, ',');
    cell.kind = sim::terrain_kind_from(item);
    std::getline(ss, item, ',');
    cell.level = std::stoi(item);
    std::getline(ss, item, ',');
    cell.obstacle_dimension = std::stod(item);
    std::getline(ss, item, ',');
    cell.episodes = std::stoi(item);
    std::getline(ss, item, ',');
    cell.completion = std::stod(item);
    std::getline(ss, item, ',');
    cell.success_rate = std::stod(item);
    std::getline(ss, item, ',');
    cell.success_steps = std::stoll(item);
    std::vector<double> viols;
    while (std::getline(ss, item, ',')) viols.push_back(std::stod(item));
    cell.violation_pct =
        Eigen::Map<VecXd>(viols.data(), static_cast<int>(viols.size()));
    result.cells.push_back(std::move(cell));
  }
  return result;
}

EvalResult eval_policy(const nn::PolicyCheckpoint& ckpt,
                       const nn::PolicyCheckpoint* teacher,
                       const RunConfig& config, uint64_t seed) {
  std::vector<std::pair<sim::TerrainKind, int>> grid;
  for (const auto kind : config.eval.kinds) {
    const int top = kind == sim::TerrainKind::flat ? config.eval.min_level
                                                   : config.eval.max_level;
    for (int level = config.eval.min_level; level <= top; ++level)
      grid.emplace_back(kind, level);
  }
  std::vector<EvalCell> cells(grid.size());

  sim::EnvConfig env_cfg = config.env;
  env_cfg.episode_time_limit = config.eval.timeout_s;
  env_cfg.zero_cmd_fraction = 0.0;

  ThreadPool::global().parallel_for(
      static_cast<int>(grid.size()), [&](int g) {
        const auto [kind, level] = grid[g];
        Acting acting(ckpt, teacher, config);
        EvalCell& cell = cells[g];
        cell.kind = kind;
        cell.level = level;
        cell.obstacle_dimension = sim::obstacle_dimension_for(kind, level);
        cell.episodes = config.eval.episodes_per_cell;
        cell.violation_pct = VecXd::Zero(task::kNumConstraints);
        const sim::PdGains gains{config.env.kp, config.eval.kd};

        VecXd success_violations = VecXd::Zero(task::kNumConstraints);
        int64_t success_steps = 0;
        int successes = 0;
        double completion_sum = 0.0;
        for (int e = 0; e < config.eval.episodes_per_cell; ++e) {
          sim::Env env(config.robot, env_cfg,
                       seed ^ (0x51ed2700ULL + g * 7919ULL + e));
          env.reset(kind, level);
          env.set_v_cmd(config.eval.v_cmd);
          acting.reset(env);
          VecXd viol_steps = VecXd::Zero(task::kNumConstraints);
          int64_t steps = 0;
          while (!env.fallen() && !env.finished() && !env.timed_out()) {
            const VecXd action = acting.act(env);
            const Vec4d prev = env.prev_action();
            try {
              const auto& ci = env.step(action, gains);
              task::TerrainContext ctx{
                  kind, level, true,
                  std::hypot(env.state().base_vx, env.state().base_vz)};
              const auto rep = task::evaluate_constraints(
                  ci, prev, env.v_cmd(), ctx, config.robot, config.suite);
              for (int i = 0; i < task::kNumConstraints; ++i)
                if (rep.violations[i] > 0.0) viol_steps[i] += 1.0;
              ++steps;
            } catch (const SimulationDiverged&) {
              break;
            }
            acting.on_step(env);
          }
          completion_sum += env.completion();
          if (env.completion() >= 0.999) {
            ++successes;
            success_violations += viol_steps;
            success_steps += steps;
          }
        }
        cell.completion = completion_sum / config.eval.episodes_per_cell;
        cell.success_rate =
            static_cast<double>(successes) / config.eval.episodes_per_cell;
        cell.success_steps = success_steps;
        if (success_steps > 0)
          cell.violation_pct =
              success_violations / static_cast<double>(success_steps);
      });

  EvalResult result;
  result.cells = std::move(cells);
  return result;
}

}  // namespace parkour::harness
