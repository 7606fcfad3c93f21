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

#include "parkour/offpolicy/dpriv.hpp"

#include <algorithm>

#include <cmath>

#include "parkour/io.hpp"
#include "parkour/task/constraints.hpp"
#include "parkour/task/reward.hpp"

namespace parkour::offpolicy {

namespace {
constexpr uint64_t kMagic = 0x3130565250444b50ULL;  // "PKDPRV01"

VecXd compose_proprio(const sim::Env& env) {
  VecXd row(sim::kProprioDim + 1 + sim::kActionDim);
  row.segment(0, sim::kProprioDim) = env.proprio();
  row[sim::kProprioDim] = env.v_cmd();
  row.segment(sim::kProprioDim + 1, sim::kActionDim) = env.prev_action();
  return row;
}
}  // namespace

int64_t Dataset::total_steps() const {
  int64_t n = 0;
  for (const auto& e : episodes) n += e.length();
  return n;
}

std::vector<Window> Dataset::to_windows(int window_len) const {
  std::vector<Window> out;
  for (const auto& ep : episodes) {
    const int T = ep.length();
    for (int start = 0; start < T; start += window_len) {
      const int len = std::min(window_len, T - start);
      Window w;
      w.start_step = start;
      w.len = len;
      w.source = Source::privileged;
      w.v_cmd = ep.v_cmd;
      w.proprio = ep.proprio.middleRows(start, len + 1);
      w.priv = ep.priv.middleRows(start, len + 1);
      w.actions = ep.actions.middleRows(start, len);
      w.rewards = ep.rewards.segment(start, len);
      w.violations = ep.violations.middleRows(start, len);
      const int f0 = start / depth_period;
      const int f1 = (start + len) / depth_period;  // boundary frame inclusive
      w.depth = ep.depth.middleRows(f0, std::min<int>(f1 - f0 + 1,
                                                      ep.depth.rows() - f0));
      w.end_terminated =
          (start + len == T) ? ep.end_terminated : static_cast<uint8_t>(0);
      w.h0 = VecXd();  // privileged windows carry no recurrent state
      out.push_back(std::move(w));
    }
  }
  return out;
}

void Dataset::save(const std::string& path) const {
  io::BinWriter w(path);
  w.u64(kMagic);
  w.u32(1);
  w.u32(static_cast<uint32_t>(episodes.size()));
  w.u32(static_cast<uint32_t>(depth_period));
  w.u32(static_cast<uint32_t>(proprio_dim));
  w.u32(static_cast<uint32_t>(priv_dim));
  w.u32(static_cast<uint32_t>(act_dim));
  w.u32(static_cast<uint32_t>(n_constraints));
  w.u32(static_cast<uint32_t>(rays));
  for (const auto& e : episodes) {
    w.u32(static_cast<uint32_t>(e.length()));
    w.u8(e.end_terminated);
    w.f64(e.v_cmd);
    w.mat(e.proprio);
    w.mat(e.priv);
    w.mat(e.actions);
    w.vec(e.rewards);
    w.mat(e.violations);
    w.mat(e.depth);
  }
}

Dataset Dataset::load(const std::string& path) {
  io::BinReader r(path);
  if (r.u64() != kMagic)
    throw ConfigError("not a privileged experience file: " + path);
  if (r.u32() != 1) throw ConfigError("unsupported experience file version");
  Dataset d;
  const uint32_t n = r.u32();
  d.depth_period = static_cast<int>(r.u32());
  d.proprio_dim = static_cast<int>(r.u32());
  d.priv_dim = static_cast<int>(r.u32());
  d.act_dim = static_cast<int>(r.u32());
  d.n_constraints = static_cast<int>(r.u32());
  d.rays = static_cast<int>(r.u32());
  d.episodes.resize(n);
  for (auto& e : d.episodes) {
    const uint32_t T = r.u32();
    e.end_terminated = r.u8();
    e.v_cmd = r.f64();
    e.proprio = r.mat();
    e.priv = r.mat();
    e.actions = r.mat();
    e.rewards = r.vec();
    e.violations = r.mat();
    e.depth = r.mat();
    if (e.length() != static_cast<int>(T) ||
        e.proprio.rows() != static_cast<int>(T) + 1)
      throw ConfigError("corrupt episode in " + path);
  }
  return d;
}

uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot checksum " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof buf)) break;
  }
  return h;
}

ActionBounds ActionBounds::from_dataset(const Dataset& data, double margin) {
  if (data.episodes.empty())
    throw ConfigError("action bounds need a non-empty dataset");
  VecXd lo = VecXd::Constant(data.act_dim, 1e300);
  VecXd hi = VecXd::Constant(data.act_dim, -1e300);
  for (const auto& e : data.episodes) {
    lo = lo.cwiseMin(e.actions.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(e.actions.colwise().maxCoeff().transpose());
  }
  const VecXd span = (hi - lo).cwiseMax(1e-6);
  ActionBounds b{lo - margin * span, hi + margin * span};
  b.validate();
  return b;
}

void ActionBounds::validate() const {
  if (lo.size() == 0 || lo.size() != hi.size())
    throw ConfigError("action bounds: empty or mismatched");
  for (int i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i]))
      throw ConfigError("action bounds: lo >= hi at dim " + std::to_string(i));
}

Dataset collect_privileged_experience(const nn::PolicyCheckpoint& teacher,
                                      const sim::RobotModel& model,
                                      const sim::EnvConfig& env_config,
                                      const CollectConfig& cfg) {
  if (teacher.kind != nn::NetKind::priv_actor)
    throw ConfigError("collect: checkpoint is not a privileged policy");
  if (teacher.mlp_spec.input_dim != sim::kPrivDim)
    throw ConfigError("collect: checkpoint observation dim mismatch");

  Rng rng(cfg.seed);
  nn::GaussianPolicy actor("actor", teacher.mlp_spec, 0.0, rng);
  teacher.restore(actor.params());
  const nn::RunningNorm norm = teacher.make_norm();

  Dataset data;
  data.depth_period = env_config.depth_period;
  data.proprio_dim = sim::kProprioDim + 1 + sim::kActionDim;
  data.priv_dim = sim::kPrivDim;
  data.act_dim = sim::kActionDim;
  data.n_constraints = task::kNumConstraints;
  data.rays = env_config.camera.rays;

  sim::Env env(model, env_config, rng.next_u64());
  const sim::PdGains gains{env_config.kp, cfg.kd};
  int64_t collected = 0;
  size_t kind_cursor = 0;

  while (collected < cfg.n_samples) {
    const sim::TerrainKind kind = cfg.kinds[kind_cursor++ % cfg.kinds.size()];
    const int level =
        cfg.min_level +
        static_cast<int>(rng.below(cfg.max_level - cfg.min_level + 1));
    env.reset(kind, level);

    std::vector<VecXd> proprio_rows, priv_rows, depth_rows;
    std::vector<Vec4d> action_rows;
    std::vector<double> reward_rows;
    std::vector<VecXd> violation_rows;
    proprio_rows.push_back(compose_proprio(env));
    priv_rows.push_back(env.priv_obs().flatten());
    depth_rows.push_back(env.depth().ranges);

    bool terminated = false;
    while (true) {
      const VecXd obs = norm.apply(env.priv_obs().flatten());
      const VecXd mean = actor.mean(obs.transpose()).row(0).transpose();
      const auto sample = actor.sample(mean, rng);
      const Vec4d prev_offsets = env.prev_action();
      const auto& ci = env.step(sample.action, gains);
      task::TerrainContext ctx{kind, level, env.v_cmd() > 0.0,
                               std::hypot(env.state().base_vx, env.state().base_vz)};
      const auto rep = task::evaluate_constraints(ci, prev_offsets,
                                                  env.v_cmd(), ctx, model,
                                                  cfg.suite);
      action_rows.push_back(sample.action);
      reward_rows.push_back(task::reward(env.state(), env.v_cmd()));
      violation_rows.push_back(rep.violations);
      proprio_rows.push_back(compose_proprio(env));
      priv_rows.push_back(env.priv_obs().flatten());
      if (env.steps_taken() % data.depth_period == 0)
        depth_rows.push_back(env.depth().ranges);
      ++collected;
      if (env.fallen()) {
        terminated = true;
        break;
      }
      if (env.finished() || env.timed_out() || collected >= cfg.n_samples)
        break;
    }

    EpisodeRecord ep;
    const int T = static_cast<int>(action_rows.size());
    ep.end_terminated = terminated ? 1 : 0;
    ep.v_cmd = env.v_cmd();
    ep.proprio.resize(T + 1, data.proprio_dim);
    ep.priv.resize(T + 1, data.priv_dim);
    for (int i = 0; i <= T; ++i) {
      ep.proprio.row(i) = proprio_rows[i].transpose();
      ep.priv.row(i) = priv_rows[i].transpose();
    }
    ep.actions.resize(T, data.act_dim);
    ep.rewards.resize(T);
    ep.violations.resize(T, data.n_constraints);
    for (int i = 0; i < T; ++i) {
      ep.actions.row(i) = action_rows[i].transpose();
      ep.rewards[i] = reward_rows[i];
      ep.violations.row(i) = violation_rows[i].transpose();
    }
    ep.depth.resize(static_cast<int>(depth_rows.size()), data.rays);
    for (size_t i = 0; i < depth_rows.size(); ++i)
      ep.depth.row(static_cast<int>(i)) = depth_rows[i].transpose();
    data.episodes.push_back(std::move(ep));
  }
  return data;
}

}  // namespace parkour::offpolicy
