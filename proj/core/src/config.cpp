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

#include "parkour/harness/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace parkour::harness {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw ConfigError("config: bad numeric value '" + v + "' for " + key);
  }
}

int64_t to_int(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw ConfigError("config: bad integer value '" + v + "' for " + key);
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config: bad boolean value '" + v + "' for " + key);
}

std::vector<sim::TerrainKind> to_kinds(const std::string& v,
                                       const std::string& key) {
  std::vector<sim::TerrainKind> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(sim::terrain_kind_from(item));
    } catch (const ConfigError&) {
      throw ConfigError("config: bad terrain kind '" + item + "' in " + key);
    }
  }
  if (out.empty()) throw ConfigError("config: empty terrain list for " + key);
  return out;
}

std::string kinds_to_string(const std::vector<sim::TerrainKind>& kinds) {
  std::string out;
  for (size_t i = 0; i < kinds.size(); ++i) {
    if (i) out += ",";
    out += sim::to_string(kinds[i]);
  }
  return out;
}

std::vector<int> to_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<int>(to_int(item, key)));
  }
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

std::string int_list_to_string(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Key {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

using KeyMap = std::map<std::string, Key>;

void add_double(KeyMap& keys, const std::string& name, double& ref) {
  keys[name] = {[&ref, name](const std::string& v) { ref = to_double(v, name); },
                [&ref] { return fmt(ref); }};
}
void add_int(KeyMap& keys, const std::string& name, int& ref) {
  keys[name] = {
      [&ref, name](const std::string& v) { ref = static_cast<int>(to_int(v, name)); },
      [&ref] { return std::to_string(ref); }};
}
void add_i64(KeyMap& keys, const std::string& name, int64_t& ref) {
  keys[name] = {[&ref, name](const std::string& v) { ref = to_int(v, name); },
                [&ref] { return std::to_string(ref); }};
}
void add_u64(KeyMap& keys, const std::string& name, uint64_t& ref) {
  keys[name] = {[&ref, name](const std::string& v) {
                  ref = static_cast<uint64_t>(to_int(v, name));
                },
                [&ref] { return std::to_string(ref); }};
}
void add_size(KeyMap& keys, const std::string& name, size_t& ref) {
  keys[name] = {[&ref, name](const std::string& v) {
                  ref = static_cast<size_t>(to_int(v, name));
                },
                [&ref] { return std::to_string(ref); }};
}
void add_bool(KeyMap& keys, const std::string& name, bool& ref) {
  keys[name] = {[&ref, name](const std::string& v) { ref = to_bool(v, name); },
                [&ref] { return ref ? std::string("true") : std::string("false"); }};
}
void add_string(KeyMap& keys, const std::string& name, std::string& ref) {
  keys[name] = {[&ref](const std::string& v) { ref = v; },
                [&ref] { return ref; }};
}
void add_kinds(KeyMap& keys, const std::string& name,
               std::vector<sim::TerrainKind>& ref) {
  keys[name] = {[&ref, name](const std::string& v) { ref = to_kinds(v, name); },
                [&ref] { return kinds_to_string(ref); }};
}
void add_int_list(KeyMap& keys, const std::string& name, std::vector<int>& ref) {
  keys[name] = {[&ref, name](const std::string& v) { ref = to_int_list(v, name); },
                [&ref] { return int_list_to_string(ref); }};
}
void add_vec4(KeyMap& keys, const std::string& name, Vec4d& ref) {
  keys[name] = {[&ref, name](const std::string& v) {
                  std::stringstream ss(v);
                  std::string item;
                  int i = 0;
                  while (std::getline(ss, item, ',') && i < 4)
                    ref[i++] = to_double(trim(item), name);
                  if (i != 4)
                    throw ConfigError("config: " + name + " needs 4 values");
                },
                [&ref] {
                  return fmt(ref[0]) + "," + fmt(ref[1]) + "," + fmt(ref[2]) +
                         "," + fmt(ref[3]);
                }};
}

KeyMap build_registry(RunConfig& c) {
  KeyMap k;
  add_u64(k, "seed", c.seed);
  add_string(k, "out_dir", c.out_dir);

  // robot
  add_double(k, "robot.base_mass", c.robot.base_mass);
  add_double(k, "robot.base_inertia", c.robot.base_inertia);
  add_double(k, "robot.foot_mass", c.robot.foot_mass);
  add_double(k, "robot.thigh_length", c.robot.thigh_length);
  add_double(k, "robot.shank_length", c.robot.shank_length);
  add_vec4(k, "robot.joint_min", c.robot.joint_min);
  add_vec4(k, "robot.joint_max", c.robot.joint_max);
  add_vec4(k, "robot.default_pose", c.robot.default_pose);
  add_double(k, "robot.torque_limit", c.robot.torque_limit);
  add_double(k, "robot.joint_velocity_limit", c.robot.joint_velocity_limit);
  add_double(k, "robot.joint_accel_limit", c.robot.joint_accel_limit);
  add_double(k, "robot.action_rate_limit", c.robot.action_rate_limit);
  add_double(k, "robot.foot_contact_force_limit",
             c.robot.foot_contact_force_limit);
  add_double(k, "robot.desired_airtime", c.robot.desired_airtime);
  add_double(k, "robot.pitch_limit", c.robot.pitch_limit);
  add_double(k, "robot.heading_limit", c.robot.heading_limit);
  add_int(k, "robot.desired_foot_contacts", c.robot.desired_foot_contacts);
  add_double(k, "robot.stand_still_eps", c.robot.stand_still_eps);
  add_double(k, "robot.friction_mu", c.robot.friction_mu);
  add_double(k, "robot.contact_stiffness", c.robot.contact_stiffness);
  add_double(k, "robot.contact_damping", c.robot.contact_damping);
  add_double(k, "robot.action_scale", c.robot.action_scale);

  // environment
  add_double(k, "env.episode_time_limit", c.env.episode_time_limit);
  add_double(k, "env.reset_noise", c.env.reset_noise);
  add_int(k, "env.depth_period", c.env.depth_period);
  add_double(k, "env.kp", c.env.kp);
  add_double(k, "env.cmd_min", c.env.cmd_min);
  add_double(k, "env.cmd_max", c.env.cmd_max);
  add_double(k, "env.zero_cmd_fraction", c.env.zero_cmd_fraction);
  add_int(k, "env.camera_rays", c.env.camera.rays);
  add_double(k, "env.camera_fov", c.env.camera.fov);
  add_double(k, "env.camera_pitch_down", c.env.camera.pitch_down);
  add_double(k, "env.camera_max_range", c.env.camera.max_range);

  // stage 1
  add_int(k, "ppo.n_actors", c.ppo.n_actors);
  add_int(k, "ppo.rollout_length", c.ppo.rollout_length);
  add_int(k, "ppo.epochs", c.ppo.epochs);
  add_int(k, "ppo.minibatches", c.ppo.minibatches);
  add_double(k, "ppo.clip_ratio", c.ppo.clip_ratio);
  add_double(k, "ppo.gamma", c.ppo.gamma);
  add_double(k, "ppo.lambda", c.ppo.lambda);
  add_double(k, "ppo.entropy_coef", c.ppo.entropy_coef);
  add_double(k, "ppo.value_coef", c.ppo.value_coef);
  add_double(k, "ppo.lr", c.ppo.lr);
  add_double(k, "ppo.grad_clip", c.ppo.grad_clip);
  add_double(k, "ppo.init_log_std", c.ppo.init_log_std);
  add_double(k, "ppo.min_log_std", c.ppo.min_log_std);
  add_i64(k, "ppo.max_env_steps", c.ppo.max_env_steps);
  add_double(k, "ppo.kd_start", c.ppo.kd_start);
  add_double(k, "ppo.kd_end", c.ppo.kd_end);
  add_kinds(k, "ppo.kinds", c.ppo.kinds);
  add_int(k, "ppo.min_level", c.ppo.min_level);
  add_int(k, "ppo.max_level", c.ppo.max_level);
  add_int(k, "ppo.demote_after", c.ppo.demote_after);
  add_double(k, "ppo.early_fail_completion", c.ppo.early_fail_completion);
  add_int_list(k, "ppo.actor_hidden", c.ppo.actor_hidden);
  add_int_list(k, "ppo.critic_hidden", c.ppo.critic_hidden);
  add_bool(k, "ppo.cat_enabled", c.ppo.cat_enabled);
  add_double(k, "ppo.cat_ema", c.ppo.cat_ema);
  add_int(k, "ppo.eval_every", c.ppo.eval_every);
  add_int(k, "ppo.eval_episodes", c.ppo.eval_episodes);

  // privileged experience collection
  add_i64(k, "collect.n_samples", c.collect.n_samples);
  add_kinds(k, "collect.kinds", c.collect.kinds);
  add_int(k, "collect.min_level", c.collect.min_level);
  add_int(k, "collect.max_level", c.collect.max_level);
  add_double(k, "collect.kd", c.collect.kd);

  // stage 2
  add_int(k, "stage2.n_actors", c.stage2.n_actors);
  add_i64(k, "stage2.online_steps", c.stage2.online_steps);
  add_int(k, "stage2.utd", c.stage2.utd);
  add_int(k, "stage2.batch_windows", c.stage2.batch_windows);
  add_int(k, "stage2.window_len", c.stage2.window_len);
  add_int(k, "stage2.n_critics", c.stage2.n_critics);
  add_int(k, "stage2.target_subset", c.stage2.target_subset);
  add_double(k, "stage2.gamma", c.stage2.gamma);
  add_double(k, "stage2.polyak", c.stage2.polyak);
  add_double(k, "stage2.actor_lr", c.stage2.actor_lr);
  add_double(k, "stage2.critic_lr", c.stage2.critic_lr);
  add_double(k, "stage2.explore_noise", c.stage2.explore_noise);
  add_double(k, "stage2.grad_clip", c.stage2.grad_clip);
  add_int(k, "stage2.warmup_online_steps", c.stage2.warmup_online_steps);
  add_size(k, "stage2.online_capacity_windows",
           c.stage2.online_capacity_windows);
  add_double(k, "stage2.kd", c.stage2.kd);
  add_kinds(k, "stage2.kinds", c.stage2.kinds);
  add_int(k, "stage2.min_level", c.stage2.min_level);
  add_int(k, "stage2.max_level", c.stage2.max_level);
  add_int_list(k, "stage2.critic_hidden", c.stage2.critic_hidden);
  add_bool(k, "stage2.augment_enabled", c.stage2.augment.enabled);
  add_double(k, "stage2.augment_noise_std", c.stage2.augment.noise_std);
  add_int(k, "stage2.augment_max_shift", c.stage2.augment.max_shift);
  add_int(k, "stage2.augment_max_cutout", c.stage2.augment.max_cutout);
  add_double(k, "stage2.cat_ema", c.stage2.cat_ema);
  add_int(k, "stage2.eval_every_steps", c.stage2.eval_every_steps);
  // visual architecture (shared by stage 2 and the baselines)
  add_int_list(k, "visual.conv_channels", c.stage2.visual.conv.channels);
  add_int(k, "visual.conv_kernel", c.stage2.visual.conv.kernel);
  add_int(k, "visual.latent_dim", c.stage2.visual.conv.latent_dim);
  add_int(k, "visual.gru_hidden", c.stage2.visual.gru_hidden);
  add_int_list(k, "visual.mlp_hidden", c.stage2.visual.mlp.hidden);

  // baselines
  add_int(k, "distill.epochs", c.distill.epochs);
  add_int(k, "distill.iterations", c.distill.iterations);
  add_int(k, "distill.epochs_per_iteration", c.distill.epochs_per_iteration);
  add_i64(k, "distill.rollout_steps", c.distill.rollout_steps);
  add_double(k, "distill.lr", c.distill.lr);
  add_int(k, "distill.batch_windows", c.distill.batch_windows);
  add_int(k, "distill.window_len", c.distill.window_len);
  add_double(k, "distill.val_fraction", c.distill.val_fraction);
  add_kinds(k, "distill.kinds", c.distill.kinds);
  add_int(k, "distill.min_level", c.distill.min_level);
  add_int(k, "distill.max_level", c.distill.max_level);
  add_double(k, "distill.dagger_mix_start", c.distill.dagger_mix_start);
  add_double(k, "distill.dagger_mix_end", c.distill.dagger_mix_end);

  // evaluation protocol
  add_kinds(k, "eval.kinds", c.eval.kinds);
  add_int(k, "eval.min_level", c.eval.min_level);
  add_int(k, "eval.max_level", c.eval.max_level);
  add_int(k, "eval.episodes_per_cell", c.eval.episodes_per_cell);
  add_double(k, "eval.timeout_s", c.eval.timeout_s);
  add_double(k, "eval.v_cmd", c.eval.v_cmd);
  add_double(k, "eval.kd", c.eval.kd);
  add_bool(k, "eval.float32", c.eval.float32);

  // constraint suite: schedule, hard flag and conditional tag per row
  for (auto& spec : c.suite) {
    const std::string base = "constraint." + spec.id + ".";
    add_bool(k, base + "hard", spec.hard);
    add_double(k, base + "p_max_start", spec.p_max.start);
    add_double(k, base + "p_max_end", spec.p_max.end);
    add_double(k, base + "p_max_ramp_fraction", spec.p_max.ramp_fraction);
    k[base + "conditional"] = {
        [&spec, base](const std::string& v) {
          if (v == "none")
            spec.conditional = task::Conditional::none;
          else if (v == "no_command")
            spec.conditional = task::Conditional::no_command;
          else if (v == "flat_or_early_terrain")
            spec.conditional = task::Conditional::flat_or_early_terrain;
          else
            throw ConfigError("config: bad conditional '" + v + "' for " + base);
        },
        [&spec] {
          switch (spec.conditional) {
            case task::Conditional::none: return std::string("none");
            case task::Conditional::no_command: return std::string("no_command");
            case task::Conditional::flat_or_early_terrain:
              return std::string("flat_or_early_terrain");
          }
          return std::string("none");
        }};
  }
  return k;
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in, const std::string& origin) {
  RunConfig cfg;
  KeyMap keys = build_registry(cfg);
  std::string line;
  int line_no = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end())
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    if (++seen[key] > 1)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    it->second.set(value);
  }
  // keep dependent sections coherent
  cfg.ppo.suite = cfg.suite;
  cfg.stage2.suite = cfg.suite;
  cfg.collect.suite = cfg.suite;
  cfg.distill.visual = cfg.stage2.visual;
  cfg.distill.visual.conv.rays = cfg.env.camera.rays;
  cfg.stage2.visual.conv.rays = cfg.env.camera.rays;
  cfg.stage2.visual.mlp.input_dim = cfg.stage2.visual.gru_hidden;
  cfg.distill.visual.mlp.input_dim = cfg.distill.visual.gru_hidden;
  cfg.robot.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse(in, path);
}

std::string RunConfig::dump() const {
  RunConfig copy = *this;
  KeyMap keys = build_registry(copy);
  std::string out;
  for (const auto& [name, key] : keys) out += name + " = " + key.get() + "\n";
  return out;
}

uint64_t RunConfig::content_hash() const {
  const std::string text = dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_default_config(std::ostream& out) {
  RunConfig cfg;
  out << "# parkourlab run configuration (defaults)\n" << cfg.dump();
}

}  // namespace parkour::harness
