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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "parkour/baselines/distill.hpp"
#include "parkour/harness/evaluate.hpp"
#include "parkour/harness/manifest.hpp"
#include "parkour/harness/report.hpp"
#include "parkour/nn/gradcheck.hpp"
#include "parkour/ppo/ppo.hpp"

namespace fs = std::filesystem;
using namespace parkour;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
};

harness::RunConfig load_config(const CommonArgs& args) {
  harness::RunConfig cfg = args.config_path.empty()
                               ? harness::RunConfig{}
                               : harness::RunConfig::load(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

std::vector<std::string> argv_vector(int argc, char** argv) {
  return std::vector<std::string>(argv, argv + argc);
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file");
  cmd->add_option("--seed", args.seed, "random seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_option("--out", args.out_dir, "output directory");
}

int run_train_stage1(const CommonArgs& args,
                     const std::vector<std::string>& argv) {
  harness::RunConfig cfg = load_config(args);
  fs::create_directories(cfg.out_dir);
  harness::RunManifest manifest(cfg, cfg.seed, argv);

  ppo::Stage1Trainer trainer(cfg.ppo, cfg.robot, cfg.env, cfg.seed);
  std::ofstream metrics(cfg.out_dir + "/stage1_metrics.csv");
  std::cout << "training privileged policy: " << cfg.ppo.max_env_steps
            << " env steps, " << cfg.ppo.n_actors << " actors\n";
  const auto ckpt = trainer.train(
      [&](const ppo::IterStats& s) {
        if (s.iteration % 50 == 0)
          std::cout << "iter " << s.iteration << " steps " << s.env_steps
                    << " reward " << s.mean_reward << " delta " << s.mean_delta
                    << " completion " << s.mean_completion << "\n";
        return false;
      },
      &metrics);
  const std::string ckpt_path = cfg.out_dir + "/stage1.ckpt";
  ckpt.save(ckpt_path);
  manifest.add_output(ckpt_path);
  manifest.add_output(cfg.out_dir + "/stage1_metrics.csv");
  manifest.finalize(cfg.out_dir);
  std::cout << "saved " << ckpt_path << "\n";
  return 0;
}

int run_collect(const CommonArgs& args, const std::string& ckpt_path,
                const std::vector<std::string>& argv) {
  harness::RunConfig cfg = load_config(args);
  fs::create_directories(cfg.out_dir);
  harness::RunManifest manifest(cfg, cfg.seed, argv);
  const auto teacher = nn::PolicyCheckpoint::load(ckpt_path);
  offpolicy::CollectConfig cc = cfg.collect;
  cc.seed = cfg.seed;
  cc.suite = cfg.suite;
  std::cout << "collecting " << cc.n_samples << " privileged samples\n";
  const auto data =
      offpolicy::collect_privileged_experience(teacher, cfg.robot, cfg.env, cc);
  const std::string out = cfg.out_dir + "/dpriv.bin";
  data.save(out);
  manifest.add_output(out);
  manifest.finalize(cfg.out_dir);
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(offpolicy::file_checksum(out)));
  std::cout << "saved " << out << " (" << data.episodes.size() << " episodes, "
            << data.total_steps() << " steps, checksum " << hex << ")\n";
  return 0;
}

int run_train_stage2(const CommonArgs& args, const std::string& dpriv_path,
                     const std::string& ablation,
                     const std::vector<std::string>& argv) {
  harness::RunConfig cfg = load_config(args);
  fs::create_directories(cfg.out_dir);
  harness::RunManifest manifest(cfg, cfg.seed, argv);

  offpolicy::Stage2Config s2 = cfg.stage2;
  if (ablation == "from-scratch")
    s2.from_scratch = true;
  else if (ablation == "no-priv-critic")
    s2.no_priv_critic = true;
  else if (ablation == "no-cat")
    s2.no_cat = true;
  else if (!ablation.empty())
    throw ConfigError("unknown ablation: " + ablation);

  offpolicy::Dataset data;
  const offpolicy::Dataset* data_ptr = nullptr;
  if (!s2.from_scratch) {
    if (dpriv_path.empty())
      throw ConfigError("train-stage2 needs --dpriv unless ablating from-scratch");
    data = offpolicy::Dataset::load(dpriv_path);
    data_ptr = &data;
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(
                      offpolicy::file_checksum(dpriv_path)));
    std::cout << "experience checksum " << hex << "\n";
  }
  offpolicy::Stage2Trainer trainer(s2, cfg.robot, cfg.env, data_ptr, cfg.seed);
  std::ofstream metrics(cfg.out_dir + "/stage2_metrics.csv");
  std::cout << "visual policy learning: " << s2.online_steps
            << " online env steps\n";
  int64_t next_log = 0;
  const auto ckpt = trainer.train(
      [&](const offpolicy::Stage2Stats& s) {
        if (s.env_steps >= next_log) {
          std::cout << "steps " << s.env_steps << " critic_loss "
                    << s.critic_loss << " actor_q " << s.actor_q << " reward "
                    << s.mean_reward << "\n";
          next_log += std::max<int64_t>(1000, s2.online_steps / 50);
        }
        return false;
      },
      &metrics);
  const std::string ckpt_path = cfg.out_dir + "/stage2.ckpt";
  ckpt.save(ckpt_path);
  manifest.add_output(ckpt_path);
  manifest.finalize(cfg.out_dir);
  std::cout << "saved " << ckpt_path << "\n";
  return 0;
}

int run_train_baseline(const CommonArgs& args, const std::string& method_name,
                       const std::string& dpriv_path,
                       const std::string& teacher_path,
                       const std::string& bc_path,
                       const std::vector<std::string>& argv) {
  harness::RunConfig cfg = load_config(args);
  fs::create_directories(cfg.out_dir);
  harness::RunManifest manifest(cfg, cfg.seed, argv);
  baselines::DistillConfig dc = cfg.distill;
  dc.method = baselines::method_from(method_name);
  dc.seed = cfg.seed;

  const auto data = offpolicy::Dataset::load(dpriv_path);
  std::ofstream metrics(cfg.out_dir + "/distill_metrics.csv");
  nn::PolicyCheckpoint ckpt;
  switch (dc.method) {
    case baselines::Method::bc:
      ckpt = baselines::bc_train(data, dc, &metrics);
      break;
    case baselines::Method::dagger: {
      if (teacher_path.empty())
        throw ConfigError("dagger needs --teacher (stage-1 checkpoint)");
      const auto teacher = nn::PolicyCheckpoint::load(teacher_path);
      nn::PolicyCheckpoint bc_init;
      if (!bc_path.empty()) {
        bc_init = nn::PolicyCheckpoint::load(bc_path);
      } else {
        std::cout << "pretraining the warm-start with behavior cloning\n";
        bc_init = baselines::bc_train(data, dc, nullptr);
      }
      ckpt = baselines::dagger_train(teacher, bc_init, data, dc, cfg.robot,
                                     cfg.env, &metrics);
      break;
    }
    case baselines::Method::priv_recon: {
      if (teacher_path.empty())
        throw ConfigError("priv-recon needs --teacher (stage-1 checkpoint)");
      const auto teacher = nn::PolicyCheckpoint::load(teacher_path);
      ckpt = baselines::priv_recon_train(teacher, data, dc, cfg.robot, cfg.env,
                                         &metrics);
      break;
    }
  }
  const std::string out = cfg.out_dir + "/" + method_name + ".ckpt";
  ckpt.save(out);
  manifest.add_output(out);
  manifest.finalize(cfg.out_dir);
  std::cout << "saved " << out << "\n";
  return 0;
}

int run_eval(const CommonArgs& args, const std::string& ckpt_path,
             const std::string& teacher_path, const std::string& name,
             const std::vector<std::string>& argv) {
  harness::RunConfig cfg = load_config(args);
  fs::create_directories(cfg.out_dir);
  harness::RunManifest manifest(cfg, cfg.seed, argv);
  const auto ckpt = nn::PolicyCheckpoint::load(ckpt_path);
  std::optional<nn::PolicyCheckpoint> teacher;
  if (!teacher_path.empty())
    teacher = nn::PolicyCheckpoint::load(teacher_path);
  auto result =
      harness::eval_policy(ckpt, teacher ? &*teacher : nullptr, cfg, cfg.seed);
  result.policy_name =
      name.empty() ? fs::path(ckpt_path).stem().string() : name;
  const std::string out = cfg.out_dir + "/eval_" + result.policy_name + ".csv";
  result.save_csv(out);
  manifest.add_output(out);
  manifest.finalize(cfg.out_dir);
  for (const auto& cell : result.cells)
    std::cout << sim::to_string(cell.kind) << " level " << cell.level
              << " dim " << cell.obstacle_dimension << " completion "
              << cell.completion << " success " << cell.success_rate << "\n";
  std::cout << "saved " << out << "\n";
  return 0;
}

int run_report(const CommonArgs& args, const std::vector<std::string>& csvs,
               const std::vector<std::string>& argv) {
  harness::RunConfig cfg = load_config(args);
  harness::RunManifest manifest(cfg, cfg.seed, argv);
  std::vector<harness::MethodRun> runs;
  for (const auto& path : csvs) {
    harness::MethodRun run;
    run.result = harness::EvalResult::load_csv(path);
    run.name = run.result.policy_name;
    runs.push_back(std::move(run));
  }
  harness::emit_report(runs, cfg.out_dir);
  manifest.add_output(cfg.out_dir + "/completion_by_dimension.csv");
  manifest.finalize(cfg.out_dir);
  std::cout << "report written to " << cfg.out_dir << "\n";
  return 0;
}

int run_grad_check(const CommonArgs& args) {
  harness::RunConfig cfg = load_config(args);
  Rng rng(cfg.seed + 17);
  int failures = 0;

  auto check = [&](const std::string& name, auto&& setup) {
    const auto report = setup();
    const bool ok = report.passed(1e-4);
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << name
              << " max rel err " << report.max_rel_err << " (worst "
              << report.worst_param << ")\n";
    if (!ok) ++failures;
  };

  check("privileged actor", [&] {
    nn::MlpSpec spec;
    spec.input_dim = sim::kPrivDim;
    spec.hidden = cfg.ppo.actor_hidden;
    spec.output_dim = sim::kActionDim;
    spec.head = nn::Head::tanh_bounded;
    nn::Mlp net("actor", spec, rng);
    MatXd x(4, spec.input_dim), proj(4, spec.output_dim);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (int i = 0; i < proj.size(); ++i) proj.data()[i] = rng.normal();
    auto loss = [&] { return net.forward(x).cwiseProduct(proj).sum(); };
    auto params = net.params();
    nn::zero_grads(params);
    nn::Mlp::Cache cache;
    net.forward(x, cache);
    net.backward(cache, proj);
    return nn::grad_check(params, loss, rng, 150);
  });

  check("critic with layer norm", [&] {
    nn::MlpSpec spec;
    spec.input_dim = sim::kPrivDim + sim::kActionDim;
    spec.hidden = cfg.stage2.critic_hidden;
    spec.output_dim = 1;
    spec.layer_norm = true;
    nn::Mlp net("critic", spec, rng);
    MatXd x(4, spec.input_dim), proj(4, 1);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (int i = 0; i < proj.size(); ++i) proj.data()[i] = rng.normal();
    auto loss = [&] { return net.forward(x).cwiseProduct(proj).sum(); };
    auto params = net.params();
    nn::zero_grads(params);
    nn::Mlp::Cache cache;
    net.forward(x, cache);
    net.backward(cache, proj);
    return nn::grad_check(params, loss, rng, 150);
  });

  check("visual actor (conv + gru + head)", [&] {
    nn::VisualSpec vs = cfg.stage2.visual;
    offpolicy::ActionBounds bounds{VecXd::Constant(sim::kActionDim, -1.0),
                                   VecXd::Constant(sim::kActionDim, 1.0)};
    offpolicy::VisualPolicy actor(vs, bounds, rng);
    const int B = 2, T = 6;
    offpolicy::WindowBatch batch;
    batch.batch = B;
    batch.steps = T;
    batch.proprio = MatXd::Zero(B * T, vs.proprio_dim);
    for (int i = 0; i < batch.proprio.size(); ++i)
      batch.proprio.data()[i] = rng.normal();
    batch.frames = MatXd::Zero(2 * (T / vs.depth_period + 1), vs.conv.rays);
    for (int i = 0; i < batch.frames.size(); ++i)
      batch.frames.data()[i] = rng.uniform();
    batch.frame_of.assign(B * T, 0);
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < T; ++t)
        batch.frame_of[b * T + t] =
            b * (T / vs.depth_period + 1) + t / vs.depth_period;
    batch.h0 = MatXd::Zero(B, vs.gru_hidden);
    MatXd proj(B * T, sim::kActionDim);
    for (int i = 0; i < proj.size(); ++i) proj.data()[i] = rng.normal();
    auto loss = [&] {
      offpolicy::VisualPolicy::Cache cache;
      return actor.forward(batch, cache).cwiseProduct(proj).sum();
    };
    auto params = actor.params();
    nn::zero_grads(params);
    offpolicy::VisualPolicy::Cache cache;
    actor.forward(batch, cache);
    actor.backward(cache, proj);
    return nn::grad_check(params, loss, rng, 150);
  });

  std::cout << (failures == 0 ? "all gradient checks passed\n"
                              : "gradient checks FAILED\n");
  return failures == 0 ? 0 : 1;
}

int run_sim_check(const CommonArgs& args) {
  harness::RunConfig cfg = load_config(args);
  int failures = 0;
  auto require = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << what << "\n";
    if (!ok) ++failures;
  };

  // ballistic oracle
  {
    sim::TerrainSpec t;
    Rng rng(0);
    t = sim::make_terrain(sim::TerrainKind::flat, 0, rng);
    sim::RobotState s;
    s.base_z = 1.0;
    s.q = cfg.robot.default_pose;
    const auto r = sim::step(s, Vec4d::Zero(), t, cfg.robot, {8.0, 0.1});
    require(std::abs(r.state.base_vz + cfg.robot.gravity * 0.02) < 1e-9,
            "ballistic free fall matches closed form");
  }
  // stance
  {
    Rng rng(7);
    sim::TerrainSpec t = sim::make_terrain(sim::TerrainKind::flat, 0, rng);
    sim::RobotState s = sim::reset_state(t, cfg.robot, rng, 0.0);
    for (int i = 0; i < 100; ++i)
      s = sim::step(s, Vec4d::Zero(), t, cfg.robot, {cfg.env.kp, 0.2}).state;
    require(s.foot_contact[0] && s.foot_contact[1] && std::abs(s.pitch) < 0.2,
            "static stance settles upright");
  }
  // raycast vs analytic
  {
    Rng rng(0);
    sim::TerrainSpec t = sim::make_terrain(sim::TerrainKind::flat, 0, rng);
    const double r = sim::cast_ray(t, Vec2d(0.0, 0.3),
                                   Vec2d(std::sqrt(0.5), -std::sqrt(0.5)), 5.0);
    require(std::abs(r - 0.3 * std::sqrt(2.0)) < 1e-9,
            "diagonal raycast hits the plane analytically");
  }
  // terrain round trip
  {
    Rng rng(3);
    const auto t = sim::make_terrain(sim::TerrainKind::crawl, 4, rng);
    const std::string path = "/tmp/parkour_simcheck_terrain.txt";
    t.save_text(path);
    const auto u = sim::TerrainSpec::load_text(path);
    require(u.height == t.height && u.ceiling == t.ceiling,
            "terrain text format round-trips");
    fs::remove(path);
  }
  // determinism
  {
    sim::Env a(cfg.robot, cfg.env, 5), b(cfg.robot, cfg.env, 5);
    a.reset(sim::TerrainKind::step, 2);
    b.reset(sim::TerrainKind::step, 2);
    bool same = true;
    for (int i = 0; i < 200; ++i) {
      a.step(Vec4d::Constant(0.1), {cfg.env.kp, 0.2});
      b.step(Vec4d::Constant(0.1), {cfg.env.kp, 0.2});
      same = same && a.state().base_x == b.state().base_x &&
             a.state().q == b.state().q;
    }
    require(same, "identical seeds give bitwise identical trajectories");
  }
  std::cout << (failures == 0 ? "all simulator checks passed\n"
                              : "simulator checks FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planar legged parkour lab: constrained RL pipeline"};
  app.require_subcommand(1);
  const auto argv_vec = argv_vector(argc, argv);

  CommonArgs args;
  std::string ckpt, teacher, dpriv, method, ablation, name, bc_init;
  std::vector<std::string> csvs;
  bool dump_config = false;

  auto* ts1 = app.add_subcommand("train-stage1", "train the privileged policy");
  add_common(ts1, args);

  auto* col = app.add_subcommand("collect-priv",
                                 "generate privileged experience");
  add_common(col, args);
  col->add_option("--ckpt", ckpt, "stage-1 checkpoint")->required();

  auto* ts2 = app.add_subcommand("train-stage2", "train the visual policy");
  add_common(ts2, args);
  ts2->add_option("--dpriv", dpriv, "privileged experience file");

  auto* bas = app.add_subcommand("train-baseline",
                                 "supervised distillation baselines");
  add_common(bas, args);
  bas->add_option("--method", method, "bc | dagger | priv-recon")->required();
  bas->add_option("--dpriv", dpriv, "privileged experience file")->required();
  bas->add_option("--teacher", teacher, "stage-1 checkpoint");
  bas->add_option("--bc-init", bc_init, "behavior-cloned warm start");

  auto* abl = app.add_subcommand("ablate", "stage-2 ablations");
  add_common(abl, args);
  abl->add_option("--which", ablation,
                  "from-scratch | no-priv-critic | no-cat")
      ->required();
  abl->add_option("--dpriv", dpriv, "privileged experience file");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(ev, args);
  ev->add_option("--ckpt", ckpt, "policy checkpoint")->required();
  ev->add_option("--teacher", teacher, "stage-1 checkpoint (recon policies)");
  ev->add_option("--name", name, "method name in the result csv");

  auto* rep = app.add_subcommand("report", "comparison tables and plots");
  add_common(rep, args);
  rep->add_option("--results", csvs, "evaluation csv files")->required();

  auto* gc = app.add_subcommand("grad-check", "verify analytic gradients");
  add_common(gc, args);

  auto* sc = app.add_subcommand("sim-check", "verify simulator oracles");
  add_common(sc, args);
  sc->add_flag("--dump-config", dump_config,
               "print the default configuration and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ts1->parsed()) return run_train_stage1(args, argv_vec);
    if (col->parsed()) return run_collect(args, ckpt, argv_vec);
    if (ts2->parsed()) return run_train_stage2(args, dpriv, "", argv_vec);
    if (bas->parsed())
      return run_train_baseline(args, method, dpriv, teacher, bc_init, argv_vec);
    if (abl->parsed()) return run_train_stage2(args, dpriv, ablation, argv_vec);
    if (ev->parsed()) return run_eval(args, ckpt, teacher, name, argv_vec);
    if (rep->parsed()) return run_report(args, csvs, argv_vec);
    if (gc->parsed()) return run_grad_check(args);
    if (sc->parsed()) {
      if (dump_config) {
        harness::write_default_config(std::cout);
        return 0;
      }
      return run_sim_check(args);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
