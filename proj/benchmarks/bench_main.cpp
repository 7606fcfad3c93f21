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

#include <benchmark/benchmark.h>

#include "parkour/nn/nets.hpp"
#include "parkour/sim/env.hpp"
#include "parkour/task/cat.hpp"

using namespace parkour;

namespace {

void BM_PhysicsStep(benchmark::State& state) {
  sim::RobotModel model;
  sim::EnvConfig cfg;
  sim::Env env(model, cfg, 3);
  env.reset(sim::TerrainKind::step, 4);
  const sim::PdGains gains{cfg.kp, 0.2};
  Rng rng(1);
  Vec4d action;
  for (auto _ : state) {
    for (int i = 0; i < 4; ++i) action[i] = rng.uniform(-0.5, 0.5);
    benchmark::DoNotOptimize(env.step(action, gains));
    if (env.fallen() || env.timed_out()) env.reset();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhysicsStep);

void BM_DepthRender(benchmark::State& state) {
  sim::RobotModel model;
  Rng rng(5);
  const auto terrain = sim::make_terrain(sim::TerrainKind::hurdle, 6, rng);
  sim::RobotState s = sim::reset_state(terrain, model, rng, 0.0);
  const sim::DepthCamera cam;
  for (auto _ : state) benchmark::DoNotOptimize(sim::render_depth(s, terrain, cam));
  state.SetItemsProcessed(state.iterations() * cam.rays);
}
BENCHMARK(BM_DepthRender);

void BM_ActorForward(benchmark::State& state) {
  Rng rng(2);
  nn::MlpSpec spec;
  spec.input_dim = sim::kPrivDim;
  spec.hidden = {512, 256, 128};
  spec.output_dim = sim::kActionDim;
  spec.head = nn::Head::tanh_bounded;
  nn::Mlp net("actor", spec, rng);
  MatXd obs(static_cast<int>(state.range(0)), sim::kPrivDim);
  for (int i = 0; i < obs.size(); ++i) obs.data()[i] = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(obs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ActorForward)->Arg(1)->Arg(64)->Arg(256);

void BM_GruUnroll(benchmark::State& state) {
  Rng rng(3);
  nn::GruCell cell;
  cell.init("gru", 81, 256, rng);
  const int T = 25, B = 8;
  std::vector<MatXd> xs;
  for (int t = 0; t < T; ++t) {
    MatXd x(B, 81);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    xs.push_back(std::move(x));
  }
  for (auto _ : state) {
    MatXd h = MatXd::Zero(B, 256);
    nn::GruCell::Cache cache;
    for (int t = 0; t < T; ++t) h = cell.forward(xs[t], h, cache);
    benchmark::DoNotOptimize(h);
  }
  state.SetItemsProcessed(state.iterations() * T * B);
}
BENCHMARK(BM_GruUnroll);

void BM_TerminationProb(benchmark::State& state) {
  Rng rng(4);
  task::CatState cat;
  const auto& specs = task::constraint_specs();
  task::ConstraintReport rep;
  rep.violations = VecXd::Zero(task::kNumConstraints);
  rep.active.assign(task::kNumConstraints, true);
  for (int i = 0; i < task::kNumConstraints; ++i)
    if (rng.bernoulli(0.3)) rep.violations[i] = rng.uniform(0.0, 2.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(task::termination_prob(rep, cat, specs));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TerminationProb);

}  // namespace

BENCHMARK_MAIN();
