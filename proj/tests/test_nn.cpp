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

#include <cstdio>
#include <filesystem>

#include "parkour/nn/adam.hpp"
#include "parkour/nn/checkpoint.hpp"
#include "parkour/nn/gradcheck.hpp"
#include "parkour/nn/nets.hpp"
#include "parkour/nn/norm.hpp"

using namespace parkour;
using namespace parkour::nn;

namespace {

MatXd random_mat(int r, int c, Rng& rng, double scale = 1.0) {
  MatXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("dense layer with identity weights and elu passes positive input through") {
  Rng rng(1);
  Dense d;
  d.init("d", 3, 3, rng);
  d.W.w = MatXd::Identity(3, 3);
  d.b.w.setZero();
  MatXd x(1, 3);
  x << 0.5, 1.25, 2.0;
  const MatXd y = elu(d.forward(x));
  CHECK(y(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y(0, 1) == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(y(0, 2) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gru with update gate saturated to carry keeps the hidden state") {
  Rng rng(2);
  GruCell cell;
  cell.init("g", 4, 6, rng);
  // push z -> 1 through the update-gate bias: h' = z*h = h
  cell.b_ih.w.block(6, 0, 6, 1).setConstant(50.0);
  GruCell::Cache cache;
  MatXd h = random_mat(2, 6, rng);
  const MatXd h0 = h;
  for (int t = 0; t < 5; ++t) {
    const MatXd x = random_mat(2, 4, rng);
    h = cell.forward(x, h, cache);
  }
  CHECK((h - h0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("layer norm output has zero mean and unit variance before affine") {
  Rng rng(3);
  LayerNorm ln;
  ln.init("ln", 64);
  LayerNorm::Cache cache;
  const MatXd x = random_mat(8, 64, rng, 3.0);
  const MatXd y = ln.forward(x, cache);  // gain=1, bias=0 at init
  for (int r = 0; r < y.rows(); ++r) {
    const double mean = y.row(r).mean();
    const double var = (y.row(r).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
}

TEST_CASE("finite differences confirm dense/conv/pool gradients") {
  Rng rng(4);
  ConvSpec cs;
  cs.rays = 32;
  cs.channels = {4, 8, 8};
  cs.latent_dim = 16;
  ConvEncoder enc("enc", cs, rng);
  const MatXd x = random_mat(3, 32, rng);
  const MatXd proj = random_mat(3, 16, rng);

  auto loss = [&] {
    ConvEncoder::Cache c;
    return (enc.forward(x, c).cwiseProduct(proj)).sum();
  };
  ParamList params = enc.params();
  zero_grads(params);
  ConvEncoder::Cache cache;
  enc.forward(x, cache);
  enc.backward(cache, proj);
  const auto report = grad_check(params, loss, rng, 120);
  INFO("worst: ", report.worst_param, " rel=", report.max_rel_err);
  CHECK(report.passed(1e-4));
}

TEST_CASE("finite differences confirm gru gradients through time") {
  Rng rng(5);
  GruCell cell;
  cell.init("g", 5, 8, rng);
  const int T = 4, B = 2;
  std::vector<MatXd> xs;
  for (int t = 0; t < T; ++t) xs.push_back(random_mat(B, 5, rng));
  const MatXd proj = random_mat(B, 8, rng);

  auto run = [&](bool with_grad) {
    std::vector<GruCell::Cache> caches(T);
    MatXd h = MatXd::Zero(B, 8);
    for (int t = 0; t < T; ++t) h = cell.forward(xs[t], h, caches[t]);
    const double loss = h.cwiseProduct(proj).sum();
    if (with_grad) {
      MatXd dh = proj;
      for (int t = T - 1; t >= 0; --t) dh = cell.backward(caches[t], dh).second;
    }
    return loss;
  };
  ParamList params;
  cell.collect(params);
  zero_grads(params);
  run(true);
  const auto report = grad_check(params, [&] { return run(false); }, rng, 150);
  INFO("worst: ", report.worst_param, " rel=", report.max_rel_err);
  CHECK(report.passed(1e-4));
}

TEST_CASE("finite differences confirm a random three-layer mlp with layer norm") {
  Rng rng(6);
  MlpSpec spec;
  spec.input_dim = 7;
  spec.hidden = {16, 12, 8};
  spec.output_dim = 3;
  spec.layer_norm = true;
  Mlp net("mlp", spec, rng);
  const MatXd x = random_mat(4, 7, rng);
  const MatXd proj = random_mat(4, 3, rng);

  auto loss = [&] { return net.forward(x).cwiseProduct(proj).sum(); };
  ParamList params = net.params();
  zero_grads(params);
  Mlp::Cache cache;
  net.forward(x, cache);
  net.backward(cache, proj);
  const auto report = grad_check(params, loss, rng, 200);
  INFO("worst: ", report.worst_param, " rel=", report.max_rel_err);
  CHECK(report.passed(1e-4));
}

TEST_CASE("dense backward input gradients match finite differences") {
  Rng rng(7);
  MlpSpec spec;
  spec.input_dim = 6;
  spec.hidden = {10};
  spec.output_dim = 2;
  spec.head = Head::tanh_bounded;
  Mlp net("m", spec, rng);
  MatXd x = random_mat(2, 6, rng);
  const MatXd proj = random_mat(2, 2, rng);

  Mlp::Cache cache;
  net.forward(x, cache);
  ParamList params = net.params();
  zero_grads(params);
  const MatXd dx = net.backward(cache, proj);

  const double h = 1e-6;
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) {
      const double orig = x(r, c);
      x(r, c) = orig + h;
      const double lp = net.forward(x).cwiseProduct(proj).sum();
      x(r, c) = orig - h;
      const double lm = net.forward(x).cwiseProduct(proj).sum();
      x(r, c) = orig;
      const double fd = (lp - lm) / (2 * h);
      CHECK(std::abs(fd - dx(r, c)) < 1e-5 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("visual trunk gradients pass finite differences with latent replication") {
  Rng rng(8);
  VisualSpec vs;
  vs.conv.rays = 16;
  vs.conv.channels = {4, 4};
  vs.conv.latent_dim = 8;
  vs.proprio_dim = 5;
  vs.gru_hidden = 10;
  VisualTrunk trunk("v", vs, rng);

  const int B = 2, T = 6;
  const MatXd proprio = random_mat(B * T, 5, rng);
  const MatXd frames = random_mat(3, 16, rng);  // steps 0 and 5 of b0, 0 of b1
  std::vector<int> frame_of = {0, 0, 0, 0, 0, 1, 2, 2, 2, 2, 2, 2};
  const MatXd h0 = MatXd::Zero(B, 10);
  const MatXd proj = random_mat(B * T, 10, rng);

  auto loss = [&] {
    VisualTrunk::Cache c;
    auto [feat, hT] = trunk.forward(proprio, frames, frame_of, B, T, h0, c);
    return feat.cwiseProduct(proj).sum();
  };
  ParamList params = trunk.params();
  zero_grads(params);
  VisualTrunk::Cache cache;
  trunk.forward(proprio, frames, frame_of, B, T, h0, cache);
  trunk.backward(cache, proj);
  const auto report = grad_check(params, loss, rng, 150);
  INFO("worst: ", report.worst_param, " rel=", report.max_rel_err);
  CHECK(report.passed(1e-4));
}

TEST_CASE("tanh head output is strictly inside bounds after rescaling") {
  Rng rng(9);
  MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden = {8};
  spec.output_dim = 4;
  spec.head = Head::tanh_bounded;
  Mlp net("m", spec, rng);
  VecXd lo(4), hi(4);
  lo << -0.8, -0.8, -0.5, -0.5;
  hi << 0.8, 0.8, 0.5, 0.9;
  for (int trial = 0; trial < 50; ++trial) {
    const MatXd x = random_mat(1, 4, rng, 10.0);
    const VecXd y = net.forward(x).row(0).transpose();
    CHECK(y.cwiseAbs().maxCoeff() < 1.0);
    const VecXd a = rescale_action(y, lo, hi);
    for (int i = 0; i < 4; ++i) {
      CHECK(a[i] > lo[i] - 1e-12);
      CHECK(a[i] < hi[i] + 1e-12);
    }
  }
}

TEST_CASE("adam leaves parameters untouched on zero gradients") {
  Rng rng(10);
  Dense d;
  d.init("d", 3, 3, rng);
  const MatXd before = d.W.w;
  ParamList params;
  d.collect(params);
  zero_grads(params);
  Adam opt(AdamConfig{.lr = 1e-2});
  opt.step(params);
  CHECK((d.W.w - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam first step equals -lr*g/(|g|+eps) with bias correction") {
  Rng rng(11);
  Dense d;
  d.init("d", 1, 2, rng);
  const MatXd w0 = d.W.w;
  d.W.g.setConstant(0.0);
  d.W.g(0, 0) = 0.3;
  d.W.g(1, 0) = -1.7;
  d.b.g.setZero();
  AdamConfig cfg;
  cfg.lr = 1e-3;
  Adam opt(cfg);
  ParamList params;
  d.collect(params);
  opt.step(params);
  for (int i = 0; i < 2; ++i) {
    const double g = i == 0 ? 0.3 : -1.7;
    const double expect = w0(i, 0) - cfg.lr * g / (std::abs(g) + cfg.eps);
    CHECK(d.W.w(i, 0) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("adam update magnitude approaches lr under a constant gradient") {
  Rng rng(12);
  Dense d;
  d.init("d", 1, 1, rng);
  AdamConfig cfg;
  cfg.lr = 1e-3;
  Adam opt(cfg);
  ParamList params;
  d.collect(params);
  double prev = d.W.w(0, 0);
  double step_size = 0.0;
  for (int t = 0; t < 2000; ++t) {
    d.W.g.setConstant(0.42);
    d.b.g.setZero();
    opt.step(params);
    step_size = std::abs(d.W.w(0, 0) - prev);
    prev = d.W.w(0, 0);
  }
  CHECK(step_size == doctest::Approx(cfg.lr).epsilon(1e-3));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  Rng rng(13);
  MlpSpec spec;
  spec.input_dim = 5;
  spec.hidden = {12, 6};
  spec.output_dim = 4;
  spec.head = Head::tanh_bounded;
  GaussianPolicy pol("pi", spec, -1.0, rng);

  PolicyCheckpoint ckpt;
  ckpt.kind = NetKind::priv_actor;
  ckpt.mlp_spec = spec;
  ckpt.act_lo = VecXd::Constant(4, -0.8);
  ckpt.act_hi = VecXd::Constant(4, 0.8);
  RunningNorm norm(5);
  norm.update(random_mat(100, 5, rng));
  ckpt.set_norm(norm);
  ckpt.capture(pol.params());

  const std::string path = "/tmp/parkour_test_ckpt.bin";
  ckpt.save(path);
  const PolicyCheckpoint loaded = PolicyCheckpoint::load(path);

  REQUIRE(loaded.tensors.size() == ckpt.tensors.size());
  for (size_t i = 0; i < loaded.tensors.size(); ++i) {
    CHECK(loaded.tensors[i].first == ckpt.tensors[i].first);
    CHECK(loaded.tensors[i].second == ckpt.tensors[i].second);  // bitwise
  }
  CHECK(loaded.norm_mean == ckpt.norm_mean);
  CHECK(loaded.norm_m2 == ckpt.norm_m2);
  CHECK(loaded.act_lo == ckpt.act_lo);
  CHECK(loaded.mlp_spec == spec);

  GaussianPolicy pol2("pi", spec, 0.0, rng);
  loaded.restore(pol2.params());
  const MatXd x = random_mat(3, 5, rng);
  CHECK(pol.mean(x) == pol2.mean(x));
  std::filesystem::remove(path);
}

TEST_CASE("float32 inference stays close to the double path") {
  Rng rng(14);
  MlpSpec spec;
  spec.input_dim = 8;
  spec.hidden = {16, 8};
  spec.output_dim = 4;
  spec.head = Head::tanh_bounded;
  Mlp net("m", spec, rng);
  MlpF32 f32(net);
  for (int i = 0; i < 20; ++i) {
    const VecXd x = random_mat(1, 8, rng).row(0).transpose();
    const VecXd y64 = net.forward(x.transpose()).row(0).transpose();
    const VecXd y32 = f32.forward64(x);
    CHECK((y64 - y32).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("forward pass is deterministic given parameters and inputs") {
  Rng rng(15);
  MlpSpec spec;
  spec.input_dim = 6;
  spec.hidden = {32, 16};
  spec.output_dim = 2;
  Mlp net("m", spec, rng);
  const MatXd x = random_mat(5, 6, rng);
  CHECK(net.forward(x) == net.forward(x));
}

TEST_CASE("gaussian policy log probs are recomputable from stored actions") {
  Rng rng(16);
  MlpSpec spec;
  spec.input_dim = 3;
  spec.hidden = {8};
  spec.output_dim = 4;
  spec.head = Head::tanh_bounded;
  GaussianPolicy pol("pi", spec, -1.0, rng);
  const MatXd x = random_mat(1, 3, rng);
  const VecXd mean = pol.mean(x).row(0).transpose();
  for (int i = 0; i < 10; ++i) {
    const auto s = pol.sample(mean, rng);
    CHECK(pol.log_prob(mean, s.action) == doctest::Approx(s.log_prob).epsilon(1e-15));
  }
}

}  // TEST_SUITE
