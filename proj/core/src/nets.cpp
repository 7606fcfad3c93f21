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

#include "parkour/nn/nets.hpp"

#include <cmath>

namespace parkour::nn {

Mlp::Mlp(const std::string& id, const MlpSpec& spec, Rng& rng) : spec_(spec) {
  int in = spec.input_dim;
  layers_.resize(spec.hidden.size() + 1);
  if (spec.layer_norm) norms_.resize(spec.hidden.size());
  for (size_t i = 0; i < spec.hidden.size(); ++i) {
    layers_[i].init(id + ".fc" + std::to_string(i), in, spec.hidden[i], rng);
    if (spec.layer_norm)
      norms_[i].init(id + ".ln" + std::to_string(i), spec.hidden[i]);
    in = spec.hidden[i];
  }
  layers_.back().init(id + ".out", in, spec.output_dim, rng);
}

MatXd Mlp::forward(const MatXd& x, Cache& cache) const {
  const size_t n_hidden = spec_.hidden.size();
  cache.pre.resize(n_hidden);
  cache.post.resize(n_hidden + 1);
  if (spec_.layer_norm) cache.ln.resize(n_hidden);
  MatXd h = x;
  for (size_t i = 0; i < n_hidden; ++i) {
    cache.post[i] = h;
    MatXd z = layers_[i].forward(h);
    if (spec_.layer_norm) z = norms_[i].forward(z, cache.ln[i]);
    cache.pre[i] = z;
    h = elu(z);
  }
  cache.post[n_hidden] = h;
  MatXd out = layers_.back().forward(h);
  if (spec_.head == Head::tanh_bounded) {
    cache.head_out = tanh_fwd(out);
    return cache.head_out;
  }
  return out;
}

MatXd Mlp::forward(const MatXd& x) const {
  Cache scratch;
  return forward(x, scratch);
}

MatXd Mlp::backward(const Cache& cache, const MatXd& dy) {
  const size_t n_hidden = spec_.hidden.size();
  MatXd grad = dy;
  if (spec_.head == Head::tanh_bounded)
    grad = tanh_backward(cache.head_out, grad);
  grad = layers_.back().backward(cache.post[n_hidden], grad);
  for (size_t i = n_hidden; i-- > 0;) {
    grad = elu_backward(cache.pre[i], grad);
    if (spec_.layer_norm) grad = norms_[i].backward(cache.ln[i], grad);
    grad = layers_[i].backward(cache.post[i], grad);
  }
  return grad;
}

ParamList Mlp::params() {
  ParamList out;
  for (size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect(out);
    if (spec_.layer_norm && i < norms_.size()) norms_[i].collect(out);
  }
  return out;
}

// ---------------------------------------------------------------------------

ConvEncoder::ConvEncoder(const std::string& id, const ConvSpec& spec, Rng& rng)
    : spec_(spec) {
  int ch = 1;
  int len = spec.rays;
  convs_.resize(spec.channels.size());
  for (size_t i = 0; i < spec.channels.size(); ++i) {
    convs_[i].init(id + ".conv" + std::to_string(i), ch, spec.channels[i],
                   spec.kernel, rng);
    lens_.push_back(len);
    ch = spec.channels[i];
    len /= 2;
  }
  proj_.init(id + ".proj", ch * len, spec.latent_dim, rng);
}

int ConvEncoder::flat_dim() const {
  int len = spec_.rays >> spec_.channels.size();
  return spec_.channels.back() * len;
}

MatXd ConvEncoder::forward(const MatXd& scans, Cache& cache) const {
  const size_t nb = convs_.size();
  cache.inputs.resize(nb);
  cache.pre.resize(nb);
  cache.act.resize(nb);
  cache.pool.resize(nb);
  MatXd h = scans;
  for (size_t i = 0; i < nb; ++i) {
    cache.inputs[i] = h;
    cache.pre[i] = convs_[i].forward(h, lens_[i]);
    cache.act[i] = leaky_relu(cache.pre[i]);
    h = MaxPool1d::forward(cache.act[i], convs_[i].c_out, lens_[i],
                           cache.pool[i]);
  }
  cache.flat = h;
  return proj_.forward(h);
}

MatXd ConvEncoder::backward(const Cache& cache, const MatXd& dlatent) {
  MatXd grad = proj_.backward(cache.flat, dlatent);
  for (size_t i = convs_.size(); i-- > 0;) {
    grad = MaxPool1d::backward(grad, convs_[i].c_out, lens_[i], cache.pool[i]);
    grad = leaky_relu_backward(cache.pre[i], grad);
    grad = convs_[i].backward(cache.inputs[i], lens_[i], grad);
  }
  return grad;
}

ParamList ConvEncoder::params() {
  ParamList out;
  for (auto& c : convs_) c.collect(out);
  proj_.collect(out);
  return out;
}

// ---------------------------------------------------------------------------

VisualTrunk::VisualTrunk(const std::string& id, const VisualSpec& spec, Rng& rng)
    : spec_(spec) {
  encoder = ConvEncoder(id + ".enc", spec.conv, rng);
  gru.init(id + ".gru", gru_input_dim(), spec.gru_hidden, rng);
}

std::pair<MatXd, MatXd> VisualTrunk::forward(const MatXd& proprio,
                                             const MatXd& frames,
                                             const std::vector<int>& frame_of,
                                             int batch, int steps,
                                             const MatXd& h0,
                                             Cache& cache) const {
  const int H = spec_.gru_hidden;
  const int L = spec_.conv.latent_dim;
  cache.batch = batch;
  cache.steps = steps;
  cache.frame_of = frame_of;
  cache.latents = frames.rows() > 0 ? encoder.forward(frames, cache.conv)
                                    : MatXd(0, L);
  cache.gru.resize(steps);
  cache.gru_in.resize(steps);

  MatXd h = h0;
  MatXd features(batch * steps, H);
  for (int t = 0; t < steps; ++t) {
    MatXd in(batch, gru_input_dim());
    for (int b = 0; b < batch; ++b) {
      const int row = b * steps + t;
      in.block(b, 0, 1, spec_.proprio_dim) =
          proprio.block(row, 0, 1, spec_.proprio_dim);
      const int f = frame_of[row];
      if (f >= 0)
        in.block(b, spec_.proprio_dim, 1, L) = cache.latents.row(f);
      else
        in.block(b, spec_.proprio_dim, 1, L).setZero();
    }
    cache.gru_in[t] = in;
    h = gru.forward(in, h, cache.gru[t]);
    for (int b = 0; b < batch; ++b) features.row(b * steps + t) = h.row(b);
  }
  return {std::move(features), std::move(h)};
}

void VisualTrunk::backward(const Cache& cache, const MatXd& dfeat) {
  const int batch = cache.batch;
  const int steps = cache.steps;
  const int L = spec_.conv.latent_dim;
  MatXd dlatents = MatXd::Zero(cache.latents.rows(), L);
  MatXd dh = MatXd::Zero(batch, spec_.gru_hidden);
  for (int t = steps - 1; t >= 0; --t) {
    for (int b = 0; b < batch; ++b) dh.row(b) += dfeat.row(b * steps + t);
    auto [dx, dh_prev] = gru.backward(cache.gru[t], dh);
    for (int b = 0; b < batch; ++b) {
      const int f = cache.frame_of[b * steps + t];
      if (f >= 0) dlatents.row(f) += dx.block(b, spec_.proprio_dim, 1, L);
    }
    dh = std::move(dh_prev);
  }
  if (dlatents.rows() > 0) encoder.backward(cache.conv, dlatents);
}

ParamList VisualTrunk::params() {
  ParamList out = encoder.params();
  gru.collect(out);
  return out;
}

// ---------------------------------------------------------------------------

GaussianPolicy::GaussianPolicy(const std::string& id, const MlpSpec& spec,
                               double init_log_std, Rng& rng)
    : mlp(id, spec, rng) {
  log_std.init(id + ".log_std", spec.output_dim, 1);
  log_std.w.setConstant(init_log_std);
}

GaussianSample GaussianPolicy::sample(const VecXd& mean_row, Rng& rng) const {
  const int n = static_cast<int>(mean_row.size());
  GaussianSample s;
  s.action.resize(n);
  for (int i = 0; i < n; ++i) {
    const double sd = std::exp(log_std.w(i, 0));
    s.action[i] = mean_row[i] + sd * rng.normal();
  }
  s.log_prob = log_prob(mean_row, s.action);
  return s;
}

double GaussianPolicy::log_prob(const VecXd& mean_row,
                                const VecXd& action) const {
  double lp = 0.0;
  for (int i = 0; i < mean_row.size(); ++i) {
    const double ls = log_std.w(i, 0);
    const double sd = std::exp(ls);
    const double z = (action[i] - mean_row[i]) / sd;
    lp += -0.5 * z * z - ls - 0.5 * std::log(2.0 * M_PI);
  }
  return lp;
}

MatXd GaussianPolicy::log_prob_batch(const MatXd& means,
                                     const MatXd& actions) const {
  const int B = static_cast<int>(means.rows());
  MatXd lp(B, 1);
  for (int r = 0; r < B; ++r)
    lp(r, 0) = log_prob(means.row(r).transpose(), actions.row(r).transpose());
  return lp;
}

double GaussianPolicy::entropy() const {
  double h = 0.0;
  for (int i = 0; i < log_std.w.rows(); ++i)
    h += log_std.w(i, 0) + 0.5 * (1.0 + std::log(2.0 * M_PI));
  return h;
}

ParamList GaussianPolicy::params() {
  ParamList out = mlp.params();
  out.push_back(&log_std);
  return out;
}

}  // namespace parkour::nn
