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

#include "parkour/nn/checkpoint.hpp"

#include "parkour/io.hpp"

namespace parkour::nn {

namespace {

constexpr uint64_t kMagic = 0x313054504b434b50ULL;  // "PKCKPT01"

void write_mlp_spec(io::BinWriter& w, const MlpSpec& s) {
  w.u32(static_cast<uint32_t>(s.input_dim));
  w.u32(static_cast<uint32_t>(s.hidden.size()));
  for (int h : s.hidden) w.u32(static_cast<uint32_t>(h));
  w.u32(static_cast<uint32_t>(s.output_dim));
  w.u8(s.layer_norm ? 1 : 0);
  w.u8(s.head == Head::tanh_bounded ? 1 : 0);
}

MlpSpec read_mlp_spec(io::BinReader& r) {
  MlpSpec s;
  s.input_dim = static_cast<int>(r.u32());
  const uint32_t n = r.u32();
  s.hidden.resize(n);
  for (auto& h : s.hidden) h = static_cast<int>(r.u32());
  s.output_dim = static_cast<int>(r.u32());
  s.layer_norm = r.u8() != 0;
  s.head = r.u8() != 0 ? Head::tanh_bounded : Head::linear;
  return s;
}

void write_visual_spec(io::BinWriter& w, const VisualSpec& s) {
  w.u32(static_cast<uint32_t>(s.conv.rays));
  w.u32(static_cast<uint32_t>(s.conv.channels.size()));
  for (int c : s.conv.channels) w.u32(static_cast<uint32_t>(c));
  w.u32(static_cast<uint32_t>(s.conv.kernel));
  w.u32(static_cast<uint32_t>(s.conv.latent_dim));
  w.u32(static_cast<uint32_t>(s.proprio_dim));
  w.u32(static_cast<uint32_t>(s.gru_hidden));
  write_mlp_spec(w, s.mlp);
  w.u32(static_cast<uint32_t>(s.depth_period));
}

VisualSpec read_visual_spec(io::BinReader& r) {
  VisualSpec s;
  s.conv.rays = static_cast<int>(r.u32());
  const uint32_t n = r.u32();
  s.conv.channels.resize(n);
  for (auto& c : s.conv.channels) c = static_cast<int>(r.u32());
  s.conv.kernel = static_cast<int>(r.u32());
  s.conv.latent_dim = static_cast<int>(r.u32());
  s.proprio_dim = static_cast<int>(r.u32());
  s.gru_hidden = static_cast<int>(r.u32());
  s.mlp = read_mlp_spec(r);
  s.depth_period = static_cast<int>(r.u32());
  return s;
}

}  // namespace

void PolicyCheckpoint::save(const std::string& path) const {
  io::BinWriter w(path);
  w.u64(kMagic);
  w.u32(1);  // format version
  w.u32(static_cast<uint32_t>(kind));
  write_mlp_spec(w, mlp_spec);
  w.u8(has_visual ? 1 : 0);
  if (has_visual) write_visual_spec(w, visual_spec);
  w.vec(act_lo);
  w.vec(act_hi);
  w.vec(norm_mean);
  w.vec(norm_m2);
  w.i64(norm_count);
  w.u32(static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    w.str(name);
    w.mat(m);
  }
  if (!w.good()) throw ConfigError("checkpoint write failed: " + path);
}

PolicyCheckpoint PolicyCheckpoint::load(const std::string& path) {
  io::BinReader r(path);
  if (r.u64() != kMagic) throw ConfigError("not a policy checkpoint: " + path);
  const uint32_t version = r.u32();
  if (version != 1)
    throw ConfigError("unsupported checkpoint version " +
                      std::to_string(version));
  PolicyCheckpoint c;
  c.kind = static_cast<NetKind>(r.u32());
  c.mlp_spec = read_mlp_spec(r);
  c.has_visual = r.u8() != 0;
  if (c.has_visual) c.visual_spec = read_visual_spec(r);
  c.act_lo = r.vec();
  c.act_hi = r.vec();
  c.norm_mean = r.vec();
  c.norm_m2 = r.vec();
  c.norm_count = r.i64();
  const uint32_t n = r.u32();
  c.tensors.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    c.tensors.emplace_back(std::move(name), r.mat());
  }
  return c;
}

RunningNorm PolicyCheckpoint::make_norm() const {
  RunningNorm norm(static_cast<int>(norm_mean.size()));
  if (norm_count > 0 && norm_mean.size() > 0) {
    norm.set_stats(norm_mean, norm_m2 / static_cast<double>(norm_count),
                   norm_count);
  }
  norm.freeze();
  return norm;
}

void PolicyCheckpoint::set_norm(const RunningNorm& norm) {
  norm_mean = norm.mean();
  norm_m2 = norm.var_sum();
  norm_count = norm.count();
}

void PolicyCheckpoint::capture(const ParamList& params) {
  tensors.clear();
  tensors.reserve(params.size());
  for (const auto* p : params) tensors.emplace_back(p->name, p->w);
}

void PolicyCheckpoint::restore(const ParamList& params) const {
  if (params.size() != tensors.size())
    throw ConfigError("checkpoint/net mismatch: " +
                      std::to_string(tensors.size()) + " stored tensors vs " +
                      std::to_string(params.size()) + " live params");
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& [name, m] = tensors[i];
    if (name != params[i]->name || m.rows() != params[i]->w.rows() ||
        m.cols() != params[i]->w.cols())
      throw ConfigError("checkpoint tensor mismatch at " + name + " vs " +
                        params[i]->name);
    params[i]->w = m;
  }
}

VecXd rescale_action(const VecXd& tanh_out, const VecXd& lo, const VecXd& hi) {
  const VecXd mid = 0.5 * (lo + hi);
  const VecXd half = 0.5 * (hi - lo);
  return mid + half.cwiseProduct(tanh_out);
}

MlpF32::MlpF32(Mlp& net) : spec_(net.spec()) {
  // dense layers appear as interleaved (W, b) pairs in the registry;
  // the f32 path only supports plain stacks (no layer norm)
  if (spec_.layer_norm)
    throw ConfigError("float32 inference path supports plain dense stacks only");
  ParamList params = net.params();
  for (size_t i = 0; i + 1 < params.size(); i += 2) {
    DenseF32 l;
    l.W = params[i]->w.cast<float>();
    l.b = params[i + 1]->w.col(0).cast<float>();
    layers_.push_back(std::move(l));
  }
}

Eigen::VectorXf MlpF32::forward(const Eigen::VectorXf& x) const {
  Eigen::VectorXf h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = (layers_[i].W * h + layers_[i].b).eval();
    const bool last = i + 1 == layers_.size();
    if (!last) {
      h = h.unaryExpr(
          [](float v) { return v > 0.f ? v : std::expm1(v); });
    } else if (spec_.head == Head::tanh_bounded) {
      h = h.unaryExpr([](float v) { return std::tanh(v); });
    }
  }
  return h;
}

VecXd MlpF32::forward64(const VecXd& x) const {
  return forward(x.cast<float>()).cast<double>();
}

}  // namespace parkour::nn
