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

#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "parkour/nn/layers.hpp"
#include "parkour/rng.hpp"

namespace parkour::nn {

enum class Head { linear, tanh_bounded };

struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden = {512, 256, 128};
  int output_dim = 1;
  bool layer_norm = false;
  Head head = Head::linear;

  bool operator==(const MlpSpec&) const = default;
};

// Dense stack with elu activations, optional per-layer normalization and an
// optional tanh output head.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& id, const MlpSpec& spec, Rng& rng);

  struct Cache {
    std::vector<MatXd> pre;         // pre-activation per hidden layer
    std::vector<MatXd> post;        // layer inputs (post previous activation)
    std::vector<LayerNorm::Cache> ln;
    MatXd head_out;                 // tanh output when head is bounded
  };

  MatXd forward(const MatXd& x, Cache& cache) const;
  MatXd forward(const MatXd& x) const;  // no-cache convenience
  /// Accumulates parameter grads, returns input grads.
  MatXd backward(const Cache& cache, const MatXd& dy);

  const MlpSpec& spec() const { return spec_; }
  ParamList params();

 private:
  MlpSpec spec_;
  std::vector<Dense> layers_;
  std::vector<LayerNorm> norms_;
};

// ---------------------------------------------------------------------------

struct ConvSpec {
  int rays = 32;
  std::vector<int> channels = {8, 16, 32};
  int kernel = 5;
  int latent_dim = 64;

  bool operator==(const ConvSpec&) const = default;
};

// Conv blocks (conv -> leaky relu -> max pool 2) followed by a linear
// projection to the depth latent.
class ConvEncoder {
 public:
  ConvEncoder() = default;
  ConvEncoder(const std::string& id, const ConvSpec& spec, Rng& rng);

  struct Cache {
    std::vector<MatXd> inputs;   // input of each conv block
    std::vector<MatXd> pre;      // conv output before activation
    std::vector<MatXd> act;      // after leaky relu (pool input)
    std::vector<MaxPool1d::Cache> pool;
    MatXd flat;                  // input of the projection
  };

  MatXd forward(const MatXd& scans, Cache& cache) const;
  MatXd backward(const Cache& cache, const MatXd& dlatent);

  const ConvSpec& spec() const { return spec_; }
  int flat_dim() const;
  ParamList params();

 private:
  ConvSpec spec_;
  std::vector<Conv1d> convs_;
  Dense proj_;
  std::vector<int> lens_;  // signal length entering each block
};

// ---------------------------------------------------------------------------

struct VisualSpec {
  ConvSpec conv;
  int proprio_dim = 17;   // per-step non-depth input (proprio + cmd + prev action)
  int gru_hidden = 256;
  MlpSpec mlp;            // head on top of the GRU output
  int depth_period = 5;   // scans arrive every depth_period steps

  bool operator==(const VisualSpec&) const = default;
};

// Sequence windows processed by the visual nets. `depth` holds the raw scans
// for the steps where a frame exists; `depth_step` maps each step to the index
// of the latest frame at or before it (latent replication).
struct WindowInput {
  MatXd proprio;                 // (T, proprio_dim)
  MatXd depth;                   // (n_frames, rays)
  std::vector<int> depth_step;   // (T), frame index per step
  VecXd h0;                      // initial hidden, zeros when unknown
};

// Conv encoder + GRU trunk shared by the visual actor, the visual critic and
// the privileged-reconstruction head. Works on batches of equal-length
// windows; ragged batches are padded by the callers and masked in the loss.
class VisualTrunk {
 public:
  VisualTrunk() = default;
  VisualTrunk(const std::string& id, const VisualSpec& spec, Rng& rng);

  struct Cache {
    ConvEncoder::Cache conv;
    MatXd latents;                  // (n_frames_total, latent)
    std::vector<GruCell::Cache> gru;  // per step
    std::vector<MatXd> gru_in;
    int batch = 0, steps = 0;
    std::vector<int> frame_of;      // (batch*steps) -> row in latents, -1 none
  };

  /// proprio: (batch*T, proprio_dim) step-major [b0t0, b0t1, ...]; frames:
  /// stacked scans; frame_of maps each (b,t) to its frame row. h0: (batch, H).
  /// Returns GRU features (batch*T, H) and final hiddens (batch, H).
  std::pair<MatXd, MatXd> forward(const MatXd& proprio, const MatXd& frames,
                                  const std::vector<int>& frame_of, int batch,
                                  int steps, const MatXd& h0, Cache& cache) const;
  /// dfeat: (batch*T, H). Accumulates grads; input grads are not needed by
  /// any caller and are dropped.
  void backward(const Cache& cache, const MatXd& dfeat);

  const VisualSpec& spec() const { return spec_; }
  int gru_input_dim() const { return spec_.proprio_dim + spec_.conv.latent_dim; }
  ParamList params();

  ConvEncoder encoder;
  GruCell gru;

 private:
  VisualSpec spec_;
};

// ---------------------------------------------------------------------------
// checkpoint-facing descriptors

enum class NetKind : uint32_t {
  priv_actor = 0,
  critic = 1,
  visual_actor = 2,
  visual_critic = 3,
  recon = 4,
};

struct GaussianSample {
  VecXd action;
  double log_prob = 0.0;
};

// Diagonal Gaussian over the tanh-bounded mean, state-independent log std.
// Used by the on-policy stage; log_std is a learnable parameter.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(const std::string& id, const MlpSpec& spec, double init_log_std,
                 Rng& rng);

  Mlp mlp;
  Param log_std;

  MatXd mean(const MatXd& obs) const { return mlp.forward(obs); }
  GaussianSample sample(const VecXd& mean_row, Rng& rng) const;
  double log_prob(const VecXd& mean_row, const VecXd& action) const;
  MatXd log_prob_batch(const MatXd& means, const MatXd& actions) const;
  double entropy() const;

  ParamList params();
};

}  // namespace parkour::nn
