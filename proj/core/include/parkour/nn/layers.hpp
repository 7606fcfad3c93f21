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

#include <string>
#include <vector>

#include "parkour/common.hpp"
#include "parkour/rng.hpp"

namespace parkour::nn {

// One named tensor with gradient and Adam moments. Vectors are stored as
// n-by-1 matrices so every parameter flows through the same plumbing.
struct Param {
  std::string name;
  MatXd w;
  MatXd g;
  MatXd m;
  MatXd v;

  void init(const std::string& id, int rows, int cols) {
    name = id;
    w = MatXd::Zero(rows, cols);
    g = MatXd::Zero(rows, cols);
    m = MatXd::Zero(rows, cols);
    v = MatXd::Zero(rows, cols);
  }
  void zero_grad() { g.setZero(); }
  int64_t size() const { return w.size(); }
};

using ParamList = std::vector<Param*>;

// ---------------------------------------------------------------------------
// activations (element-wise, batched rows)

MatXd elu(const MatXd& x);
MatXd elu_backward(const MatXd& x, const MatXd& dy);
MatXd leaky_relu(const MatXd& x, double slope = 0.01);
MatXd leaky_relu_backward(const MatXd& x, const MatXd& dy, double slope = 0.01);
MatXd tanh_fwd(const MatXd& x);
MatXd tanh_backward(const MatXd& y, const MatXd& dy);  // takes the output
MatXd sigmoid(const MatXd& x);

// ---------------------------------------------------------------------------
// dense

// Y = X * W^T + 1 b^T, X is (batch, in), W is (out, in), b is (out, 1).
struct Dense {
  Param W, b;

  void init(const std::string& id, int in, int out, parkour::Rng& rng);
  MatXd forward(const MatXd& x) const;
  /// Accumulates into W.g / b.g and returns dX.
  MatXd backward(const MatXd& x, const MatXd& dy);
  int in_dim() const { return static_cast<int>(W.w.cols()); }
  int out_dim() const { return static_cast<int>(W.w.rows()); }
  void collect(ParamList& out) {
    out.push_back(&W);
    out.push_back(&b);
  }
};

// ---------------------------------------------------------------------------
// layer normalization (per row, affine)

struct LayerNorm {
  Param gain, bias;
  double eps = 1e-8;

  struct Cache {
    MatXd xhat;
    VecXd inv_std;
  };

  void init(const std::string& id, int dim);
  MatXd forward(const MatXd& x, Cache& cache) const;
  MatXd backward(const Cache& cache, const MatXd& dy);
  void collect(ParamList& out) {
    out.push_back(&gain);
    out.push_back(&bias);
  }
};

// ---------------------------------------------------------------------------
// 1-D convolution, stride 1, zero-padded to keep the length ("same").
// Rows hold channel-major signals: [c0 samples..., c1 samples...].

struct Conv1d {
  Param W, b;  // W is (c_out, c_in * kernel)
  int c_in = 0, c_out = 0, kernel = 0;

  void init(const std::string& id, int in_channels, int out_channels, int k,
            parkour::Rng& rng);
  MatXd forward(const MatXd& x, int len) const;
  MatXd backward(const MatXd& x, int len, const MatXd& dy);
  void collect(ParamList& out) {
    out.push_back(&W);
    out.push_back(&b);
  }
};

// max pooling, window 2 stride 2, channel-major rows
struct MaxPool1d {
  struct Cache {
    Eigen::MatrixXi argmax;
  };
  static MatXd forward(const MatXd& x, int channels, int len, Cache& cache);
  static MatXd backward(const MatXd& dy, int channels, int len,
                        const Cache& cache);
};

// ---------------------------------------------------------------------------
// gated recurrent unit, single layer. Gate order in the packed weights is
// reset | update | candidate, matching the usual convention:
//   r = sig(W_ir x + b_ir + W_hr h + b_hr)
//   z = sig(W_iz x + b_iz + W_hz h + b_hz)
//   n = tanh(W_in x + b_in + r . (W_hn h + b_hn))
//   h' = (1 - z) . n + z . h

struct GruCell {
  Param W_ih, W_hh, b_ih, b_hh;  // (3H, in), (3H, H), (3H, 1), (3H, 1)
  int input_dim = 0, hidden_dim = 0;

  struct Cache {
    MatXd x, h_prev, r, z, n, hn;
  };

  void init(const std::string& id, int in, int hidden, parkour::Rng& rng);
  /// One step over a batch of rows; returns h_t.
  MatXd forward(const MatXd& x, const MatXd& h_prev, Cache& cache) const;
  /// Returns (dx, dh_prev); accumulates parameter grads.
  std::pair<MatXd, MatXd> backward(const Cache& cache, const MatXd& dh);
  void collect(ParamList& out) {
    out.push_back(&W_ih);
    out.push_back(&W_hh);
    out.push_back(&b_ih);
    out.push_back(&b_hh);
  }
};

// orthogonal-ish init helpers
MatXd glorot(int rows, int cols, parkour::Rng& rng);

int64_t param_count(const ParamList& params);
void zero_grads(const ParamList& params);
double grad_global_norm(const ParamList& params);
void clip_grads_by_norm(const ParamList& params, double max_norm);

}  // namespace parkour::nn
