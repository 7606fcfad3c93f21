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

#include "parkour/nn/layers.hpp"

#include <cmath>

#include "parkour/rng.hpp"

namespace parkour::nn {

MatXd elu(const MatXd& x) {
  return x.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
}

MatXd elu_backward(const MatXd& x, const MatXd& dy) {
  return dy.cwiseProduct(
      x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); }));
}

MatXd leaky_relu(const MatXd& x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

MatXd leaky_relu_backward(const MatXd& x, const MatXd& dy, double slope) {
  return dy.cwiseProduct(
      x.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; }));
}

MatXd tanh_fwd(const MatXd& x) {
  // capped a hair inside +-1 so bounded heads stay strictly interior even
  // when the preactivation saturates in floating point
  constexpr double cap = 1.0 - 1e-12;
  return x.unaryExpr([](double v) {
    const double t = std::tanh(v);
    return t > cap ? cap : (t < -cap ? -cap : t);
  });
}

MatXd tanh_backward(const MatXd& y, const MatXd& dy) {
  return dy.cwiseProduct((1.0 - y.array().square()).matrix());
}

MatXd sigmoid(const MatXd& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

MatXd glorot(int rows, int cols, parkour::Rng& rng) {
  const double scale = std::sqrt(6.0 / static_cast<double>(rows + cols));
  MatXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

// ---------------------------------------------------------------------------

void Dense::init(const std::string& id, int in, int out, parkour::Rng& rng) {
  W.init(id + ".W", out, in);
  b.init(id + ".b", out, 1);
  W.w = glorot(out, in, rng);
}

MatXd Dense::forward(const MatXd& x) const {
  MatXd y = x * W.w.transpose();
  y.rowwise() += b.w.col(0).transpose();
  return y;
}

MatXd Dense::backward(const MatXd& x, const MatXd& dy) {
  W.g.noalias() += dy.transpose() * x;
  b.g.col(0).noalias() += dy.colwise().sum().transpose();
  return dy * W.w;
}

// ---------------------------------------------------------------------------

void LayerNorm::init(const std::string& id, int dim) {
  gain.init(id + ".gain", dim, 1);
  bias.init(id + ".bias", dim, 1);
  gain.w.setOnes();
}

MatXd LayerNorm::forward(const MatXd& x, Cache& cache) const {
  const int n = static_cast<int>(x.cols());
  const VecXd mean = x.rowwise().mean();
  MatXd centered = x.colwise() - mean;
  VecXd var = centered.array().square().rowwise().mean();
  cache.inv_std = (var.array() + eps).rsqrt();
  cache.xhat = centered.array().colwise() * cache.inv_std.array();
  MatXd y = cache.xhat.array().rowwise() * gain.w.col(0).transpose().array();
  y.rowwise() += bias.w.col(0).transpose();
  (void)n;
  return y;
}

MatXd LayerNorm::backward(const Cache& cache, const MatXd& dy) {
  const double n = static_cast<double>(dy.cols());
  gain.g.col(0).noalias() +=
      dy.cwiseProduct(cache.xhat).colwise().sum().transpose();
  bias.g.col(0).noalias() += dy.colwise().sum().transpose();
  MatXd dxhat = dy.array().rowwise() * gain.w.col(0).transpose().array();
  const VecXd sum_dxhat = dxhat.rowwise().sum();
  const VecXd sum_dxhat_xhat = dxhat.cwiseProduct(cache.xhat).rowwise().sum();
  MatXd dx = n * dxhat;
  dx.colwise() -= sum_dxhat;
  dx -= (cache.xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
  dx.array().colwise() *= (cache.inv_std.array() / n);
  return dx;
}

// ---------------------------------------------------------------------------

void Conv1d::init(const std::string& id, int in_channels, int out_channels,
                  int k, parkour::Rng& rng) {
  c_in = in_channels;
  c_out = out_channels;
  kernel = k;
  W.init(id + ".W", out_channels, in_channels * k);
  b.init(id + ".b", out_channels, 1);
  W.w = glorot(out_channels, in_channels * k, rng);
}

MatXd Conv1d::forward(const MatXd& x, int len) const {
  const int batch = static_cast<int>(x.rows());
  const int pad = kernel / 2;
  MatXd y = MatXd::Zero(batch, c_out * len);
  for (int r = 0; r < batch; ++r) {
    for (int co = 0; co < c_out; ++co) {
      for (int i = 0; i < len; ++i) {
        double acc = b.w(co, 0);
        for (int ci = 0; ci < c_in; ++ci) {
          for (int u = 0; u < kernel; ++u) {
            const int src = i + u - pad;
            if (src < 0 || src >= len) continue;
            acc += W.w(co, ci * kernel + u) * x(r, ci * len + src);
          }
        }
        y(r, co * len + i) = acc;
      }
    }
  }
  return y;
}

MatXd Conv1d::backward(const MatXd& x, int len, const MatXd& dy) {
  const int batch = static_cast<int>(x.rows());
  const int pad = kernel / 2;
  MatXd dx = MatXd::Zero(batch, c_in * len);
  for (int r = 0; r < batch; ++r) {
    for (int co = 0; co < c_out; ++co) {
      for (int i = 0; i < len; ++i) {
        const double g = dy(r, co * len + i);
        if (g == 0.0) continue;
        b.g(co, 0) += g;
        for (int ci = 0; ci < c_in; ++ci) {
          for (int u = 0; u < kernel; ++u) {
            const int src = i + u - pad;
            if (src < 0 || src >= len) continue;
            W.g(co, ci * kernel + u) += g * x(r, ci * len + src);
            dx(r, ci * len + src) += g * W.w(co, ci * kernel + u);
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------

MatXd MaxPool1d::forward(const MatXd& x, int channels, int len, Cache& cache) {
  const int batch = static_cast<int>(x.rows());
  const int out_len = len / 2;
  MatXd y(batch, channels * out_len);
  cache.argmax.resize(batch, channels * out_len);
  for (int r = 0; r < batch; ++r) {
    for (int c = 0; c < channels; ++c) {
      for (int i = 0; i < out_len; ++i) {
        const int a = c * len + 2 * i;
        const int pick = x(r, a) >= x(r, a + 1) ? a : a + 1;
        y(r, c * out_len + i) = x(r, pick);
        cache.argmax(r, c * out_len + i) = pick;
      }
    }
  }
  return y;
}

MatXd MaxPool1d::backward(const MatXd& dy, int channels, int len,
                          const Cache& cache) {
  const int batch = static_cast<int>(dy.rows());
  const int out_len = len / 2;
  MatXd dx = MatXd::Zero(batch, channels * len);
  for (int r = 0; r < batch; ++r)
    for (int j = 0; j < channels * out_len; ++j)
      dx(r, cache.argmax(r, j)) += dy(r, j);
  return dx;
}

// ---------------------------------------------------------------------------

void GruCell::init(const std::string& id, int in, int hidden,
                   parkour::Rng& rng) {
  input_dim = in;
  hidden_dim = hidden;
  W_ih.init(id + ".W_ih", 3 * hidden, in);
  W_hh.init(id + ".W_hh", 3 * hidden, hidden);
  b_ih.init(id + ".b_ih", 3 * hidden, 1);
  b_hh.init(id + ".b_hh", 3 * hidden, 1);
  W_ih.w = glorot(3 * hidden, in, rng);
  W_hh.w = glorot(3 * hidden, hidden, rng);
}

MatXd GruCell::forward(const MatXd& x, const MatXd& h_prev,
                       Cache& cache) const {
  const int H = hidden_dim;
  MatXd gi = x * W_ih.w.transpose();
  gi.rowwise() += b_ih.w.col(0).transpose();
  MatXd gh = h_prev * W_hh.w.transpose();
  gh.rowwise() += b_hh.w.col(0).transpose();

  cache.x = x;
  cache.h_prev = h_prev;
  cache.r = sigmoid(gi.leftCols(H) + gh.leftCols(H));
  cache.z = sigmoid(gi.middleCols(H, H) + gh.middleCols(H, H));
  cache.hn = gh.rightCols(H);
  cache.n = tanh_fwd(gi.rightCols(H) + cache.r.cwiseProduct(cache.hn));
  return (1.0 - cache.z.array()) * cache.n.array() +
         cache.z.array() * h_prev.array();
}

std::pair<MatXd, MatXd> GruCell::backward(const Cache& cache, const MatXd& dh) {
  const int H = hidden_dim;
  const int batch = static_cast<int>(dh.rows());

  const MatXd dz = dh.cwiseProduct(cache.h_prev - cache.n);
  const MatXd dn = dh.cwiseProduct((1.0 - cache.z.array()).matrix());
  MatXd dh_prev = dh.cwiseProduct(cache.z);

  const MatXd da_n = dn.cwiseProduct((1.0 - cache.n.array().square()).matrix());
  const MatXd dr = da_n.cwiseProduct(cache.hn);
  const MatXd dhn = da_n.cwiseProduct(cache.r);
  const MatXd da_r =
      dr.cwiseProduct(cache.r.cwiseProduct((1.0 - cache.r.array()).matrix()));
  const MatXd da_z =
      dz.cwiseProduct(cache.z.cwiseProduct((1.0 - cache.z.array()).matrix()));

  MatXd d_gi(batch, 3 * H);
  d_gi << da_r, da_z, da_n;
  MatXd d_gh(batch, 3 * H);
  d_gh << da_r, da_z, dhn;

  W_ih.g.noalias() += d_gi.transpose() * cache.x;
  b_ih.g.col(0).noalias() += d_gi.colwise().sum().transpose();
  W_hh.g.noalias() += d_gh.transpose() * cache.h_prev;
  b_hh.g.col(0).noalias() += d_gh.colwise().sum().transpose();

  MatXd dx = d_gi * W_ih.w;
  dh_prev.noalias() += d_gh * W_hh.w;
  return {std::move(dx), std::move(dh_prev)};
}

// ---------------------------------------------------------------------------

int64_t param_count(const ParamList& params) {
  int64_t n = 0;
  for (const auto* p : params) n += p->size();
  return n;
}

void zero_grads(const ParamList& params) {
  for (auto* p : params) p->zero_grad();
}

double grad_global_norm(const ParamList& params) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->g.squaredNorm();
  return std::sqrt(sq);
}

void clip_grads_by_norm(const ParamList& params, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = grad_global_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (auto* p : params) p->g *= scale;
}

}  // namespace parkour::nn
