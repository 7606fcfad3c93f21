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

#include "parkour/nn/norm.hpp"

#include <cmath>

namespace parkour::nn {

void RunningNorm::reset(int dim) {
  mean_ = VecXd::Zero(dim);
  m2_ = VecXd::Zero(dim);
  count_ = 0;
  frozen_ = false;
}

void RunningNorm::update(const MatXd& rows) {
  if (frozen_ || rows.rows() == 0) return;
  const int64_t n = rows.rows();
  const VecXd batch_mean = rows.colwise().mean();
  VecXd batch_m2 = VecXd::Zero(rows.cols());
  for (int64_t r = 0; r < n; ++r) {
    const VecXd d = rows.row(r).transpose() - batch_mean;
    batch_m2 += d.cwiseProduct(d);
  }
  if (count_ == 0) {
    mean_ = batch_mean;
    m2_ = batch_m2;
    count_ = n;
    return;
  }
  const VecXd delta = batch_mean - mean_;
  const int64_t total = count_ + n;
  mean_ += delta * (static_cast<double>(n) / total);
  m2_ += batch_m2 + delta.cwiseProduct(delta) *
                        (static_cast<double>(count_) * n / total);
  count_ = total;
}

VecXd RunningNorm::stddev() const {
  if (count_ < 2) return VecXd::Ones(mean_.size());
  VecXd sd = (m2_ / static_cast<double>(count_)).cwiseSqrt();
  return sd.cwiseMax(kMinStd);
}

VecXd RunningNorm::apply(const VecXd& x) const {
  if (count_ < 2) return x;
  const VecXd sd = stddev();
  VecXd z = (x - mean_).cwiseQuotient(sd);
  return z.cwiseMax(-kClip).cwiseMin(kClip);
}

MatXd RunningNorm::apply(const MatXd& rows) const {
  if (count_ < 2) return rows;
  const VecXd sd = stddev();
  MatXd z = rows.rowwise() - mean_.transpose();
  z.array().rowwise() /= sd.transpose().array();
  return z.cwiseMax(-kClip).cwiseMin(kClip);
}

void RunningNorm::set_stats(const VecXd& mean, const VecXd& var, int64_t count) {
  mean_ = mean;
  m2_ = var * static_cast<double>(count);
  count_ = count;
}

}  // namespace parkour::nn
