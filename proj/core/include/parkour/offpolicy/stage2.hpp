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

#include <functional>
#include <iosfwd>
#include <memory>

#include "parkour/nn/adam.hpp"
#include "parkour/nn/checkpoint.hpp"
#include "parkour/offpolicy/dpriv.hpp"
#include "parkour/offpolicy/replay.hpp"
#include "parkour/task/cat.hpp"

namespace parkour::offpolicy {

/// Default visual architecture for the 32-ray scan.
nn::VisualSpec default_visual_spec();

struct DepthAugment {
  double noise_std = 0.01;  // m, per ray
  int max_shift = 1;        // rays, lateral
  int max_cutout = 4;       // contiguous rays dropped to max range
  bool enabled = true;
};

struct Stage2Config {
  int n_actors = 16;
  int64_t online_steps = 500000;
  int utd = 8;                  // critic update rounds per env step
  int batch_windows = 16;
  int window_len = kWindowLen;
  int n_critics = 10;
  int target_subset = 2;
  double gamma = 0.99;
  double polyak = 0.995;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double explore_noise = 0.1;   // normalized action units
  double grad_clip = 1.0;
  int warmup_online_steps = 1000;
  size_t online_capacity_windows = 8000;
  double kd = 0.2;

  nn::VisualSpec visual = default_visual_spec();
  std::vector<int> critic_hidden = {512, 256, 128};

  DepthAugment augment;
  double cat_ema = 0.9;
  std::vector<task::ConstraintSpec> suite = task::constraint_specs();

  std::vector<sim::TerrainKind> kinds = {sim::TerrainKind::flat,
                                         sim::TerrainKind::step};
  int min_level = 0;
  int max_level = sim::kMaxLevel;

  // ablations
  bool from_scratch = false;    // no privileged buffer
  bool no_priv_critic = false;  // critics read depth history, not priv state
  bool no_cat = false;          // delta forced to zero in targets and online

  int eval_every_steps = 0;     // 0 disables in-loop evaluation

  void validate() const;
};

// Dense batch assembled from sampled windows, padded to a fixed unroll of
// window_len + 1 steps (the extra step is the boundary state used for
// bootstrap targets). Row layout: b * steps + t.
struct WindowBatch {
  int batch = 0;
  int steps = 0;                 // window_len + 1
  MatXd proprio;                 // normalized deployable obs
  MatXd frames;                  // normalized (optionally augmented) scans
  std::vector<int> frame_of;
  MatXd h0;
  MatXd priv;                    // normalized privileged obs per step
  MatXd actions;                 // stored actions
  VecXd rewards;
  VecXd deltas;                  // recomputed termination probabilities
  std::vector<uint8_t> valid;    // real (non-pad, non-boundary) steps
  int n_valid = 0;
  int n_online = 0, n_priv = 0;  // window provenance in this batch

  int row(int b, int t) const { return b * steps + t; }
};

/// Assembles a dense padded batch from sampled windows. cat may be null
/// (termination probabilities forced to zero); augment may be null.
WindowBatch build_window_batch(const std::vector<const Window*>& windows,
                               int window_len, const nn::VisualSpec& visual,
                               const nn::RunningNorm& norm_proprio,
                               const nn::RunningNorm& norm_priv,
                               double depth_max_range,
                               const DepthAugment* augment, Rng& rng,
                               const task::CatState* cat,
                               const std::vector<task::ConstraintSpec>& specs =
                                   task::constraint_specs(),
                               double* hidden_divergence = nullptr);

/// Fits the observation normalizers from a privileged experience dataset.
void fit_normalizers(const Dataset& data, nn::RunningNorm& norm_proprio,
                     nn::RunningNorm& norm_priv);

// Visual policy: conv encoder + GRU + dense head with tanh output rescaled
// to the action bounds observed in the privileged experience.
class VisualPolicy {
 public:
  VisualPolicy() = default;
  VisualPolicy(const nn::VisualSpec& spec, const ActionBounds& bounds,
               Rng& rng);

  struct Cache {
    nn::VisualTrunk::Cache trunk;
    nn::Mlp::Cache head;
    MatXd tanh_out;
  };

  /// Batched unroll; returns actions rescaled to bounds, (B*steps, A).
  MatXd forward(const WindowBatch& batch, Cache& cache) const;
  /// dactions: gradient w.r.t. the rescaled actions.
  void backward(const Cache& cache, const MatXd& dactions);

  /// Single online step: consumes one observation row and the running
  /// hidden, returns the action and the next hidden.
  VecXd act(const VecXd& proprio_row, const VecXd& latent, VecXd& hidden) const;
  VecXd encode_frame(const VecXd& scan_normalized) const;

  nn::ParamList params();
  const nn::VisualSpec& spec() const { return spec_; }
  const ActionBounds& bounds() const { return bounds_; }

  nn::VisualTrunk trunk;
  nn::Mlp head;

 private:
  nn::VisualSpec spec_;
  ActionBounds bounds_;
};

// REDQ-style ensemble over the privileged state (or over the visual trunk
// features in the no_priv_critic ablation).
class CriticEnsemble {
 public:
  CriticEnsemble() = default;
  CriticEnsemble(int n, int input_dim, const std::vector<int>& hidden,
                 Rng& rng, const std::string& tag);

  int size() const { return static_cast<int>(nets_.size()); }
  nn::Mlp& net(int i) { return nets_[i]; }
  const nn::Mlp& net(int i) const { return nets_[i]; }
  nn::ParamList params();

  /// Q values of one member on (state, action) rows.
  VecXd value(int i, const MatXd& sa) const { return nets_[i].forward(sa).col(0); }

  /// Elementwise min of two members.
  VecXd min_pair(int i, int j, const MatXd& sa) const;

  void copy_from(CriticEnsemble& other);
  void polyak_from(CriticEnsemble& other, double tau);

 private:
  std::vector<nn::Mlp> nets_;
};

struct Stage2Stats {
  int64_t env_steps = 0;
  int critic_rounds = 0;
  int actor_rounds = 0;
  double critic_loss = 0.0;
  double actor_q = 0.0;
  double mean_reward = 0.0;
  double mean_delta = 0.0;
  size_t online_windows = 0;
  size_t priv_windows = 0;
  bool warmup = false;
  double eval_completion = -1.0;
  double hidden_divergence = 0.0;  // stored vs recomputed hidden, logged only
};

class Stage2Trainer {
 public:
  /// dataset may be empty only when cfg.from_scratch is set.
  Stage2Trainer(const Stage2Config& cfg, const sim::RobotModel& model,
                const sim::EnvConfig& env_cfg, const Dataset* dataset,
                uint64_t seed);

  /// Advances every online actor one env step and runs the scheduled
  /// update rounds (utd critic rounds and one actor round per env step).
  Stage2Stats iterate();

  nn::PolicyCheckpoint checkpoint() const;
  nn::PolicyCheckpoint train(
      const std::function<bool(const Stage2Stats&)>& stop = nullptr,
      std::ostream* metrics_csv = nullptr);

  int64_t env_steps() const { return env_steps_; }
  const task::CatState& cat() const { return cat_; }
  const ReplayBuffer& online_buffer() const { return online_; }
  const ReplayBuffer& priv_buffer() const { return priv_; }
  VisualPolicy& actor() { return actor_; }

  /// Builds a training batch from the current buffers (exposed for tests).
  WindowBatch make_batch(const std::vector<const Window*>& windows,
                         bool augment);

  /// Bootstrapped targets for every valid step of the batch under the
  /// current target networks and termination normalizer.
  VecXd critic_targets(const WindowBatch& batch);

  double critic_round(Rng& rng);
  double actor_round(Rng& rng);

 private:
  void collect_online_step();
  void flush_window(int actor, bool terminated);
  void reset_actor_env(int actor);
  MatXd critic_input(const WindowBatch& batch, const MatXd& actions) const;

  Stage2Config cfg_;
  sim::RobotModel model_;
  sim::EnvConfig env_cfg_;
  Rng rng_;
  task::CatState cat_;

  ActionBounds bounds_;
  nn::RunningNorm norm_proprio_;  // deployable obs
  nn::RunningNorm norm_priv_;     // critic obs

  VisualPolicy actor_;
  VisualPolicy actor_target_;
  CriticEnsemble critics_;
  CriticEnsemble critic_targets_;
  // no_priv_critic ablation: critics read the actor-style visual features
  std::unique_ptr<VisualPolicy> critic_encoder_;
  std::unique_ptr<VisualPolicy> critic_encoder_target_;

  nn::Adam actor_opt_;
  nn::Adam critic_opt_;

  ReplayBuffer online_;
  ReplayBuffer priv_;

  // online actor state
  std::vector<sim::Env> envs_;
  struct ActorTrace {
    VecXd hidden;
    VecXd latent;
    VecXd window_h0;
    std::vector<VecXd> proprio, priv, depth;
    std::vector<Vec4d> actions;
    std::vector<double> rewards;
    std::vector<VecXd> violations;
    int start_step = 0;
  };
  std::vector<ActorTrace> traces_;

  int64_t env_steps_ = 0;
  Stage2Stats last_stats_;
};

std::string stage2_metrics_header();
void write_stage2_metrics_row(std::ostream& out, const Stage2Stats& s);

}  // namespace parkour::offpolicy
