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

#include <iosfwd>
#include <optional>

#include "parkour/offpolicy/stage2.hpp"

namespace parkour::baselines {

enum class Method { bc, dagger, priv_recon };

Method method_from(const std::string& name);
const char* to_string(Method m);

struct DistillConfig {
  Method method = Method::bc;
  int epochs = 30;            // bc: passes over the dataset
  int iterations = 12;        // dagger / recon: outer loops
  int epochs_per_iteration = 3;
  int64_t rollout_steps = 4000;  // env steps gathered per outer loop
  double lr = 3e-4;
  int batch_windows = 16;
  int window_len = offpolicy::kWindowLen;
  double grad_clip = 1.0;
  double val_fraction = 0.1;
  nn::VisualSpec visual = offpolicy::default_visual_spec();
  std::vector<sim::TerrainKind> kinds = {sim::TerrainKind::flat,
                                         sim::TerrainKind::step};
  int min_level = 0;
  int max_level = sim::kMaxLevel;
  // fraction of rollouts driven by the student, ramped over iterations
  double dagger_mix_start = 0.0;
  double dagger_mix_end = 1.0;
  double kd = 0.2;
  uint64_t seed = 0;

  void validate() const;
};

struct DistillStats {
  int iteration = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  int64_t dataset_steps = 0;
  double recon_err = 0.0;  // priv_recon only
};

std::string distill_metrics_header();
void write_distill_metrics_row(std::ostream& out, const DistillStats& s);

/// Supervised regression of teacher actions from observation histories over
/// the shared privileged experience. Throws ConfigError on an empty dataset.
nn::PolicyCheckpoint bc_train(const offpolicy::Dataset& data,
                              const DistillConfig& cfg,
                              std::ostream* metrics_csv = nullptr,
                              std::vector<DistillStats>* history = nullptr);

/// Interactive distillation: roll the student, relabel visited states with
/// the teacher policy, aggregate and regress. Starts from BC weights.
nn::PolicyCheckpoint dagger_train(const nn::PolicyCheckpoint& teacher,
                                  const nn::PolicyCheckpoint& bc_init,
                                  const offpolicy::Dataset& data,
                                  const DistillConfig& cfg,
                                  const sim::RobotModel& model,
                                  const sim::EnvConfig& env_cfg,
                                  std::ostream* metrics_csv = nullptr,
                                  std::vector<DistillStats>* history = nullptr);

// Vision module trained to reconstruct the privileged height scan and
// overhead clearance; a frozen teacher head turns reconstructions into
// actions. The reconstruction is produced in the teacher's normalized
// observation units.
class ReconPolicy {
 public:
  ReconPolicy() = default;
  ReconPolicy(const nn::VisualSpec& spec, Rng& rng);

  nn::VisualTrunk trunk;
  nn::Mlp head;  // linear projection to the privileged terrain block

  nn::ParamList params();
  static constexpr int kReconDim = sim::kScanPoints + 1;
};

nn::PolicyCheckpoint priv_recon_train(const nn::PolicyCheckpoint& teacher,
                                      const offpolicy::Dataset& data,
                                      const DistillConfig& cfg,
                                      const sim::RobotModel& model,
                                      const sim::EnvConfig& env_cfg,
                                      std::ostream* metrics_csv = nullptr,
                                      std::vector<DistillStats>* history = nullptr);

struct ReconProbeSample {
  double ceiling_abs_err = 0.0;  // normalized units
  bool occluded = false;
  bool has_block = false;
};

/// Rolls the composed reconstruction policy and records the per-state
/// ceiling reconstruction error together with whether the overhead block
/// was visible to the depth sensor at that state.
std::vector<ReconProbeSample> probe_recon_errors(
    const nn::PolicyCheckpoint& recon_ckpt,
    const nn::PolicyCheckpoint& teacher, const sim::RobotModel& model,
    const sim::EnvConfig& env_cfg, sim::TerrainKind kind, int level,
    int n_samples, uint64_t seed);

}  // namespace parkour::baselines
