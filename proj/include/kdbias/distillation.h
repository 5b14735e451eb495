/*
 * Copyright 2026 The kdbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Teacher, non-distilled student (NDS) and distilled student (DS) training,
// and the seeded multi-run protocol that turns them into run groups and
// per-run test prediction logs.

#ifndef KDBIAS_DISTILLATION_H_
#define KDBIAS_DISTILLATION_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kdbias/bias.h"
#include "kdbias/dataset.h"
#include "kdbias/nn.h"
#include "kdbias/prediction_log.h"

namespace kdbias {

enum class ModelKind { kTeacher, kNds, kDs };

std::string kind_name(ModelKind kind);

// Called after every epoch with the epoch index and current parameters.
using EpochCallback = std::function<void(int, const ModelParams&)>;

InputShape input_shape(const Dataset& d);

// Shared training loop. `soft_targets` (N x K, aligned with train.examples)
// is required when cfg.loss_mode is kDistill. Throws TrainingError when the
// batch loss becomes non-finite.
ModelParams train_model(const Dataset& train, const Architecture& arch, const TrainConfig& cfg,
                        std::span<const double> soft_targets = {},
                        const EpochCallback& on_epoch = {});

// Hard-label training of the teacher architecture (or `arch`).
ModelParams train_teacher(const Dataset& train, const TrainConfig& cfg,
                          const std::optional<Architecture>& arch = std::nullopt);

// Hard-label training of the student architecture (or `arch`).
ModelParams train_student_scratch(const Dataset& train, const TrainConfig& cfg,
                                  const std::optional<Architecture>& arch = std::nullopt);

// N x K teacher logits over `d`, one forward pass per example.
std::vector<double> teacher_logits(const ModelParams& teacher, const Dataset& d);

// Row-wise softmax_t of an N x K logit matrix.
std::vector<double> soft_targets(std::span<const double> logits, int num_classes,
                                 double temperature);

// Student trained on alpha * soft CE(T) + (1 - alpha) * hard CE against the
// frozen teacher's softmax at temperature cfg.temperature.
ModelParams distill(const ModelParams& teacher, const Dataset& train, const TrainConfig& cfg,
                    const std::optional<Architecture>& arch = std::nullopt,
                    const EpochCallback& on_epoch = {});

// Test-split prediction log of one model.
PredictionLog evaluate(const ModelParams& model, const Dataset& d, const std::string& model_name,
                       const std::string& split = "test");

struct ExperimentPlan {
  TrainConfig teacher;
  TrainConfig student;
  std::optional<Architecture> teacher_arch;
  std::optional<Architecture> student_arch;
  std::vector<double> temperatures = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40};
  double alpha = 0.8;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  // Upper bound on concurrently trained runs.
  int jobs = 1;

  void validate() const;
};

struct GroupResult {
  RunGroup group;
  std::vector<PredictionLog> logs;  // one per seed, in seed order
  std::vector<ModelParams> models;
};

// Trains teachers once per seed and reuses them (and their train-set logits)
// for every distillation temperature. Run k of each kind uses seeds[k];
// distilled run k learns from teacher k.
class Experiment {
 public:
  Experiment(const Dataset& train, const Dataset& test, ExperimentPlan plan);

  GroupResult run_group(ModelKind kind, double temperature = 0.0);
  const std::vector<ModelParams>& teachers();

  const ExperimentPlan& plan() const { return plan_; }

 private:
  const Dataset& train_;
  const Dataset& test_;
  ExperimentPlan plan_;
  std::vector<ModelParams> teachers_;
  std::vector<std::vector<double>> teacher_train_logits_;
};

// One-shot convenience over Experiment.
GroupResult run_group(const ExperimentPlan& plan, const Dataset& train, const Dataset& test,
                      ModelKind kind, double temperature = 0.0);

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
// failure by index after all workers finish.
void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn);

// {model_kind, temperature, alpha, seeds[], overall_acc[], class_acc[][]}
std::string format_run_group_summary(const RunGroup& group, const std::string& manifest_hash);

}  // namespace kdbias

#endif  // KDBIAS_DISTILLATION_H_
