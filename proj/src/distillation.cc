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

#include "kdbias/distillation.h"

#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "kdbias/common.h"
#include "kdbias/io.h"

namespace kdbias {

std::string kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTeacher: return "teacher";
    case ModelKind::kNds: return "nds";
    default: return "ds";
  }
}

InputShape input_shape(const Dataset& d) { return {d.height, d.width, d.channels}; }

ModelParams train_model(const Dataset& train, const Architecture& arch, const TrainConfig& cfg,
                        std::span<const double> soft_targets, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.examples.empty()) throw ValidationError("train_model: empty training set");
  const size_t k = static_cast<size_t>(train.num_classes);
  if (arch.layers.empty()) throw ValidationError("train_model: empty architecture");
  if (arch.layers.back().outputs != train.num_classes) {
    throw ValidationError("train_model: architecture emits " +
                          std::to_string(arch.layers.back().outputs) + " logits for " +
                          std::to_string(train.num_classes) + " classes");
  }
  const bool distilling = cfg.loss_mode == LossMode::kDistill;
  if (distilling && soft_targets.size() != train.size() * k) {
    throw ValidationError("train_model: distillation needs N x K soft targets");
  }

  ModelParams params = init_params(arch, input_shape(train), derive_seed(cfg.seed, "init"));
  Rng order_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const LossSpec loss = cfg.loss();
  std::vector<BatchItem> batch;
  std::vector<double> grads;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      batch.clear();
      for (size_t i = start; i < end; ++i) {
        const size_t idx = order[i];
        BatchItem item{train.examples[idx].pixels, train.examples[idx].label, {}};
        if (distilling) item.teacher_probs = soft_targets.subspan(idx * k, k);
        batch.push_back(item);
      }
      const double value = backward(params, batch, loss, grads);
      if (!std::isfinite(value)) {
        throw TrainingError("training diverged: non-finite loss at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(start / cfg.batch_size) + " (seed " +
                            std::to_string(cfg.seed) + ", lr " +
                            io::format_double(learning_rate(epoch, cfg)) + ")");
      }
      sgd_step(params, grads, epoch, cfg);
    }
    if (on_epoch) on_epoch(epoch, params);
  }
  return params;
}

ModelParams train_teacher(const Dataset& train, const TrainConfig& cfg,
                          const std::optional<Architecture>& arch) {
  if (cfg.loss_mode != LossMode::kHardOnly) {
    throw ValidationError("train_teacher: loss_mode must be hard_only");
  }
  return train_model(train, arch.value_or(teacher_architecture(train.num_classes)), cfg);
}

ModelParams train_student_scratch(const Dataset& train, const TrainConfig& cfg,
                                  const std::optional<Architecture>& arch) {
  if (cfg.loss_mode != LossMode::kHardOnly) {
    throw ValidationError("train_student_scratch: loss_mode must be hard_only");
  }
  return train_model(train, arch.value_or(student_architecture(train.num_classes)), cfg);
}

std::vector<double> teacher_logits(const ModelParams& teacher, const Dataset& d) {
  if (teacher.num_classes() != d.num_classes) {
    throw ValidationError("teacher emits " + std::to_string(teacher.num_classes()) +
                          " classes but the dataset has " + std::to_string(d.num_classes));
  }
  std::vector<double> out;
  out.reserve(d.size() * d.num_classes);
  for (const auto& e : d.examples) {
    const auto z = forward(teacher, e.pixels);
    out.insert(out.end(), z.begin(), z.end());
  }
  return out;
}

std::vector<double> soft_targets(std::span<const double> logits, int num_classes,
                                 double temperature) {
  const size_t k = static_cast<size_t>(num_classes);
  std::vector<double> out;
  out.reserve(logits.size());
  for (size_t i = 0; i + k <= logits.size(); i += k) {
    const auto p = softmax_t(logits.subspan(i, k), temperature);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

ModelParams distill(const ModelParams& teacher, const Dataset& train, const TrainConfig& cfg,
                    const std::optional<Architecture>& arch, const EpochCallback& on_epoch) {
  if (cfg.loss_mode != LossMode::kDistill) {
    throw ValidationError("distill: loss_mode must be distill");
  }
  // The teacher is frozen and its forward pass is per-example, so its
  // logits are identical whether computed per batch or once up front.
  const auto targets = soft_targets(teacher_logits(teacher, train), train.num_classes,
                                    cfg.temperature);
  return train_model(train, arch.value_or(student_architecture(train.num_classes)), cfg,
                     targets, on_epoch);
}

PredictionLog evaluate(const ModelParams& model, const Dataset& d, const std::string& model_name,
                       const std::string& split) {
  PredictionLog log;
  log.num_classes = d.num_classes;
  log.split = split;
  log.model = model_name;
  for (const auto& a : d.attributes) log.attribute_names.push_back(a.name);
  log.records.reserve(d.size());
  for (const auto& e : d.examples) {
    log.records.push_back({e.id, e.label, predict(model, e.pixels), e.attributes});
  }
  return log;
}

void ExperimentPlan::validate() const {
  teacher.validate();
  student.validate();
  if (seeds.empty()) throw ValidationError("plan.seeds: at least one seed required");
  for (size_t i = 0; i < seeds.size(); ++i) {
    for (size_t j = i + 1; j < seeds.size(); ++j) {
      if (seeds[i] == seeds[j]) throw ValidationError("plan.seeds: seeds must be distinct");
    }
  }
  for (double t : temperatures) {
    if (!(t >= 1.0)) throw ValidationError("plan.temperatures: every temperature must be >= 1");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("plan.alpha: must lie in [0, 1]");
  if (jobs < 1) throw ValidationError("plan.jobs: must be >= 1");
}

void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const size_t workers = std::min(n, static_cast<size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Experiment::Experiment(const Dataset& train, const Dataset& test, ExperimentPlan plan)
    : train_(train), test_(test), plan_(std::move(plan)) {
  plan_.validate();
  if (train_.num_classes != test_.num_classes) {
    throw ValidationError("train and test splits disagree on the class count");
  }
}

namespace {

template <typename Fn>
void run_seeds(const ExperimentPlan& plan, const std::string& what, Fn&& fn) {
  parallel_for(plan.seeds.size(), plan.jobs, [&](size_t r) {
    try {
      fn(r);
    } catch (const TrainingError& e) {
      throw TrainingError(what + " seed " + std::to_string(plan.seeds[r]) + ": " + e.what());
    }
  });
}

}  // namespace

const std::vector<ModelParams>& Experiment::teachers() {
  if (!teachers_.empty()) return teachers_;
  const size_t runs = plan_.seeds.size();
  std::vector<ModelParams> trained(runs);
  std::vector<std::vector<double>> logits(runs);
  run_seeds(plan_, "teacher", [&](size_t r) {
    TrainConfig cfg = plan_.teacher;
    cfg.seed = plan_.seeds[r];
    cfg.loss_mode = LossMode::kHardOnly;
    trained[r] = train_teacher(train_, cfg, plan_.teacher_arch);
    logits[r] = teacher_logits(trained[r], train_);
  });
  teachers_ = std::move(trained);
  teacher_train_logits_ = std::move(logits);
  return teachers_;
}

GroupResult Experiment::run_group(ModelKind kind, double temperature) {
  const size_t runs = plan_.seeds.size();
  GroupResult result;
  result.models.resize(runs);
  result.logs.resize(runs);
  std::string name = kind_name(kind);
  if (kind == ModelKind::kDs) {
    if (!(temperature >= 1.0)) throw ValidationError("distillation temperature must be >= 1");
    name += "_T" + io::format_double(temperature);
  }

  if (kind == ModelKind::kTeacher) {
    result.models = teachers();
  } else if (kind == ModelKind::kNds) {
    run_seeds(plan_, name, [&](size_t r) {
      TrainConfig cfg = plan_.student;
      cfg.seed = plan_.seeds[r];
      cfg.loss_mode = LossMode::kHardOnly;
      result.models[r] = train_student_scratch(train_, cfg, plan_.student_arch);
    });
  } else {
    teachers();
    run_seeds(plan_, name, [&](size_t r) {
      TrainConfig cfg = plan_.student;
      cfg.seed = plan_.seeds[r];
      cfg.loss_mode = LossMode::kDistill;
      cfg.temperature = temperature;
      cfg.alpha = plan_.alpha;
      const auto targets =
          soft_targets(teacher_train_logits_[r], train_.num_classes, temperature);
      result.models[r] = train_model(
          train_, plan_.student_arch.value_or(student_architecture(train_.num_classes)), cfg,
          targets);
    });
  }
  for (size_t r = 0; r < runs; ++r) {
    result.logs[r] =
        evaluate(result.models[r], test_, name + "_seed" + std::to_string(plan_.seeds[r]));
  }
  result.group = make_run_group(kind_name(kind), kind == ModelKind::kDs ? temperature : 0.0,
                                kind == ModelKind::kDs ? plan_.alpha : 0.0, plan_.seeds,
                                result.logs);
  return result;
}

GroupResult run_group(const ExperimentPlan& plan, const Dataset& train, const Dataset& test,
                      ModelKind kind, double temperature) {
  Experiment e(train, test, plan);
  return e.run_group(kind, temperature);
}

std::string format_run_group_summary(const RunGroup& group, const std::string& manifest_hash) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["manifest_hash"] = manifest_hash;
  j["model_kind"] = group.model_kind;
  if (group.model_kind == "ds") {
    j["temperature"] = group.temperature;
    j["alpha"] = group.alpha;
  } else {
    j["temperature"] = nullptr;
    j["alpha"] = nullptr;
  }
  j["seeds"] = group.seeds;
  j["overall_acc"] = group.overall_accuracy;
  j["class_acc"] = group.class_accuracy;
  j["class_support"] = group.class_support;
  return j.dump(2) + "\n";
}

}  // namespace kdbias
