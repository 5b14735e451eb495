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

#include "kdbias/bias.h"

#include <cmath>
#include <unordered_map>

#include "kdbias/common.h"

namespace kdbias {

void RunGroup::validate() const {
  if (class_accuracy.size() != overall_accuracy.size() ||
      (!seeds.empty() && seeds.size() != overall_accuracy.size())) {
    throw ValidationError("run group: inconsistent run count");
  }
  int64_t n = 0;
  for (int64_t s : class_support) n += s;
  for (size_t r = 0; r < runs(); ++r) {
    if (class_accuracy[r].size() != class_support.size()) {
      throw ValidationError("run group: class count mismatch");
    }
    double weighted = 0.0;
    for (size_t c = 0; c < class_support.size(); ++c) {
      weighted += class_accuracy[r][c] * static_cast<double>(class_support[c]);
    }
    if (std::abs(weighted / static_cast<double>(n) - overall_accuracy[r]) > 1e-12) {
      throw ValidationError("run group: overall accuracy disagrees with class accuracies");
    }
  }
}

std::vector<int64_t> class_support(const PredictionLog& log, int num_classes) {
  std::vector<int64_t> support(num_classes, 0);
  for (const auto& r : log.records) {
    if (r.true_label < 0 || r.true_label >= num_classes) {
      throw ValidationError("class_support: label out of range");
    }
    ++support[r.true_label];
  }
  return support;
}

std::vector<double> class_accuracies(const PredictionLog& log, int num_classes) {
  const auto support = class_support(log, num_classes);
  std::vector<int64_t> correct(num_classes, 0);
  for (const auto& r : log.records) correct[r.true_label] += r.predicted_label == r.true_label;
  std::vector<double> acc(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    if (support[c] == 0) {
      throw ValidationError("class_accuracies: class " + std::to_string(c) + " absent from log");
    }
    acc[c] = static_cast<double>(correct[c]) / static_cast<double>(support[c]);
  }
  return acc;
}

double overall_accuracy(const PredictionLog& log) {
  if (log.records.empty()) throw ValidationError("overall_accuracy: empty log");
  int64_t correct = 0;
  for (const auto& r : log.records) correct += r.predicted_label == r.true_label;
  return static_cast<double>(correct) / static_cast<double>(log.records.size());
}

RunGroup make_run_group(const std::string& model_kind, double temperature, double alpha,
                        const std::vector<uint64_t>& seeds,
                        const std::vector<PredictionLog>& logs) {
  if (logs.empty()) throw ValidationError("make_run_group: no logs");
  RunGroup g;
  g.model_kind = model_kind;
  g.temperature = temperature;
  g.alpha = alpha;
  g.seeds = seeds;
  const int k = logs.front().num_classes;
  g.class_support = class_support(logs.front(), k);
  for (const auto& log : logs) {
    if (class_support(log, k) != g.class_support) {
      throw ValidationError("make_run_group: runs were evaluated on different test sets");
    }
    g.class_accuracy.push_back(class_accuracies(log, k));
    g.overall_accuracy.push_back(overall_accuracy(log));
  }
  g.validate();
  return g;
}

double DisagreementMatrix::total() const {
  double t = 0.0;
  for (double v : counts) t += v;
  return t;
}

DisagreementMatrix disagreement_matrix(const PredictionLog& a, const PredictionLog& b,
                                       const std::string& pair) {
  if (a.num_classes != b.num_classes) throw ValidationError("disagreement: class count mismatch");
  if (a.records.size() != b.records.size()) {
    throw ValidationError("disagreement: logs cover different example sets");
  }
  std::unordered_map<int64_t, int> b_pred;
  b_pred.reserve(b.records.size());
  for (const auto& r : b.records) b_pred[r.example_id] = r.predicted_label;
  DisagreementMatrix m;
  m.num_classes = a.num_classes;
  m.pair = pair;
  m.counts.assign(static_cast<size_t>(m.num_classes) * m.num_classes, 0.0);
  for (const auto& r : a.records) {
    auto it = b_pred.find(r.example_id);
    if (it == b_pred.end()) {
      throw ValidationError("disagreement: example " + std::to_string(r.example_id) +
                            " missing from second log");
    }
    if (r.predicted_label != it->second) {
      m.counts[static_cast<size_t>(r.predicted_label) * m.num_classes + it->second] += 1.0;
    }
  }
  return m;
}

DisagreementMatrix average_matrices(const std::vector<DisagreementMatrix>& ms) {
  if (ms.empty()) throw ValidationError("average_matrices: empty list");
  DisagreementMatrix out;
  out.num_classes = ms.front().num_classes;
  out.pair = ms.front().pair;
  out.counts.assign(ms.front().counts.size(), 0.0);
  out.runs_averaged = 0;
  for (const auto& m : ms) {
    if (m.num_classes != out.num_classes || m.counts.size() != out.counts.size()) {
      throw ValidationError("average_matrices: class count mismatch");
    }
    if (m.pair != out.pair) throw ValidationError("average_matrices: model pair mismatch");
    for (size_t i = 0; i < m.counts.size(); ++i) out.counts[i] += m.counts[i];
    out.runs_averaged += m.runs_averaged;
  }
  for (double& v : out.counts) v /= static_cast<double>(ms.size());
  return out;
}

SignificanceReport significant_classes(const RunGroup& x, const RunGroup& y, double threshold) {
  if (x.num_classes() != y.num_classes()) {
    throw ValidationError("significant_classes: class count mismatch");
  }
  if (x.runs() != y.runs() || x.runs() < 2) {
    throw ValidationError("significant_classes: groups need the same run count, at least 2");
  }
  auto normalized = [](const RunGroup& g, int c) {
    std::vector<double> ratios;
    for (size_t r = 0; r < g.runs(); ++r) {
      if (g.overall_accuracy[r] == 0.0) {
        throw ValidationError("significant_classes: run " + std::to_string(r) + " of '" +
                              g.model_kind + "' has zero overall accuracy");
      }
      ratios.push_back(g.class_accuracy[r][c] / g.overall_accuracy[r]);
    }
    return ratios;
  };
  SignificanceReport report;
  report.threshold = threshold;
  for (int c = 0; c < x.num_classes(); ++c) {
    ClassSignificance s;
    s.label = c;
    s.test = welch_t_test(normalized(x, c), normalized(y, c));
    s.significant = s.test.p <= threshold;
    report.num_significant += s.significant;
    report.classes.push_back(s);
  }
  return report;
}

}  // namespace kdbias
