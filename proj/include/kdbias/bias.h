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

// Class-level bias analysis: class-wise accuracies, prediction disagreement
// matrices between two models, and per-class Welch tests on accuracies
// normalized by each run's overall accuracy.

#ifndef KDBIAS_BIAS_H_
#define KDBIAS_BIAS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "kdbias/prediction_log.h"
#include "kdbias/stats.h"

namespace kdbias {

// Accuracies of R independently seeded runs of one model kind.
struct RunGroup {
  std::string model_kind;  // "teacher", "nds" or "ds"
  double temperature = 0.0;  // 0 when not distilled
  double alpha = 0.0;
  std::vector<uint64_t> seeds;
  std::vector<std::vector<double>> class_accuracy;  // R x K
  std::vector<double> overall_accuracy;             // R
  std::vector<int64_t> class_support;               // K test instances per class

  size_t runs() const { return overall_accuracy.size(); }
  int num_classes() const { return static_cast<int>(class_support.size()); }
  // Shapes agree and every overall accuracy equals the support-weighted mean
  // of its class accuracies within 1e-12.
  void validate() const;
};

// Fraction of each class's instances predicted correctly. Throws if a class
// has no instances.
std::vector<double> class_accuracies(const PredictionLog& log, int num_classes);
double overall_accuracy(const PredictionLog& log);
std::vector<int64_t> class_support(const PredictionLog& log, int num_classes);

// Builds a group from one test log per run.
RunGroup make_run_group(const std::string& model_kind, double temperature, double alpha,
                        const std::vector<uint64_t>& seeds,
                        const std::vector<PredictionLog>& logs);

struct DisagreementMatrix {
  int num_classes = 0;
  // Row-major K x K; entry (i, j) counts instances where model A predicted i
  // and model B predicted j, i != j. The diagonal is always zero.
  std::vector<double> counts;
  std::string pair;  // e.g. "teacher-vs-ds"
  int runs_averaged = 1;

  double at(int i, int j) const { return counts[static_cast<size_t>(i) * num_classes + j]; }
  double total() const;
};

// Logs must cover the same example ids.
DisagreementMatrix disagreement_matrix(const PredictionLog& a, const PredictionLog& b,
                                       const std::string& pair = "");
DisagreementMatrix average_matrices(const std::vector<DisagreementMatrix>& ms);

struct ClassSignificance {
  int label = 0;
  TTestResult test;
  bool significant = false;
};

struct SignificanceReport {
  std::vector<ClassSignificance> classes;
  double threshold = 0.05;
  int num_significant = 0;
};

// Per class, compares {class_acc / overall_acc} of the runs in x against
// those in y with a two-tailed Welch test; significant iff p <= threshold.
SignificanceReport significant_classes(const RunGroup& x, const RunGroup& y,
                                       double threshold = 0.05);

}  // namespace kdbias

#endif  // KDBIAS_BIAS_H_
