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

// Group fairness of hard predictions with respect to one demographic
// attribute: demographic parity difference (DPD), equalized odds difference
// (EOD) and their one-vs-rest averages for multiclass tasks.
//
// All rates are kept as integer ratios. A group whose conditioning cell is
// empty has an undefined rate and is left out of the max/min; a metric with
// fewer than two defined groups raises FairnessError instead of reporting 0.

#ifndef KDBIAS_FAIRNESS_H_
#define KDBIAS_FAIRNESS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kdbias/common.h"
#include "kdbias/prediction_log.h"

namespace kdbias {

class FairnessError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct Ratio {
  int64_t num = 0;
  int64_t den = 0;
  bool defined() const { return den > 0; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// max - min over the defined ratios, evaluated exactly and rounded once.
// nullopt when fewer than two ratios are defined.
std::optional<double> ratio_spread(const std::vector<Ratio>& ratios);

struct GroupRates {
  std::string attribute;
  int positive_class = 1;
  std::vector<int> groups;         // observed group indices, ascending
  std::vector<Ratio> positive;     // P(Yhat = 1 | A = a)
  std::vector<Ratio> tpr;          // P(Yhat = 1 | Y = 1, A = a)
  std::vector<Ratio> fpr;          // P(Yhat = 1 | Y = 0, A = a)
};

// Y = 1 iff true_label == positive_class, likewise for the prediction.
GroupRates group_rates(const PredictionLog& log, const std::string& attribute,
                       int positive_class);

double dpd(const PredictionLog& log, const std::string& attribute, int positive_class);

struct EodResult {
  double tpr_diff = 0.0;
  double fpr_diff = 0.0;
  double eod = 0.0;
};

EodResult eod(const PredictionLog& log, const std::string& attribute, int positive_class);

enum class FairnessMetric { kDpd, kEod };

struct ClassFairness {
  int label = 0;
  std::optional<double> dpd;
  std::optional<double> eod;
  std::optional<double> tpr_diff;
  std::optional<double> fpr_diff;
};

struct FairnessReport {
  std::string attribute;
  std::optional<double> dpd;
  std::optional<double> eod;
  std::optional<double> tpr_diff;  // one-vs-rest means
  std::optional<double> fpr_diff;
  std::vector<ClassFairness> per_class;
  std::vector<int> groups_used;
};

// One-vs-rest: binarize labels and predictions per class, compute the
// metric, and return the unweighted mean over classes with the per-class
// breakdown. A failing class aborts with FairnessError naming the class.
FairnessReport multiclass_fairness(const PredictionLog& log, const std::string& attribute,
                                   FairnessMetric metric);

// Both metrics in one report.
FairnessReport fairness_report(const PredictionLog& log, const std::string& attribute);

struct FairnessRow {
  std::string model;       // "teacher", "nds", "ds"
  double temperature = 0;  // 0 for baselines
  double acc_mean = 0, acc_std = 0;
  std::optional<double> eod_mean, eod_std;
  std::optional<double> dpd_mean, dpd_std;
};

// Per model kind and temperature: mean and sample std over runs of test
// accuracy, EOD and DPD (fractions). Baselines come first, then DS rows in
// ascending temperature.
std::vector<FairnessRow> fairness_sweep(
    const std::vector<PredictionLog>& teacher_logs, const std::vector<PredictionLog>& nds_logs,
    const std::map<double, std::vector<PredictionLog>>& ds_logs_by_temperature,
    const std::string& attribute);

// model,temperature,test_acc_mean,test_acc_std,eod_mean,eod_std,dpd_mean,dpd_std
// with every value in percent at two decimals.
std::string format_fairness_table(const std::vector<FairnessRow>& rows,
                                  const std::string& manifest_hash = "");

}  // namespace kdbias

#endif  // KDBIAS_FAIRNESS_H_
