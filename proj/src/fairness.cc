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

#include "kdbias/fairness.h"

#include <algorithm>
#include <array>
#include <sstream>

#include "kdbias/bias.h"
#include "kdbias/io.h"
#include "kdbias/stats.h"

namespace kdbias {
namespace {

// a < b for nonnegative ratios with positive denominators.
bool less(const Ratio& a, const Ratio& b) {
  return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

std::string temperature_label(double t) { return io::format_double(t); }

struct Summary {
  std::optional<double> mean, std;
};

Summary summarize(const std::vector<std::optional<double>>& values) {
  std::vector<double> v;
  for (const auto& x : values) {
    if (!x) return {};
    v.push_back(*x);
  }
  if (v.empty()) return {};
  return {kdbias::mean(v), sample_std(v)};
}

}  // namespace

std::optional<double> ratio_spread(const std::vector<Ratio>& ratios) {
  const Ratio* lo = nullptr;
  const Ratio* hi = nullptr;
  int defined = 0;
  for (const auto& r : ratios) {
    if (!r.defined()) continue;
    ++defined;
    if (!lo || less(r, *lo)) lo = &r;
    if (!hi || less(*hi, r)) hi = &r;
  }
  if (defined < 2) return std::nullopt;
  const __int128 num = static_cast<__int128>(hi->num) * lo->den -
                       static_cast<__int128>(lo->num) * hi->den;
  const __int128 den = static_cast<__int128>(hi->den) * lo->den;
  return static_cast<double>(num) / static_cast<double>(den);
}

GroupRates group_rates(const PredictionLog& log, const std::string& attribute,
                       int positive_class) {
  const int a = log.attribute_index(attribute);
  if (positive_class < 0 || positive_class >= log.num_classes) {
    throw ValidationError("positive class " + std::to_string(positive_class) + " out of range");
  }
  std::map<int, std::array<int64_t, 6>> cells;  // pos, n, tp, n_y1, fp, n_y0
  for (const auto& r : log.records) {
    auto& c = cells[r.attributes[a]];
    const bool y = r.true_label == positive_class;
    const bool y_hat = r.predicted_label == positive_class;
    c[0] += y_hat;
    c[1] += 1;
    if (y) {
      c[2] += y_hat;
      c[3] += 1;
    } else {
      c[4] += y_hat;
      c[5] += 1;
    }
  }
  GroupRates g;
  g.attribute = attribute;
  g.positive_class = positive_class;
  for (const auto& [group, c] : cells) {
    g.groups.push_back(group);
    g.positive.push_back({c[0], c[1]});
    g.tpr.push_back({c[2], c[3]});
    g.fpr.push_back({c[4], c[5]});
  }
  return g;
}

double dpd(const PredictionLog& log, const std::string& attribute, int positive_class) {
  const auto rates = group_rates(log, attribute, positive_class);
  const auto spread = ratio_spread(rates.positive);
  if (!spread) {
    throw FairnessError("DPD on '" + attribute + "' needs at least 2 groups with members");
  }
  return *spread;
}

EodResult eod(const PredictionLog& log, const std::string& attribute, int positive_class) {
  const auto rates = group_rates(log, attribute, positive_class);
  const auto tpr = ratio_spread(rates.tpr);
  const auto fpr = ratio_spread(rates.fpr);
  if (!tpr) throw FairnessError("EOD on '" + attribute + "': fewer than 2 groups with defined TPR");
  if (!fpr) throw FairnessError("EOD on '" + attribute + "': fewer than 2 groups with defined FPR");
  return {*tpr, *fpr, std::max(*tpr, *fpr)};
}

FairnessReport multiclass_fairness(const PredictionLog& log, const std::string& attribute,
                                   FairnessMetric metric) {
  if (log.num_classes < 2) throw ValidationError("multiclass_fairness: need K >= 2");
  FairnessReport report;
  report.attribute = attribute;
  double dpd_sum = 0.0, eod_sum = 0.0, tpr_sum = 0.0, fpr_sum = 0.0;
  for (int c = 0; c < log.num_classes; ++c) {
    ClassFairness cf;
    cf.label = c;
    try {
      if (metric == FairnessMetric::kDpd) {
        cf.dpd = dpd(log, attribute, c);
        dpd_sum += *cf.dpd;
      } else {
        const auto e = eod(log, attribute, c);
        cf.eod = e.eod;
        cf.tpr_diff = e.tpr_diff;
        cf.fpr_diff = e.fpr_diff;
        eod_sum += e.eod;
        tpr_sum += e.tpr_diff;
        fpr_sum += e.fpr_diff;
      }
    } catch (const FairnessError& e) {
      throw FairnessError("class " + std::to_string(c) + ": " + e.what());
    }
    report.per_class.push_back(cf);
  }
  const double k = static_cast<double>(log.num_classes);
  if (metric == FairnessMetric::kDpd) {
    report.dpd = dpd_sum / k;
  } else {
    report.eod = eod_sum / k;
    report.tpr_diff = tpr_sum / k;
    report.fpr_diff = fpr_sum / k;
  }
  report.groups_used = group_rates(log, attribute, 0).groups;
  return report;
}

FairnessReport fairness_report(const PredictionLog& log, const std::string& attribute) {
  FairnessReport r = multiclass_fairness(log, attribute, FairnessMetric::kDpd);
  const FairnessReport e = multiclass_fairness(log, attribute, FairnessMetric::kEod);
  r.eod = e.eod;
  r.tpr_diff = e.tpr_diff;
  r.fpr_diff = e.fpr_diff;
  for (size_t c = 0; c < r.per_class.size(); ++c) {
    r.per_class[c].eod = e.per_class[c].eod;
    r.per_class[c].tpr_diff = e.per_class[c].tpr_diff;
    r.per_class[c].fpr_diff = e.per_class[c].fpr_diff;
  }
  return r;
}

std::vector<FairnessRow> fairness_sweep(
    const std::vector<PredictionLog>& teacher_logs, const std::vector<PredictionLog>& nds_logs,
    const std::map<double, std::vector<PredictionLog>>& ds_logs_by_temperature,
    const std::string& attribute) {
  if (teacher_logs.empty()) throw ValidationError("fairness_sweep: missing teacher baseline logs");
  if (nds_logs.empty()) throw ValidationError("fairness_sweep: missing non-distilled baseline logs");
  auto row = [&](const std::string& model, double t, const std::vector<PredictionLog>& logs) {
    FairnessRow r;
    r.model = model;
    r.temperature = t;
    std::vector<double> acc;
    std::vector<std::optional<double>> eods, dpds;
    for (const auto& log : logs) {
      acc.push_back(overall_accuracy(log));
      try {
        dpds.push_back(multiclass_fairness(log, attribute, FairnessMetric::kDpd).dpd);
      } catch (const FairnessError&) {
        dpds.push_back(std::nullopt);
      }
      try {
        eods.push_back(multiclass_fairness(log, attribute, FairnessMetric::kEod).eod);
      } catch (const FairnessError&) {
        eods.push_back(std::nullopt);
      }
    }
    r.acc_mean = mean(acc);
    r.acc_std = sample_std(acc);
    const auto e = summarize(eods);
    const auto d = summarize(dpds);
    r.eod_mean = e.mean;
    r.eod_std = e.std;
    r.dpd_mean = d.mean;
    r.dpd_std = d.std;
    return r;
  };
  std::vector<FairnessRow> rows;
  rows.push_back(row("teacher", 0.0, teacher_logs));
  rows.push_back(row("nds", 0.0, nds_logs));
  for (const auto& [t, logs] : ds_logs_by_temperature) {
    if (logs.empty()) throw ValidationError("fairness_sweep: no logs at T=" + temperature_label(t));
    rows.push_back(row("ds", t, logs));
  }
  return rows;
}

std::string format_fairness_table(const std::vector<FairnessRow>& rows,
                                  const std::string& manifest_hash) {
  std::ostringstream out;
  if (!manifest_hash.empty()) out << "# manifest_hash=" << manifest_hash << "\n";
  out << "model,temperature,test_acc_mean,test_acc_std,eod_mean,eod_std,dpd_mean,dpd_std\n";
  auto pct = [](const std::optional<double>& v) {
    return v ? io::format_fixed(100.0 * *v, 2) : std::string("NA");
  };
  for (const auto& r : rows) {
    out << r.model << "," << (r.model == "ds" ? temperature_label(r.temperature) : "")
        << "," << io::format_fixed(100.0 * r.acc_mean, 2) << ","
        << io::format_fixed(100.0 * r.acc_std, 2) << "," << pct(r.eod_mean) << ","
        << pct(r.eod_std) << "," << pct(r.dpd_mean) << "," << pct(r.dpd_std) << "\n";
  }
  return out.str();
}

}  // namespace kdbias
