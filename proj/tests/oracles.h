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

// Reference implementations used only by tests. They share no code with the
// library: straight-line formulas, brute-force enumeration and numerical
// quadrature in extended precision.

#ifndef KDBIAS_TESTS_ORACLES_H_
#define KDBIAS_TESTS_ORACLES_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kdbias/nn.h"
#include "kdbias/prediction_log.h"

namespace oracle {

std::vector<long double> softmax(const std::vector<double>& z, long double t);

// Student-t CDF by adaptive Simpson quadrature of the density.
long double t_cdf(long double t, long double df);

struct Welch {
  long double t, df, p;
};
// Requires nonzero pooled variance.
Welch welch(const std::vector<double>& a, const std::vector<double>& b);

// Exact rational max - min of P(Yhat = pos | A = g) over groups with members.
std::optional<double> dpd(const kdbias::PredictionLog& log, int attr, int pos);
struct Eod {
  double tpr, fpr, eod;
};
std::optional<Eod> eod(const kdbias::PredictionLog& log, int attr, int pos);
// Unweighted one-vs-rest mean, summed in class order.
std::optional<double> multiclass_dpd(const kdbias::PredictionLog& log, int attr);
std::optional<double> multiclass_eod(const kdbias::PredictionLog& log, int attr);

// Counts[i*K + j] over rows where a predicts i and b predicts j != i.
std::vector<double> disagreement(const kdbias::PredictionLog& a, const kdbias::PredictionLog& b);

// Central difference of the mean batch loss at one coordinate.
double fd_gradient(kdbias::ModelParams params, std::span<const kdbias::BatchItem> batch,
                   const kdbias::LossSpec& loss, size_t index, double h);

// Plain forward pass: logits plus the sign of every hidden pre-activation.
struct Forward {
  std::vector<double> logits;
  std::vector<bool> active;
};
Forward forward(const kdbias::ModelParams& params, std::span<const double> pixels);

// True when moving coordinate `index` by +/-h flips no hidden unit on any
// batch example, so the loss is smooth across the difference stencil.
bool smooth_at(kdbias::ModelParams params, std::span<const kdbias::BatchItem> batch, size_t index,
               double h);

// Random log with K classes and `groups` groups in one attribute "a".
kdbias::PredictionLog random_log(uint64_t seed, int rows, int k, int groups);

}  // namespace oracle

#endif  // KDBIAS_TESTS_ORACLES_H_
