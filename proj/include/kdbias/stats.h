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

// Student-t distribution, Welch's unequal-variance t-test and a few sample
// statistics used by the analyses.

#ifndef KDBIAS_STATS_H_
#define KDBIAS_STATS_H_

#include <span>

namespace kdbias {

// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double regularized_incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with `df` degrees of freedom (df > 0).
double student_t_cdf(double t, double df);

// Two-sided tail probability P(|T| >= |t|).
double student_t_two_sided_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double mean_a = 0.0, mean_b = 0.0;
  double var_a = 0.0, var_b = 0.0;
  int n_a = 0, n_b = 0;
};

// Two-tailed Welch test with unbiased variances and Welch-Satterthwaite df.
// When both variances are zero: equal means give t = 0, p = 1; unequal means
// give t = +/-inf, p = 0. df is n_a + n_b - 2 in both cases.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
// Unbiased (n - 1); zero for fewer than two samples.
double sample_variance(std::span<const double> x);
double sample_std(std::span<const double> x);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace kdbias

#endif  // KDBIAS_STATS_H_
