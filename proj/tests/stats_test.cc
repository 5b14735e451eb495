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

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kdbias/common.h"
#include "kdbias/stats.h"
#include "oracles.h"

using namespace kdbias;

TEST_CASE("incomplete beta edge values") {
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1, 1) = x; I_x(a, 1) = x^a.
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-14));
  CHECK(regularized_incomplete_beta(3.0, 1.0, 0.5) == doctest::Approx(0.125).epsilon(1e-14));
  // Symmetry I_x(a, b) = 1 - I_{1-x}(b, a).
  CHECK(regularized_incomplete_beta(2.5, 4.0, 0.3) ==
        doctest::Approx(1.0 - regularized_incomplete_beta(4.0, 2.5, 0.7)).epsilon(1e-13));
}

TEST_CASE("student t cdf examples") {
  for (double df : {0.5, 1.0, 4.0, 30.0}) CHECK(student_t_cdf(0.0, df) == 0.5);
  CHECK(std::abs(student_t_cdf(1e6, 5.0) - 1.0) < 1e-12);
  CHECK(student_t_cdf(1.0, 1.0) == doctest::Approx(0.5 + std::atan(1.0) / std::numbers::pi).epsilon(1e-13));
  CHECK(std::abs(student_t_cdf(2.776, 4.0) - 0.975) < 5e-4);
  CHECK(std::abs(student_t_two_sided_p(2.776, 4.0) - 0.05) < 1e-3);
  CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(student_t_cdf(1.0, -2.0), ValidationError);
}

TEST_CASE("student t cdf matches quadrature oracle") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> tu(-12, 12), du(0.6, 60);
  for (int i = 0; i < 60; ++i) {
    const double t = tu(gen), df = du(gen);
    CHECK(std::abs(student_t_cdf(t, df) - static_cast<double>(oracle::t_cdf(t, df))) < 1e-10);
  }
}

TEST_CASE("welch fixed example") {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 3, 4, 5, 6};
  const auto r = welch_t_test(a, b);
  CHECK(r.t == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(r.df == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(std::abs(r.p - 0.3466) < 1e-3);
  CHECK(std::abs(r.p - static_cast<double>(oracle::welch(a, b).p)) < 1e-9);
  CHECK(r.var_a == 2.5);
  CHECK(r.n_a == 5);
}

TEST_CASE("welch identical samples") {
  const std::vector<double> a = {0.3, 0.9, 0.5};
  const auto r = welch_t_test(a, a);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);
}

TEST_CASE("welch degenerate variances") {
  const std::vector<double> a = {0.5, 0.5, 0.5}, b = {0.5, 0.5};
  auto r = welch_t_test(a, b);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);
  CHECK(r.df == 3.0);
  const std::vector<double> c = {0.7, 0.7};
  r = welch_t_test(a, c);
  CHECK(std::isinf(r.t));
  CHECK(r.t < 0);
  CHECK(r.p == 0.0);
  CHECK(welch_t_test(c, a).t > 0);
}

TEST_CASE("welch rejects tiny samples") {
  const std::vector<double> one = {1.0}, two = {1.0, 2.0};
  CHECK_THROWS_AS(welch_t_test(one, two), ValidationError);
  CHECK_THROWS_AS(welch_t_test(two, one), ValidationError);
}

TEST_CASE("welch matches oracle on random samples") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> a(2 + gen() % 19), b(2 + gen() % 19);
    const double shift = n(gen);
    for (auto& v : a) v = n(gen);
    for (auto& v : b) v = 1.5 * n(gen) + shift;
    const auto r = welch_t_test(a, b);
    const auto o = oracle::welch(a, b);
    CHECK(std::abs(r.p - static_cast<double>(o.p)) < 1e-9);
    CHECK(r.t == doctest::Approx(static_cast<double>(o.t)).epsilon(1e-12));
    CHECK(r.df == doctest::Approx(static_cast<double>(o.df)).epsilon(1e-12));
  }
}

TEST_CASE("welch symmetry and invariances") {
  const std::vector<double> a = {0.91, 0.88, 0.95, 0.9}, b = {0.8, 0.86, 0.83, 0.79, 0.84};
  const auto ab = welch_t_test(a, b), ba = welch_t_test(b, a);
  CHECK(ab.t == -ba.t);
  CHECK(ab.df == ba.df);
  CHECK(ab.p == ba.p);
  std::vector<double> a2, b2;
  for (double v : a) a2.push_back(3.0 * v + 10.0);
  for (double v : b) b2.push_back(3.0 * v + 10.0);
  CHECK(welch_t_test(a2, b2).p == doctest::Approx(ab.p).epsilon(1e-10));
}

TEST_CASE("descriptive statistics") {
  const std::vector<double> x = {1, 2, 3, 4};
  CHECK(mean(x) == 2.5);
  CHECK(sample_variance(x) == doctest::Approx(5.0 / 3).epsilon(1e-15));
  CHECK(sample_std(x) == doctest::Approx(std::sqrt(5.0 / 3)).epsilon(1e-15));
  const std::vector<double> y = {10, 20, 30, 40}, z = {4, 3, 2, 1};
  CHECK(spearman(x, y) == doctest::Approx(1.0));
  CHECK(spearman(x, z) == doctest::Approx(-1.0));
  // Ties get average ranks.
  const std::vector<double> u = {1, 2, 2, 3}, v = {1, 2, 3, 4};
  CHECK(spearman(u, v) == doctest::Approx(0.9486832980505138).epsilon(1e-12));
  CHECK(std::isnan(spearman(v, std::vector<double>{1, 1, 1, 1})));
}
