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
#include <random>

#include "doctest.h"
#include "kdbias/common.h"
#include "kdbias/nn.h"
#include "oracles.h"

using namespace kdbias;

namespace {

struct Toy {
  std::vector<std::vector<double>> pixels;
  std::vector<std::vector<double>> probs;
  std::vector<BatchItem> batch;
};

Toy make_toy(const InputShape& in, int k, int n, double t, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Toy toy;
  for (int i = 0; i < n; ++i) {
    std::vector<double> px(in.size());
    for (auto& v : px) v = u(gen);
    toy.pixels.push_back(px);
    std::vector<double> z(k);
    for (auto& v : z) v = 4 * u(gen) - 2;
    toy.probs.push_back(softmax_t(z, t));
  }
  for (int i = 0; i < n; ++i) {
    toy.batch.push_back({toy.pixels[i], static_cast<int>(gen() % k), toy.probs[i]});
  }
  return toy;
}

}  // namespace

TEST_CASE("softmax_t examples") {
  for (double t : {0.5, 1.0, 7.0}) {
    const auto p = softmax_t(std::vector<double>{0, 0}, t);
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
  }
  const auto p = softmax_t(std::vector<double>{1, 0}, 1.0);
  CHECK(p[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1)).epsilon(1e-12));
  CHECK(std::abs(p[0] - 0.73106) < 1e-5);
  CHECK(std::abs(p[1] - 0.26894) < 1e-5);
  for (double v : softmax_t(std::vector<double>{5, -3, 1}, 1e6)) CHECK(std::abs(v - 1.0 / 3) < 1e-5);
}

TEST_CASE("softmax_t is stable at small temperature") {
  const auto p = softmax_t(std::vector<double>{1000, 0, -1000}, 1.0);
  CHECK(p[0] == 1.0);
  CHECK(p[2] == 0.0);
}

TEST_CASE("softmax_t rejects bad input") {
  CHECK_THROWS_AS(softmax_t(std::vector<double>{1, 2}, 0.0), ValidationError);
  CHECK_THROWS_AS(softmax_t(std::vector<double>{1, 2}, -1.0), ValidationError);
  CHECK_THROWS_AS(softmax_t(std::vector<double>{1, NAN}, 1.0), ValidationError);
  CHECK_THROWS_AS(softmax_t(std::vector<double>{INFINITY, 0}, 1.0), ValidationError);
}

TEST_CASE("softmax_t matches extended-precision oracle") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(2 + trial % 9);
    for (auto& v : z) v = u(gen);
    const double t = 1 + trial % 40;
    const auto p = softmax_t(z, t);
    const auto q = oracle::softmax(z, t);
    for (size_t i = 0; i < z.size(); ++i) CHECK(std::abs(p[i] - static_cast<double>(q[i])) < 1e-14);
  }
}

TEST_CASE("hard cross-entropy examples") {
  for (int label = 0; label < 4; ++label) {
    CHECK(cross_entropy_hard(std::vector<double>{0.3, 0.3, 0.3, 0.3}, label) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));
  }
  CHECK(cross_entropy_hard(std::vector<double>{10, -10}, 0) < 1e-4);
  const double ce = cross_entropy_hard(std::vector<double>{1, 0, 0}, 0);
  CHECK(std::abs(ce - 0.55145) < 1e-4);
  CHECK(ce == doctest::Approx(std::log(std::exp(1.0) + 2.0) - 1.0).epsilon(1e-14));
  CHECK_THROWS_AS(cross_entropy_hard(std::vector<double>{1, 0}, 2), ValidationError);
  CHECK_THROWS_AS(cross_entropy_hard(std::vector<double>{1, 0}, -1), ValidationError);
}

TEST_CASE("soft cross-entropy examples") {
  // One-hot teacher, uniform student.
  CHECK(cross_entropy_soft(std::vector<double>{2, 2, 2}, std::vector<double>{0, 1, 0}, 3.0) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));
  // Self-consistency: equals the entropy.
  const std::vector<double> z = {0.5, -1.0, 2.0, 0.0};
  const auto p = softmax_t(z, 2.5);
  double h = 0;
  for (double v : p) h -= v * std::log(v);
  CHECK(cross_entropy_soft(z, p, 2.5) == doctest::Approx(h).epsilon(1e-13));
  // Teacher z=[1,0], student z=[0,1], T=2, evaluated directly.
  const auto q = softmax_t(std::vector<double>{1, 0}, 2.0);
  const auto s = softmax_t(std::vector<double>{0, 1}, 2.0);
  const double direct = -(q[0] * std::log(s[0]) + q[1] * std::log(s[1]));
  const double got = cross_entropy_soft(std::vector<double>{0, 1}, q, 2.0);
  CHECK(got == doctest::Approx(direct).epsilon(1e-14));
  CHECK(std::abs(got - 0.785307) < 1e-6);
  CHECK_THROWS_AS(cross_entropy_soft(std::vector<double>{0, 1}, q, 0.0), ValidationError);
}

TEST_CASE("total_loss examples") {
  CHECK(total_loss(0.0, 3.0, 0.7, 5.0, true) == 0.7);
  CHECK(total_loss(1.0, 3.0, 0.7, 5.0, false) == 3.0);
  CHECK(total_loss(0.8, 1.0, 0.5, 4.0, true) == doctest::Approx(12.9).epsilon(1e-14));
  CHECK(total_loss(0.8, 1.0, 0.5, 4.0, false) == doctest::Approx(0.9).epsilon(1e-14));
  CHECK_THROWS_AS(total_loss(1.5, 1.0, 0.5, 4.0, false), ValidationError);
}

TEST_CASE("learning rate schedule and sgd") {
  TrainConfig cfg;
  cfg.base_lr = 0.1;
  cfg.lr_drop_epochs = {30, 60, 90};
  cfg.lr_drop_factor = 10;
  CHECK(learning_rate(45, cfg) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(learning_rate(29, cfg) == 0.1);
  CHECK(learning_rate(30, cfg) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(learning_rate(95, cfg) == doctest::Approx(0.0001).epsilon(1e-15));

  ModelParams p = init_params(student_architecture(2), {2, 2, 1}, 5);
  const auto before = p.values;
  cfg.weight_decay = 0;
  sgd_step(p, std::vector<double>(p.values.size(), 0.0), 0, cfg);
  CHECK(p.values == before);

  cfg.weight_decay = 0.001;
  std::fill(p.values.begin(), p.values.end(), 1.0);
  sgd_step(p, std::vector<double>(p.values.size(), 0.0), 0, cfg);
  for (double v : p.values) CHECK(v == doctest::Approx(0.9999).epsilon(1e-15));
}

TEST_CASE("argmax and predict tie rule") {
  CHECK(argmax(std::vector<double>{0.1, 3.0, -1}) == 1);
  CHECK(argmax(std::vector<double>{2, 2, 2}) == 0);
  CHECK(argmax(std::vector<double>{1, 3, 3}) == 1);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> z(5);
    for (auto& v : z) v = n(gen);
    for (double t : {0.5, 1.0, 10.0, 1000.0}) CHECK(argmax(softmax_t(z, t)) == argmax(z));
  }
}

TEST_CASE("zero-weight dense layer bias gradient is softmax(0) - onehot") {
  Architecture arch{{{LayerKind::kDense, 3}}};
  ModelParams p = init_params(arch, {1, 1, 2}, 1);
  std::fill(p.values.begin(), p.values.end(), 0.0);
  const std::vector<double> x1 = {0.3, 0.9}, x2 = {0.5, 0.1};
  std::vector<BatchItem> batch = {{x1, 0, {}}, {x2, 2, {}}};
  std::vector<double> g;
  backward(p, batch, LossSpec{}, g);
  const auto& layer = p.layers[0];
  CHECK(g[layer.bias_offset + 0] == doctest::Approx((1.0 / 3 - 1) / 2 + (1.0 / 3) / 2));
  CHECK(g[layer.bias_offset + 1] == doctest::Approx(1.0 / 3));
  CHECK(g[layer.bias_offset + 2] == doctest::Approx((1.0 / 3) / 2 + (1.0 / 3 - 1) / 2));
}

TEST_CASE("analytic gradients match finite differences") {
  const std::vector<LossSpec> modes = {
      {LossMode::kHardOnly, 1.0, 0.0, false},
      {LossMode::kDistill, 4.0, 0.8, false},
      {LossMode::kDistill, 4.0, 0.8, true},
  };
  const InputShape in{5, 5, 3};
  int checked = 0;
  for (int net = 0; net < 3; ++net) {
    const Architecture arch = net == 0 ? teacher_architecture(3) : student_architecture(3);
    for (const auto& mode : modes) {
      Toy toy = make_toy(in, 3, 4, mode.temperature, 100 + net);
      ModelParams p = init_params(arch, in, 7 + net);
      std::vector<double> g;
      backward(p, toy.batch, mode, g);
      std::mt19937_64 gen(net);
      for (int c = 0; c < 16; ++c) {
        const size_t idx = gen() % p.values.size();
        const double fd = oracle::fd_gradient(p, toy.batch, mode, idx, 1e-4);
        const double scale = std::max({std::abs(fd), std::abs(g[idx]), 1e-6});
        CHECK(std::abs(fd - g[idx]) / scale < 1e-4);
        ++checked;
      }
    }
  }
  CHECK(checked == 144);
}

TEST_CASE("distill with alpha 0 gives hard-only gradients exactly") {
  const InputShape in{4, 4, 3};
  Toy toy = make_toy(in, 3, 5, 3.0, 9);
  ModelParams p = init_params(teacher_architecture(3), in, 2);
  std::vector<double> g_hard, g_dist;
  const double l1 = backward(p, toy.batch, {LossMode::kHardOnly, 1.0, 0.0, false}, g_hard);
  const double l2 = backward(p, toy.batch, {LossMode::kDistill, 3.0, 0.0, true}, g_dist);
  CHECK(l1 == l2);
  CHECK(g_hard == g_dist);
}

TEST_CASE("init is seeded and He-uniform") {
  const InputShape in{6, 6, 3};
  const auto a = init_params(teacher_architecture(4), in, 11);
  const auto b = init_params(teacher_architecture(4), in, 11);
  const auto c = init_params(teacher_architecture(4), in, 12);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  for (const auto& layer : a.layers) {
    const double fan_in = static_cast<double>(layer.weight_count()) / layer.spec.outputs;
    const double bound = std::sqrt(6.0 / fan_in);
    for (size_t i = 0; i < layer.weight_count(); ++i) {
      CHECK(std::abs(a.values[layer.weight_offset + i]) <= bound);
    }
    for (int i = 0; i < layer.out_c; ++i) CHECK(a.values[layer.bias_offset + i] == 0.0);
  }
  CHECK(a.num_classes() == 4);
  CHECK(a.layers[1].out_h == 3);  // stride-2 conv halves the map
}

TEST_CASE("checkpoint round trip") {
  const InputShape in{6, 6, 3};
  const auto p = init_params(teacher_architecture(4), in, 3);
  const auto bytes = serialize_params(p);
  CHECK(bytes.substr(0, 8) == "KDBMODL1");
  const auto q = deserialize_params(bytes);
  CHECK(q.values == p.values);
  CHECK(q.checksum() == p.checksum());
  CHECK(q.layers.size() == p.layers.size());
  CHECK_THROWS(deserialize_params(bytes.substr(0, bytes.size() - 3)));
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS(deserialize_params(bad));
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.validate();
  c.temperature = 0.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.temperature = 1.0;
  c.alpha = 1.2;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.alpha = 0.5;
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}
