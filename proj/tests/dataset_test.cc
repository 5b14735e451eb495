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

#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "kdbias/common.h"
#include "kdbias/dataset.h"
#include "kdbias/io.h"

using namespace kdbias;

namespace {

GenerationConfig small_config() {
  GenerationConfig c;
  c.image_size = 8;
  c.samples_per_cell = 10;
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("kdbias_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

Dataset with_counts(const std::vector<int>& counts) {
  Dataset d;
  d.num_classes = static_cast<int>(counts.size());
  d.attributes = {{"g", 2}};
  d.height = d.width = 1;
  d.channels = 1;
  int64_t id = 0;
  for (int c = 0; c < d.num_classes; ++c) {
    for (int i = 0; i < counts[c]; ++i, ++id) {
      d.examples.push_back({id * 3 + 1, {static_cast<double>(id) / 1000.0}, c, {static_cast<int>(id % 2)}});
    }
  }
  return d;
}

}  // namespace

TEST_CASE("exact enumeration without imbalance") {
  const Dataset d = generate_trifeature(small_config(), 1);
  d.validate();
  CHECK(d.size() == 640);
  CHECK(d.class_counts() == std::vector<int64_t>{160, 160, 160, 160});
  std::map<std::vector<int>, int> cells;
  for (const auto& e : d.examples) ++cells[e.attributes];
  CHECK(cells.size() == 64);
  for (const auto& [cell, n] : cells) CHECK(n == 10);
  CHECK(d.attributes[0].name == "shape");
  CHECK(d.attributes[2].num_groups == 4);
  for (const auto& e : d.examples) CHECK(e.label == e.attributes[0]);
}

TEST_CASE("generation is deterministic in seed") {
  const Dataset a = generate_trifeature(small_config(), 9);
  const Dataset b = generate_trifeature(small_config(), 9);
  const Dataset c = generate_trifeature(small_config(), 10);
  REQUIRE(a.size() == b.size());
  bool all_same = true, any_diff = false;
  for (size_t i = 0; i < a.size(); ++i) {
    all_same = all_same && a.examples[i].pixels == b.examples[i].pixels;
    any_diff = any_diff || a.examples[i].pixels != c.examples[i].pixels;
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("imbalance hits target proportions") {
  GenerationConfig c = small_config();
  c.num_colors = 2;
  c.samples_per_cell = 60;
  c.attribute_names = {{"color", "age-proxy"}};
  c.imbalance = {{"age-proxy", {0.7785, 0.2215}}};
  const Dataset d = generate_trifeature(c, 3);
  d.validate();
  const int a = d.attribute_index("age-proxy");
  double minority = 0;
  for (const auto& e : d.examples) minority += e.attributes[a] == 1;
  const double share = minority / static_cast<double>(d.size());
  CHECK(std::abs(share - 0.2215) < 0.01);
  CHECK(d.size() == static_cast<size_t>(c.total_examples()));
  // Class balance survives the imbalance.
  for (auto n : d.class_counts()) CHECK(std::abs(static_cast<double>(n) - d.size() / 4.0) <= 1.0);
}

TEST_CASE("label-group correlation") {
  GenerationConfig c = small_config();
  c.num_colors = 2;
  c.label_group_correlation = 1.0;
  c.correlated_attribute = "color";
  const Dataset d = generate_trifeature(c, 4);
  for (const auto& e : d.examples) CHECK(e.attributes[2] == e.label % 2);
  c.label_group_correlation = 0.0;
  c.correlated_attribute.clear();
  CHECK(generate_trifeature(c, 4).size() == d.size());
}

TEST_CASE("generation config validation names the field") {
  GenerationConfig c = small_config();
  c.imbalance = {{"color", {0.5, 0.2, 0.1, 0.1}}};
  try {
    c.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("imbalance.color") != std::string::npos);
    CHECK(what.find("0.9") != std::string::npos);
  }
  c = small_config();
  c.num_shapes = 11;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("num_shapes"), ValidationError);
  c = small_config();
  c.num_textures = 1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = small_config();
  c.label_group_correlation = 1.5;
  c.correlated_attribute = "color";
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = small_config();
  c.label_attribute = "size";
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("balance_by_label") {
  const Dataset even = with_counts({100, 100});
  const Dataset same = balance_by_label(even, 1);
  CHECK(same.size() == 200);

  const Dataset d = balance_by_label(with_counts({100, 60}), 2);
  CHECK(d.class_counts() == std::vector<int64_t>{60, 60});

  const Dataset src = with_counts({50, 30, 20});
  const Dataset a = balance_by_label(src, 5);
  const Dataset b = balance_by_label(src, 5);
  CHECK(a.class_counts() == std::vector<int64_t>{20, 20, 20});
  std::vector<int64_t> ids_a, ids_b;
  for (const auto& e : a.examples) ids_a.push_back(e.id);
  for (const auto& e : b.examples) ids_b.push_back(e.id);
  CHECK(ids_a == ids_b);
  // Survivors are untouched copies of the source.
  std::map<int64_t, const Example*> by_id;
  for (const auto& e : src.examples) by_id[e.id] = &e;
  for (const auto& e : a.examples) {
    REQUIRE(by_id.count(e.id));
    CHECK(by_id[e.id]->pixels == e.pixels);
    CHECK(by_id[e.id]->label == e.label);
    CHECK(by_id[e.id]->attributes == e.attributes);
  }
  CHECK_THROWS_AS(balance_by_label(with_counts({5, 0}), 1), ValidationError);
}

TEST_CASE("split") {
  const Dataset d = generate_trifeature(small_config(), 1);
  const SplitResult s = split(d, 0.75, 3);
  CHECK(s.train.size() == 480);
  CHECK(s.test.size() == 160);
  CHECK(s.train.class_counts() == std::vector<int64_t>{120, 120, 120, 120});
  CHECK(s.test.class_counts() == std::vector<int64_t>{40, 40, 40, 40});
  std::set<int64_t> ids;
  for (const auto& e : s.train.examples) ids.insert(e.id);
  for (const auto& e : s.test.examples) CHECK(ids.insert(e.id).second);
  CHECK(ids.size() == d.size());

  const SplitResult again = split(d, 0.75, 3);
  for (size_t i = 0; i < s.test.size(); ++i) CHECK(again.test.examples[i].id == s.test.examples[i].id);

  const SplitResult tiny = split(with_counts({2, 2}), 0.5, 1);
  CHECK(tiny.train.class_counts() == std::vector<int64_t>{1, 1});
  CHECK(tiny.test.class_counts() == std::vector<int64_t>{1, 1});

  CHECK_THROWS_AS(split(with_counts({1, 4}), 0.5, 1), ValidationError);
  CHECK_THROWS_AS(split(d, 1.0, 1), ValidationError);
  CHECK_THROWS_AS(split(d, 0.0, 1), ValidationError);
}

TEST_CASE("split keeps attribute mix per class") {
  GenerationConfig c = small_config();
  c.num_colors = 2;
  c.samples_per_cell = 40;
  c.imbalance = {{"color", {0.7785, 0.2215}}};
  const Dataset d = generate_trifeature(c, 6);
  const SplitResult s = split(d, 0.6, 2);
  for (int y = 0; y < 4; ++y) {
    double all = 0, all_min = 0, test = 0, test_min = 0;
    for (const auto& e : d.examples) {
      if (e.label != y) continue;
      ++all;
      all_min += e.attributes[2];
    }
    for (const auto& e : s.test.examples) {
      if (e.label != y) continue;
      ++test;
      test_min += e.attributes[2];
    }
    CHECK(std::abs(test_min / test - all_min / all) < 0.02);
  }
}

TEST_CASE("dataset save and load round trip") {
  const auto dir = temp_dir("dataset");
  const Dataset d = generate_trifeature(small_config(), 2);
  save_dataset(d, dir, "0123456789abcdef");
  std::string hash;
  const Dataset back = load_dataset(dir, &hash);
  CHECK(hash == "0123456789abcdef");
  REQUIRE(back.size() == d.size());
  CHECK(back.num_classes == 4);
  CHECK(back.generation_seed == 2);
  for (size_t i = 0; i < d.size(); ++i) {
    CHECK(back.examples[i].pixels == d.examples[i].pixels);
    CHECK(back.examples[i].attributes == d.examples[i].attributes);
  }
  // Corrupt header.
  std::string bin = io::read_file(dir / "pixels.bin");
  bin[0] = 'Z';
  io::write_file_atomic(dir / "pixels.bin", bin);
  CHECK_THROWS_AS(load_dataset(dir), SchemaError);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_dataset(dir), MissingArtifactError);
}

TEST_CASE("palettes") {
  CHECK(glyph_names().size() == kNumGlyphs);
  CHECK(texture_names().size() == kNumTextures);
  CHECK(glyph_names()[0] == "disk");
  CHECK(texture_names()[9] == "speckle");
  GenerationConfig c = small_config();
  c.num_shapes = c.num_textures = c.num_colors = 10;
  c.samples_per_cell = 1;
  const Dataset d = generate_trifeature(c, 1);
  d.validate();
  CHECK(d.size() == 1000);
}
