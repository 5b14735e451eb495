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

// Procedural attribute-labelled image data in the style of the Trifeature
// family (one shape, one texture, one hue per image), plus label balancing
// and stratified splitting.

#ifndef KDBIAS_DATASET_H_
#define KDBIAS_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace kdbias {

// Palette sizes of the renderer.
inline constexpr int kNumGlyphs = 10;
inline constexpr int kNumTextures = 10;
inline constexpr int kNumHues = 10;
inline constexpr int kImageChannels = 3;

const std::vector<std::string>& glyph_names();
const std::vector<std::string>& texture_names();

struct AttributeSpec {
  std::string name;
  int num_groups = 0;
};

struct Example {
  int64_t id = 0;
  // Row-major H x W x C, every value in [0, 1].
  std::vector<double> pixels;
  int label = 0;
  // One group index per dataset attribute, aligned with Dataset::attributes.
  std::vector<int> attributes;
};

struct Dataset {
  std::vector<Example> examples;
  int num_classes = 0;
  std::vector<AttributeSpec> attributes;
  int height = 0;
  int width = 0;
  int channels = kImageChannels;
  uint64_t generation_seed = 0;

  size_t size() const { return examples.size(); }
  size_t pixel_count() const {
    return static_cast<size_t>(height) * width * channels;
  }
  std::vector<int64_t> class_counts() const;
  // Index into Example::attributes; throws ValidationError if absent.
  int attribute_index(const std::string& name) const;

  // Throws ValidationError on any broken invariant (unique ids, schema
  // conformance, label range, pixel range).
  void validate() const;
};

// The three canonical rendered factors.
enum class Factor { kShape = 0, kTexture = 1, kColor = 2 };

struct GenerationConfig {
  int image_size = 12;
  int num_shapes = 4;
  int num_textures = 4;
  int num_colors = 4;
  int samples_per_cell = 10;
  // One of "shape", "texture", "color" (or its display name).
  std::string label_attribute = "shape";
  // attribute -> group proportions, one entry per group.
  std::map<std::string, std::vector<double>> imbalance;
  // Probability that correlated_attribute is forced to (label mod groups).
  double label_group_correlation = 0.0;
  std::string correlated_attribute;
  // Optional display names, e.g. {"color": "age-proxy"}.
  std::map<std::string, std::string> attribute_names;

  // Throws ValidationError naming the offending field.
  void validate() const;

  std::string display_name(Factor f) const;
  // Resolves a canonical or display name; throws ValidationError if unknown.
  Factor resolve(const std::string& name) const;
  int group_count(Factor f) const;
  int64_t total_examples() const;
};

// Deterministic in (config, seed). Without imbalance or correlation every
// (shape, texture, color) cell holds exactly samples_per_cell examples;
// otherwise examples are drawn cell by cell, with uniform proposals rejected
// once a cell's largest-remainder quota is used up, so imbalanced factors
// hit their target proportions to within one example.
Dataset generate_trifeature(const GenerationConfig& config, uint64_t seed);

// Undersamples every class down to the smallest class count. Surviving
// examples keep their original order and content.
Dataset balance_by_label(const Dataset& d, uint64_t seed);

struct SplitResult {
  Dataset train;
  Dataset test;
};

// Stratified by label: each class contributes round(n_c * train_fraction)
// examples to train and the rest to test. Inside a class the quota is spread
// over attribute cells by largest remainder.
SplitResult split(const Dataset& d, double train_fraction, uint64_t seed);

// Flat binary pixel file plus CSV manifest; layout documented in
// docs/formats.md. The hash is embedded in both files.
void save_dataset(const Dataset& d, const std::filesystem::path& dir,
                  const std::string& manifest_hash);
Dataset load_dataset(const std::filesystem::path& dir,
                     std::string* manifest_hash = nullptr);

}  // namespace kdbias

#endif  // KDBIAS_DATASET_H_
