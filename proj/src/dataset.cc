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

#include "kdbias/dataset.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "kdbias/common.h"
#include "kdbias/io.h"

namespace kdbias {
namespace {

constexpr std::array<const char*, 3> kFactorNames = {"shape", "texture", "color"};
constexpr char kPixelMagic[8] = {'K', 'D', 'B', 'P', 'I', 'X', '0', '1'};

// Shape coverage in glyph coordinates (u, v) in [-1, 1], v pointing down.
bool inside_glyph(int glyph, double u, double v) {
  const double au = std::abs(u), av = std::abs(v);
  switch (glyph) {
    case 0:  // disk
      return u * u + v * v <= 1.0;
    case 1:  // square
      return au <= 0.8 && av <= 0.8;
    case 2:  // triangle, apex up
      return v <= 0.8 && v >= -0.9 && au <= (v + 0.9) * 0.55;
    case 3:  // diagonal cross
      return au <= 0.9 && av <= 0.9 &&
             (std::abs(u - v) <= 0.4 || std::abs(u + v) <= 0.4);
    case 4: {  // ring
      const double r2 = u * u + v * v;
      return r2 <= 1.0 && r2 >= 0.36;
    }
    case 5:  // horizontal bar
      return au <= 1.0 && av <= 0.3;
    case 6:  // diamond
      return au + av <= 1.0;
    case 7:  // L
      return (std::abs(u + 0.55) <= 0.3 && av <= 0.9) ||
             (std::abs(v - 0.6) <= 0.3 && au <= 0.85);
    case 8:  // T
      return (std::abs(v + 0.6) <= 0.3 && au <= 0.9) || (au <= 0.3 && av <= 0.9);
    case 9:  // plus
      return au <= 0.9 && av <= 0.9 && (au <= 0.3 || av <= 0.3);
    default:
      return false;
  }
}

// Texture intensity in [0, 1] at image coordinates (x, y) in [0, 1).
double texture_value(int texture, double x, double y, double phase, Rng& rng) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  switch (texture) {
    case 0:  // solid
      return 1.0;
    case 1:  // stripes
      return std::sin(kTwoPi * 3.0 * x + phase) >= 0.0 ? 1.0 : 0.2;
    case 2: {  // checker
      const int cx = static_cast<int>(std::floor(x * 4.0 + phase));
      const int cy = static_cast<int>(std::floor(y * 4.0 + phase));
      return ((cx + cy) & 1) ? 1.0 : 0.2;
    }
    case 3: {  // dots
      const double fx = x * 4.0 + phase - std::floor(x * 4.0 + phase) - 0.5;
      const double fy = y * 4.0 + phase - std::floor(y * 4.0 + phase) - 0.5;
      return fx * fx + fy * fy <= 0.09 ? 1.0 : 0.25;
    }
    case 4:  // gradient
      return 0.2 + 0.8 * x;
    case 5:  // noise
      return 0.2 + 0.8 * rng.uniform();
    case 6: {  // concentric rings
      const double dx = x - 0.5, dy = y - 0.5;
      return 0.6 + 0.4 * std::cos(kTwoPi * 5.0 * std::sqrt(dx * dx + dy * dy) + phase);
    }
    case 7: {  // grid
      const double gx = x * 3.0 + phase - std::floor(x * 3.0 + phase);
      const double gy = y * 3.0 + phase - std::floor(y * 3.0 + phase);
      return (gx < 0.3 || gy < 0.3) ? 1.0 : 0.2;
    }
    case 8:  // waves
      return 0.6 + 0.4 * std::sin(kTwoPi * (2.0 * y + 0.25 * std::sin(kTwoPi * 2.0 * x)) + phase);
    case 9:  // speckle
      return rng.uniform() < 0.3 ? 1.0 : 0.25;
    default:
      return 1.0;
  }
}

std::array<double, 3> hue_rgb(int hue) {
  // HSV with s = 0.85, v = 1 at ten evenly spaced hues.
  const double h = hue / static_cast<double>(kNumHues) * 6.0;
  const double s = 0.85;
  const int sector = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  const double p = 1.0 - s, q = 1.0 - s * f, t = 1.0 - s * (1.0 - f);
  switch (sector) {
    case 0: return {1.0, t, p};
    case 1: return {q, 1.0, p};
    case 2: return {p, 1.0, t};
    case 3: return {p, q, 1.0};
    case 4: return {t, p, 1.0};
    default: return {1.0, p, q};
  }
}

std::vector<double> render(int size, int shape, int texture, int color, Rng& rng) {
  const double cx = 0.5 + rng.uniform(-0.08, 0.08);
  const double cy = 0.5 + rng.uniform(-0.08, 0.08);
  const double radius = rng.uniform(0.30, 0.40);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const auto rgb = hue_rgb(color);
  std::vector<double> pixels(static_cast<size_t>(size) * size * kImageChannels);
  for (int py = 0; py < size; ++py) {
    for (int px = 0; px < size; ++px) {
      // 2x2 supersampled coverage.
      int hits = 0;
      for (int sy = 0; sy < 2; ++sy) {
        for (int sx = 0; sx < 2; ++sx) {
          const double x = (px + 0.25 + 0.5 * sx) / size;
          const double y = (py + 0.25 + 0.5 * sy) / size;
          hits += inside_glyph(shape, (x - cx) / radius, (y - cy) / radius);
        }
      }
      const double x = (px + 0.5) / size, y = (py + 0.5) / size;
      const double tex = texture_value(texture, x, y, phase, rng);
      const double coverage = hits / 4.0;
      for (int c = 0; c < kImageChannels; ++c) {
        double value = coverage * rgb[c] * (0.25 + 0.75 * tex);
        value += rng.uniform(-0.03, 0.03);
        pixels[(static_cast<size_t>(py) * size + px) * kImageChannels + c] =
            std::clamp(value, 0.0, 1.0);
      }
    }
  }
  return pixels;
}

// Largest-remainder integer quotas for `n` draws with proportions `p`.
std::vector<int64_t> quotas(const std::vector<double>& p, int64_t n) {
  std::vector<int64_t> q(p.size());
  std::vector<std::pair<double, size_t>> remainders;
  int64_t assigned = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double exact = p[i] * static_cast<double>(n);
    q[i] = static_cast<int64_t>(std::floor(exact));
    assigned += q[i];
    remainders.emplace_back(exact - static_cast<double>(q[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t k = 0; assigned < n; ++k, ++assigned) ++q[remainders[k % p.size()].second];
  return q;
}

// Uniform proposals accepted only while the proposed group is under quota.
int draw_with_quota(std::vector<int64_t>& remaining, Rng& rng) {
  while (true) {
    const int g = static_cast<int>(rng.uniform_int(remaining.size()));
    if (remaining[g] > 0) {
      --remaining[g];
      return g;
    }
  }
}

Dataset subset(const Dataset& d, const std::vector<size_t>& keep) {
  Dataset out;
  out.num_classes = d.num_classes;
  out.attributes = d.attributes;
  out.height = d.height;
  out.width = d.width;
  out.channels = d.channels;
  out.generation_seed = d.generation_seed;
  out.examples.reserve(keep.size());
  for (size_t i : keep) out.examples.push_back(d.examples[i]);
  return out;
}

std::vector<std::vector<size_t>> indices_by_class(const Dataset& d) {
  std::vector<std::vector<size_t>> by_class(d.num_classes);
  for (size_t i = 0; i < d.examples.size(); ++i) by_class[d.examples[i].label].push_back(i);
  return by_class;
}

}  // namespace

const std::vector<std::string>& glyph_names() {
  static const std::vector<std::string> names = {
      "disk", "square", "triangle", "cross", "ring",
      "bar",  "diamond", "L",       "T",     "plus"};
  return names;
}

const std::vector<std::string>& texture_names() {
  static const std::vector<std::string> names = {
      "solid", "stripes", "checker", "dots", "gradient",
      "noise", "rings",   "grid",    "waves", "speckle"};
  return names;
}

std::vector<int64_t> Dataset::class_counts() const {
  std::vector<int64_t> counts(num_classes, 0);
  for (const auto& e : examples) ++counts[e.label];
  return counts;
}

int Dataset::attribute_index(const std::string& name) const {
  for (size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i].name == name) return static_cast<int>(i);
  }
  throw ValidationError("unknown attribute '" + name + "'");
}

void Dataset::validate() const {
  if (num_classes < 2) throw ValidationError("dataset needs at least 2 classes");
  std::set<int64_t> ids;
  for (const auto& e : examples) {
    if (!ids.insert(e.id).second) {
      throw ValidationError("duplicate example id " + std::to_string(e.id));
    }
    if (e.label < 0 || e.label >= num_classes) {
      throw ValidationError("example " + std::to_string(e.id) + ": label out of range");
    }
    if (e.attributes.size() != attributes.size()) {
      throw ValidationError("example " + std::to_string(e.id) + ": attribute count mismatch");
    }
    for (size_t a = 0; a < attributes.size(); ++a) {
      if (e.attributes[a] < 0 || e.attributes[a] >= attributes[a].num_groups) {
        throw ValidationError("example " + std::to_string(e.id) + ": attribute '" +
                              attributes[a].name + "' group out of range");
      }
    }
    if (e.pixels.size() != pixel_count()) {
      throw ValidationError("example " + std::to_string(e.id) + ": pixel count mismatch");
    }
    for (double p : e.pixels) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("example " + std::to_string(e.id) + ": pixel outside [0,1]");
      }
    }
  }
}

std::string GenerationConfig::display_name(Factor f) const {
  const std::string canonical = kFactorNames[static_cast<int>(f)];
  auto it = attribute_names.find(canonical);
  return it == attribute_names.end() ? canonical : it->second;
}

Factor GenerationConfig::resolve(const std::string& name) const {
  for (int f = 0; f < 3; ++f) {
    const auto factor = static_cast<Factor>(f);
    if (name == kFactorNames[f] || name == display_name(factor)) return factor;
  }
  throw ValidationError("unknown attribute '" + name + "'");
}

int GenerationConfig::group_count(Factor f) const {
  switch (f) {
    case Factor::kShape: return num_shapes;
    case Factor::kTexture: return num_textures;
    default: return num_colors;
  }
}

int64_t GenerationConfig::total_examples() const {
  return static_cast<int64_t>(num_shapes) * num_textures * num_colors * samples_per_cell;
}

void GenerationConfig::validate() const {
  if (image_size < 4) throw ValidationError("image_size: must be >= 4");
  const std::array<std::pair<const char*, std::pair<int, int>>, 3> counts = {{
      {"num_shapes", {num_shapes, kNumGlyphs}},
      {"num_textures", {num_textures, kNumTextures}},
      {"num_colors", {num_colors, kNumHues}},
  }};
  for (const auto& [field, value] : counts) {
    if (value.first < 2) throw ValidationError(std::string(field) + ": must be >= 2");
    if (value.first > value.second) {
      throw ValidationError(std::string(field) + ": " + std::to_string(value.first) +
                            " exceeds palette size " + std::to_string(value.second));
    }
  }
  if (samples_per_cell < 1) throw ValidationError("samples_per_cell: must be >= 1");
  for (const auto& [key, value] : attribute_names) {
    if (key != "shape" && key != "texture" && key != "color") {
      throw ValidationError("attribute_names: unknown attribute '" + key + "'");
    }
    if (value.empty()) throw ValidationError("attribute_names." + key + ": empty name");
  }
  std::set<std::string> shown;
  for (int f = 0; f < 3; ++f) {
    if (!shown.insert(display_name(static_cast<Factor>(f))).second) {
      throw ValidationError("attribute_names: duplicate display name");
    }
  }
  const Factor label = resolve(label_attribute);
  for (const auto& [name, proportions] : imbalance) {
    const Factor f = resolve(name);
    if (static_cast<int>(proportions.size()) != group_count(f)) {
      throw ValidationError("imbalance." + name + ": expected " +
                            std::to_string(group_count(f)) + " proportions");
    }
    double sum = 0.0;
    for (double p : proportions) {
      if (!(p >= 0.0)) throw ValidationError("imbalance." + name + ": negative proportion");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("imbalance." + name + ": proportions sum to " +
                            io::format_double(std::round(sum * 1e9) / 1e9) + ", expected 1");
    }
  }
  if (!(label_group_correlation >= 0.0 && label_group_correlation <= 1.0)) {
    throw ValidationError("label_group_correlation: must lie in [0, 1]");
  }
  if (label_group_correlation > 0.0) {
    if (correlated_attribute.empty()) {
      throw ValidationError("correlated_attribute: required when label_group_correlation > 0");
    }
    const Factor f = resolve(correlated_attribute);
    if (f == label) {
      throw ValidationError("correlated_attribute: must differ from label_attribute");
    }
    for (const auto& [name, proportions] : imbalance) {
      if (resolve(name) == f) {
        throw ValidationError("correlated_attribute: cannot also carry an imbalance");
      }
    }
  }
}

Dataset generate_trifeature(const GenerationConfig& config, uint64_t seed) {
  config.validate();
  const Factor label_factor = config.resolve(config.label_attribute);
  Dataset d;
  d.num_classes = config.group_count(label_factor);
  d.height = d.width = config.image_size;
  d.channels = kImageChannels;
  d.generation_seed = seed;
  for (int f = 0; f < 3; ++f) {
    const auto factor = static_cast<Factor>(f);
    d.attributes.push_back({config.display_name(factor), config.group_count(factor)});
  }

  const int64_t n = config.total_examples();
  Rng rng(seed);
  std::vector<std::array<int, 3>> cells;
  cells.reserve(n);
  const bool exact_cells = config.imbalance.empty() && config.label_group_correlation == 0.0;
  if (exact_cells) {
    for (int s = 0; s < config.num_shapes; ++s)
      for (int t = 0; t < config.num_textures; ++t)
        for (int c = 0; c < config.num_colors; ++c)
          for (int k = 0; k < config.samples_per_cell; ++k) cells.push_back({s, t, c});
  } else if (config.label_group_correlation == 0.0) {
    // Factorized cell proportions; uniform proposals over cells are accepted
    // while the cell is under its largest-remainder quota.
    std::vector<std::array<int, 3>> all_cells;
    std::vector<double> p;
    auto factor_p = [&](Factor f, int g) {
      for (const auto& [name, proportions] : config.imbalance) {
        if (config.resolve(name) == f) return proportions[g];
      }
      return 1.0 / config.group_count(f);
    };
    for (int s = 0; s < config.num_shapes; ++s)
      for (int t = 0; t < config.num_textures; ++t)
        for (int c = 0; c < config.num_colors; ++c) {
          all_cells.push_back({s, t, c});
          p.push_back(factor_p(Factor::kShape, s) * factor_p(Factor::kTexture, t) *
                      factor_p(Factor::kColor, c));
        }
    auto remaining = quotas(p, n);
    for (int64_t i = 0; i < n; ++i) cells.push_back(all_cells[draw_with_quota(remaining, rng)]);
  } else {
    // Per-factor draws: quota-driven for the label and imbalanced factors,
    // uniform otherwise, then the correlated factor is resampled.
    std::array<std::vector<int64_t>, 3> remaining;
    std::array<bool, 3> quota_driven{};
    for (int f = 0; f < 3; ++f) {
      const auto factor = static_cast<Factor>(f);
      const int groups = config.group_count(factor);
      std::vector<double> p(groups, 1.0 / groups);
      bool driven = factor == label_factor;
      for (const auto& [name, proportions] : config.imbalance) {
        if (config.resolve(name) == factor) {
          p = proportions;
          driven = true;
        }
      }
      quota_driven[f] = driven;
      if (driven) remaining[f] = quotas(p, n);
    }
    const int corr = static_cast<int>(config.resolve(config.correlated_attribute));
    for (int64_t i = 0; i < n; ++i) {
      std::array<int, 3> cell{};
      for (int f = 0; f < 3; ++f) {
        const int groups = config.group_count(static_cast<Factor>(f));
        cell[f] = quota_driven[f] ? draw_with_quota(remaining[f], rng)
                                  : static_cast<int>(rng.uniform_int(groups));
      }
      const int groups = config.group_count(static_cast<Factor>(corr));
      const int label = cell[static_cast<int>(label_factor)];
      cell[corr] = rng.uniform() < config.label_group_correlation
                       ? label % groups
                       : static_cast<int>(rng.uniform_int(groups));
      cells.push_back(cell);
    }
  }

  d.examples.reserve(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) {
    const auto& cell = cells[i];
    Example e;
    e.id = static_cast<int64_t>(i);
    const int hue = cell[2] * kNumHues / config.num_colors;
    e.pixels = render(config.image_size, cell[0], cell[1], hue, rng);
    e.label = cell[static_cast<int>(label_factor)];
    e.attributes = {cell[0], cell[1], cell[2]};
    d.examples.push_back(std::move(e));
  }
  return d;
}

Dataset balance_by_label(const Dataset& d, uint64_t seed) {
  if (d.num_classes < 2) throw ValidationError("balance_by_label: need at least 2 classes");
  auto by_class = indices_by_class(d);
  size_t smallest = d.examples.size();
  for (int c = 0; c < d.num_classes; ++c) {
    if (by_class[c].empty()) {
      throw ValidationError("balance_by_label: class " + std::to_string(c) + " is empty");
    }
    smallest = std::min(smallest, by_class[c].size());
  }
  Rng rng(seed);
  std::vector<size_t> keep;
  for (auto& members : by_class) {
    rng.shuffle(members);
    keep.insert(keep.end(), members.begin(), members.begin() + smallest);
  }
  std::sort(keep.begin(), keep.end());
  return subset(d, keep);
}

SplitResult split(const Dataset& d, double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("split: train_fraction must lie in (0, 1)");
  }
  auto by_class = indices_by_class(d);
  Rng rng(seed);
  std::vector<size_t> train, test;
  for (int c = 0; c < d.num_classes; ++c) {
    auto& members = by_class[c];
    const auto n_train =
        static_cast<size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
    if (n_train == 0 || n_train == members.size()) {
      throw ValidationError("split: class " + std::to_string(c) + " has " +
                            std::to_string(members.size()) +
                            " examples, too few to appear in both splits");
    }
    // Within the class, each attribute cell gets its proportional share of
    // the train quota so group mixes match across splits.
    std::map<std::vector<int>, std::vector<size_t>> cells;
    for (size_t i : members) cells[d.examples[i].attributes].push_back(i);
    std::vector<double> share;
    for (const auto& [key, idx] : cells) {
      share.push_back(static_cast<double>(idx.size()) / static_cast<double>(members.size()));
    }
    const auto cell_quota = quotas(share, static_cast<int64_t>(n_train));
    size_t k = 0;
    for (auto& [key, idx] : cells) {
      rng.shuffle(idx);
      const auto q = static_cast<size_t>(cell_quota[k++]);
      train.insert(train.end(), idx.begin(), idx.begin() + q);
      test.insert(test.end(), idx.begin() + q, idx.end());
    }
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {subset(d, train), subset(d, test)};
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir,
                  const std::string& manifest_hash) {
  std::string bin(kPixelMagic, sizeof(kPixelMagic));
  auto put_u64 = [&bin](uint64_t v) {
    for (int i = 0; i < 8; ++i) bin.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put_u64(d.examples.size());
  put_u64(static_cast<uint64_t>(d.height));
  put_u64(static_cast<uint64_t>(d.width));
  put_u64(static_cast<uint64_t>(d.channels));
  bin += manifest_hash;
  bin.resize(sizeof(kPixelMagic) + 32 + 16, ' ');
  bin.reserve(bin.size() + d.examples.size() * d.pixel_count() * 8);
  for (const auto& e : d.examples) {
    for (double p : e.pixels) {
      uint64_t bits;
      std::memcpy(&bits, &p, sizeof(bits));
      put_u64(bits);
    }
  }
  io::write_file_atomic(dir / "pixels.bin", bin);

  std::ostringstream csv;
  csv << "# manifest_hash=" << manifest_hash << "\n";
  csv << "# num_classes=" << d.num_classes << "\n";
  csv << "# generation_seed=" << d.generation_seed << "\n";
  for (const auto& a : d.attributes) csv << "# groups." << a.name << "=" << a.num_groups << "\n";
  csv << "example_id,label";
  for (const auto& a : d.attributes) csv << ",attr_" << a.name;
  csv << "\n";
  for (const auto& e : d.examples) {
    csv << e.id << "," << e.label;
    for (int g : e.attributes) csv << "," << g;
    csv << "\n";
  }
  io::write_file_atomic(dir / "examples.csv", csv.str());
}

Dataset load_dataset(const std::filesystem::path& dir, std::string* manifest_hash) {
  const auto csv = io::parse_commented_csv(io::read_file(dir / "examples.csv"));
  Dataset d;
  std::map<std::string, int> groups;
  for (const auto& [key, value] : csv.metadata) {
    int64_t v = 0;
    if (key == "manifest_hash") {
      if (manifest_hash) *manifest_hash = value;
    } else if (key == "num_classes" && io::parse_int64(value, &v)) {
      d.num_classes = static_cast<int>(v);
    } else if (key == "generation_seed" && io::parse_int64(value, &v)) {
      d.generation_seed = static_cast<uint64_t>(v);
    } else if (key.rfind("groups.", 0) == 0 && io::parse_int64(value, &v)) {
      groups[key.substr(7)] = static_cast<int>(v);
    }
  }
  if (csv.header.size() < 2 || csv.header[0] != "example_id" || csv.header[1] != "label") {
    throw SchemaError("examples.csv: header must start with example_id,label");
  }
  for (size_t c = 2; c < csv.header.size(); ++c) {
    const std::string& col = csv.header[c];
    if (col.rfind("attr_", 0) != 0) throw SchemaError("examples.csv: unknown column '" + col + "'");
    const std::string name = col.substr(5);
    if (!groups.count(name)) throw SchemaError("examples.csv: no group count for '" + name + "'");
    d.attributes.push_back({name, groups[name]});
  }

  const std::string bin = io::read_file(dir / "pixels.bin");
  const size_t header_size = sizeof(kPixelMagic) + 32 + 16;
  if (bin.size() < header_size || std::memcmp(bin.data(), kPixelMagic, sizeof(kPixelMagic)) != 0) {
    throw SchemaError("pixels.bin: bad magic");
  }
  auto get_u64 = [&bin](size_t offset) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(bin[offset + i])) << (8 * i);
    return v;
  };
  const uint64_t n = get_u64(8);
  d.height = static_cast<int>(get_u64(16));
  d.width = static_cast<int>(get_u64(24));
  d.channels = static_cast<int>(get_u64(32));
  if (n != csv.rows.size()) throw SchemaError("pixels.bin and examples.csv disagree on row count");
  if (bin.size() != header_size + n * d.pixel_count() * 8) throw SchemaError("pixels.bin: truncated");

  size_t offset = header_size;
  for (const auto& [line, fields] : csv.rows) {
    if (fields.size() != csv.header.size()) {
      throw SchemaError("examples.csv line " + std::to_string(line) + ": wrong field count");
    }
    Example e;
    int64_t v = 0;
    if (!io::parse_int64(fields[0], &e.id) || !io::parse_int64(fields[1], &v)) {
      throw SchemaError("examples.csv line " + std::to_string(line) + ": malformed integer");
    }
    e.label = static_cast<int>(v);
    for (size_t c = 2; c < fields.size(); ++c) {
      if (!io::parse_int64(fields[c], &v)) {
        throw SchemaError("examples.csv line " + std::to_string(line) + ": malformed integer");
      }
      e.attributes.push_back(static_cast<int>(v));
    }
    e.pixels.resize(d.pixel_count());
    for (double& p : e.pixels) {
      const uint64_t bits = get_u64(offset);
      std::memcpy(&p, &bits, sizeof(p));
      offset += 8;
    }
    d.examples.push_back(std::move(e));
  }
  d.validate();
  return d;
}

}  // namespace kdbias
