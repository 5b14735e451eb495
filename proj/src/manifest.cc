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

#include "kdbias/manifest.h"

#include <set>

#include "json.hpp"
#include "kdbias/common.h"
#include "kdbias/io.h"

namespace kdbias {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

// Typed accessors that prefix errors with the JSON path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : j_.items()) {
      if (!known.count(key)) fail(key, "unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Reader object(const char* key) const { return Reader(j_.at(key), field(key)); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  int64_t integer(const char* key, int64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int64_t>();
  }

  uint64_t seed(const char* key, uint64_t fallback) const {
    const int64_t v = integer(key, static_cast<int64_t>(fallback));
    if (v < 0) fail(key, "seeds must be nonnegative");
    return static_cast<uint64_t>(v);
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    return numbers_of(j_.at(key), field(key));
  }

  std::vector<int64_t> integers(const char* key, const std::vector<int64_t>& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(key, "expected an array of integers");
    std::vector<int64_t> out;
    for (const auto& x : v) {
      if (!x.is_number_integer()) fail(key, "expected an array of integers");
      out.push_back(x.get<int64_t>());
    }
    return out;
  }

  std::vector<std::string> strings(const char* key) const {
    if (!has(key)) return {};
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(key, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) fail(key, "expected an array of strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  const json& raw(const char* key) const { return j_.at(key); }
  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  static std::vector<double> numbers_of(const json& v, const std::string& where) {
    if (!v.is_array()) throw ValidationError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ValidationError(where + ": expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ValidationError((key.empty() ? path_ : field(key)) + ": " + what);
  }

 private:
  const json& j_;
  std::string path_;
};

TrainConfig parse_train(const Reader& r, const TrainConfig& defaults) {
  r.allow({"epochs", "batch_size", "base_lr", "lr_drop_epochs", "lr_drop_factor",
           "weight_decay", "t_squared_scaling", "hidden_units"});
  TrainConfig c = defaults;
  c.epochs = static_cast<int>(r.integer("epochs", c.epochs));
  c.batch_size = static_cast<int>(r.integer("batch_size", c.batch_size));
  c.base_lr = r.number("base_lr", c.base_lr);
  std::vector<int64_t> drops(c.lr_drop_epochs.begin(), c.lr_drop_epochs.end());
  drops = r.integers("lr_drop_epochs", drops);
  c.lr_drop_epochs.assign(drops.begin(), drops.end());
  c.lr_drop_factor = r.number("lr_drop_factor", c.lr_drop_factor);
  c.weight_decay = r.number("weight_decay", c.weight_decay);
  c.t_squared_scaling = r.boolean("t_squared_scaling", c.t_squared_scaling);
  try {
    c.validate();
  } catch (const ValidationError& e) {
    r.fail("", e.what());
  }
  return c;
}

ordered_json train_to_json(const TrainConfig& c) {
  ordered_json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["base_lr"] = c.base_lr;
  j["lr_drop_epochs"] = c.lr_drop_epochs;
  j["lr_drop_factor"] = c.lr_drop_factor;
  j["weight_decay"] = c.weight_decay;
  j["t_squared_scaling"] = c.t_squared_scaling;
  return j;
}

TrainConfig default_train_config() {
  TrainConfig c;
  c.epochs = 40;
  c.batch_size = 64;
  c.base_lr = 0.05;
  c.lr_drop_epochs = {30};
  c.lr_drop_factor = 10.0;
  c.weight_decay = 0.001;
  return c;
}

}  // namespace

std::vector<std::string> ExperimentManifest::audit_attributes() const {
  if (!analysis.attributes.empty()) return analysis.attributes;
  const Factor label = generation.resolve(generation.label_attribute);
  std::vector<std::string> out;
  for (int f = 0; f < 3; ++f) {
    if (static_cast<Factor>(f) != label) out.push_back(generation.display_name(static_cast<Factor>(f)));
  }
  return out;
}

void ExperimentManifest::validate() const {
  auto scoped = [](const std::string& prefix, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      if (what.rfind(prefix, 0) == 0) throw;
      throw ValidationError(prefix + "." + what);
    }
  };
  scoped("generation", [&] { generation.validate(); });
  scoped("teacher", [&] { plan.teacher.validate(); });
  scoped("student", [&] { plan.student.validate(); });
  scoped("plan", [&] {
    std::vector<uint64_t> seen;
    for (uint64_t s : plan.seeds) {
      for (uint64_t t : seen) {
        if (s == t) throw ValidationError("seeds: seeds must be distinct");
      }
      seen.push_back(s);
    }
    if (plan.seeds.size() < 2) {
      throw ValidationError("seeds: at least 2 seeds are needed for Welch's test");
    }
    if (plan.temperatures.empty()) throw ValidationError("temperatures: at least one required");
    for (double t : plan.temperatures) {
      if (!(t >= 1.0)) throw ValidationError("temperatures: every temperature must be >= 1");
    }
    if (!(plan.alpha >= 0.0 && plan.alpha <= 1.0)) {
      throw ValidationError("alpha: must lie in [0, 1]");
    }
  });
  if (!(preprocess.train_fraction > 0.0 && preprocess.train_fraction < 1.0)) {
    throw ValidationError("preprocess.train_fraction: must lie in (0, 1)");
  }
  if (!(analysis.threshold >= 0.0 && analysis.threshold <= 1.0)) {
    throw ValidationError("analysis.threshold: must lie in [0, 1]");
  }
  const Factor label = generation.resolve(generation.label_attribute);
  for (const auto& a : analysis.attributes) {
    Factor f;
    try {
      f = generation.resolve(a);
    } catch (const ValidationError&) {
      throw ValidationError("analysis.attributes: unknown attribute '" + a + "'");
    }
    if (f == label) {
      throw ValidationError("analysis.attributes: '" + a + "' is the label attribute");
    }
    if (a != generation.display_name(f)) {
      throw ValidationError("analysis.attributes: use the display name '" +
                            generation.display_name(f) + "' for '" + a + "'");
    }
  }
}

std::string ExperimentManifest::hash() const {
  return hex64(fnv1a(manifest_to_json(*this, false)));
}

ExperimentManifest parse_manifest(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
  }
  Reader r(root, "");
  r.allow({"schema_version", "generation", "preprocess", "teacher", "student", "plan",
           "analysis", "output_dir"});
  if (r.integer("schema_version", kSchemaVersion) != kSchemaVersion) {
    r.fail("schema_version", "unsupported version");
  }
  ExperimentManifest m;
  m.plan.teacher = default_train_config();
  m.plan.student = default_train_config();

  if (r.has("generation")) {
    const Reader g = r.object("generation");
    g.allow({"image_size", "num_shapes", "num_textures", "num_colors", "samples_per_cell",
             "label_attribute", "imbalance", "label_group_correlation",
             "correlated_attribute", "attribute_names", "seed"});
    auto& c = m.generation;
    c.image_size = static_cast<int>(g.integer("image_size", c.image_size));
    c.num_shapes = static_cast<int>(g.integer("num_shapes", c.num_shapes));
    c.num_textures = static_cast<int>(g.integer("num_textures", c.num_textures));
    c.num_colors = static_cast<int>(g.integer("num_colors", c.num_colors));
    c.samples_per_cell = static_cast<int>(g.integer("samples_per_cell", c.samples_per_cell));
    c.label_attribute = g.string("label_attribute", c.label_attribute);
    c.label_group_correlation = g.number("label_group_correlation", c.label_group_correlation);
    c.correlated_attribute = g.string("correlated_attribute", c.correlated_attribute);
    m.generation_seed = g.seed("seed", m.generation_seed);
    if (g.has("attribute_names")) {
      const auto& names = g.raw("attribute_names");
      if (!names.is_object()) g.fail("attribute_names", "expected an object");
      for (const auto& [key, value] : names.items()) {
        if (!value.is_string()) g.fail("attribute_names." + key, "expected a string");
        c.attribute_names[key] = value.get<std::string>();
      }
    }
    if (g.has("imbalance")) {
      const auto& imb = g.raw("imbalance");
      if (!imb.is_object()) g.fail("imbalance", "expected an object");
      for (const auto& [key, value] : imb.items()) {
        c.imbalance[key] = Reader::numbers_of(value, g.field("imbalance." + key));
      }
    }
  }
  if (r.has("preprocess")) {
    const Reader p = r.object("preprocess");
    p.allow({"balance_labels", "balance_seed", "train_fraction", "split_seed"});
    m.preprocess.balance_labels = p.boolean("balance_labels", m.preprocess.balance_labels);
    m.preprocess.balance_seed = p.seed("balance_seed", m.preprocess.balance_seed);
    m.preprocess.train_fraction = p.number("train_fraction", m.preprocess.train_fraction);
    m.preprocess.split_seed = p.seed("split_seed", m.preprocess.split_seed);
  }
  if (r.has("teacher")) {
    const Reader t = r.object("teacher");
    m.plan.teacher = parse_train(t, m.plan.teacher);
    m.teacher_hidden = static_cast<int>(t.integer("hidden_units", m.teacher_hidden));
    if (m.teacher_hidden < 1) t.fail("hidden_units", "must be positive");
  }
  if (r.has("student")) {
    const Reader t = r.object("student");
    m.plan.student = parse_train(t, m.plan.student);
    m.student_hidden = static_cast<int>(t.integer("hidden_units", m.student_hidden));
    if (m.student_hidden < 1) t.fail("hidden_units", "must be positive");
  }
  if (r.has("plan")) {
    const Reader p = r.object("plan");
    p.allow({"temperatures", "alpha", "seeds"});
    m.plan.temperatures = p.numbers("temperatures", m.plan.temperatures);
    m.plan.alpha = p.number("alpha", m.plan.alpha);
    if (p.has("seeds")) {
      m.plan.seeds.clear();
      for (int64_t s : p.integers("seeds", {})) {
        if (s < 0) p.fail("seeds", "seeds must be nonnegative");
        m.plan.seeds.push_back(static_cast<uint64_t>(s));
      }
    }
  }
  if (r.has("analysis")) {
    const Reader a = r.object("analysis");
    a.allow({"threshold", "attributes"});
    m.analysis.threshold = a.number("threshold", m.analysis.threshold);
    m.analysis.attributes = a.strings("attributes");
  }
  m.output_dir = r.string("output_dir", "");
  m.validate();
  return m;
}

ExperimentManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("manifest not found: " + path.string());
  }
  return parse_manifest(io::read_file(path));
}

std::string manifest_to_json(const ExperimentManifest& m, bool include_output_dir) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  const auto& c = m.generation;
  ordered_json g;
  g["image_size"] = c.image_size;
  g["num_shapes"] = c.num_shapes;
  g["num_textures"] = c.num_textures;
  g["num_colors"] = c.num_colors;
  g["samples_per_cell"] = c.samples_per_cell;
  g["label_attribute"] = c.label_attribute;
  g["imbalance"] = ordered_json::object();
  for (const auto& [k, v] : c.imbalance) g["imbalance"][k] = v;
  g["label_group_correlation"] = c.label_group_correlation;
  g["correlated_attribute"] = c.correlated_attribute;
  g["attribute_names"] = ordered_json::object();
  for (const auto& [k, v] : c.attribute_names) g["attribute_names"][k] = v;
  g["seed"] = m.generation_seed;
  j["generation"] = g;
  j["preprocess"] = {{"balance_labels", m.preprocess.balance_labels},
                     {"balance_seed", m.preprocess.balance_seed},
                     {"train_fraction", m.preprocess.train_fraction},
                     {"split_seed", m.preprocess.split_seed}};
  j["teacher"] = train_to_json(m.plan.teacher);
  j["teacher"]["hidden_units"] = m.teacher_hidden;
  j["student"] = train_to_json(m.plan.student);
  j["student"]["hidden_units"] = m.student_hidden;
  j["plan"] = {{"temperatures", m.plan.temperatures},
               {"alpha", m.plan.alpha},
               {"seeds", m.plan.seeds}};
  j["analysis"] = {{"threshold", m.analysis.threshold},
                   {"attributes", m.analysis.attributes}};
  if (include_output_dir) j["output_dir"] = m.output_dir;
  return j.dump(2) + "\n";
}

}  // namespace kdbias
