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

#include "kdbias/prediction_log.h"

#include <set>
#include <sstream>

#include "kdbias/common.h"
#include "kdbias/io.h"

namespace kdbias {
namespace {

std::string where(size_t row, size_t line) {
  return "row " + std::to_string(row) + " (line " + std::to_string(line) + ")";
}

}  // namespace

int PredictionLog::attribute_index(const std::string& name) const {
  for (size_t i = 0; i < attribute_names.size(); ++i) {
    if (attribute_names[i] == name) return static_cast<int>(i);
  }
  throw ValidationError("unknown attribute '" + name + "'");
}

void PredictionLog::validate() const {
  if (num_classes < 2) throw ValidationError("prediction log needs at least 2 classes");
  std::set<int64_t> ids;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!ids.insert(r.example_id).second) {
      throw ValidationError("duplicate example_id " + std::to_string(r.example_id));
    }
    if (r.true_label < 0 || r.true_label >= num_classes || r.predicted_label < 0 ||
        r.predicted_label >= num_classes) {
      throw ValidationError("record " + std::to_string(i) + ": label out of range");
    }
    if (r.attributes.size() != attribute_names.size()) {
      throw ValidationError("record " + std::to_string(i) + ": attribute arity mismatch");
    }
    for (int g : r.attributes) {
      if (g < 0) throw ValidationError("record " + std::to_string(i) + ": negative group");
    }
  }
}

PredictionLog parse_prediction_log(const std::string& text, int num_classes) {
  if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
  const auto csv = io::parse_commented_csv(text);
  PredictionLog log;
  log.num_classes = num_classes;
  for (const auto& [key, value] : csv.metadata) {
    if (key == "model") log.model = value;
    else if (key == "split") log.split = value;
    else if (key == "manifest_hash") log.manifest_hash = value;
  }

  int id_col = -1, true_col = -1, pred_col = -1;
  std::vector<int> attr_cols;
  std::set<std::string> seen;
  for (size_t c = 0; c < csv.header.size(); ++c) {
    const std::string& name = csv.header[c];
    if (!seen.insert(name).second) throw SchemaError("duplicate column '" + name + "'");
    if (name == "example_id") {
      id_col = static_cast<int>(c);
    } else if (name == "true_label") {
      true_col = static_cast<int>(c);
    } else if (name == "predicted_label") {
      pred_col = static_cast<int>(c);
    } else if (name.size() > 5 && name.rfind("attr_", 0) == 0) {
      attr_cols.push_back(static_cast<int>(c));
      log.attribute_names.push_back(name.substr(5));
    } else {
      throw SchemaError("unknown column '" + name + "'");
    }
  }
  if (id_col < 0) throw SchemaError("missing column 'example_id'");
  if (true_col < 0) throw SchemaError("missing column 'true_label'");
  if (pred_col < 0) throw SchemaError("missing column 'predicted_label'");

  std::set<int64_t> ids;
  size_t row = 0;
  for (const auto& [line, fields] : csv.rows) {
    ++row;
    if (fields.size() != csv.header.size()) {
      throw SchemaError(where(row, line) + ": expected " + std::to_string(csv.header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    auto integer = [&](int col) {
      int64_t v = 0;
      if (!io::parse_int64(fields[col], &v)) {
        throw SchemaError(where(row, line) + ": '" + csv.header[col] + "' is not an integer");
      }
      return v;
    };
    PredictionRecord r;
    r.example_id = integer(id_col);
    const int64_t y = integer(true_col);
    const int64_t y_hat = integer(pred_col);
    if (y < 0 || y >= num_classes) {
      throw SchemaError(where(row, line) + ": true_label " + std::to_string(y) +
                        " out of range [0, " + std::to_string(num_classes) + ")");
    }
    if (y_hat < 0 || y_hat >= num_classes) {
      throw SchemaError(where(row, line) + ": predicted_label " + std::to_string(y_hat) +
                        " out of range [0, " + std::to_string(num_classes) + ")");
    }
    r.true_label = static_cast<int>(y);
    r.predicted_label = static_cast<int>(y_hat);
    for (int col : attr_cols) {
      const int64_t g = integer(col);
      if (g < 0 || g > INT32_MAX) {
        throw SchemaError(where(row, line) + ": '" + csv.header[col] + "' must be a nonnegative group index");
      }
      r.attributes.push_back(static_cast<int>(g));
    }
    if (!ids.insert(r.example_id).second) {
      throw SchemaError(where(row, line) + ": duplicate example_id " + std::to_string(r.example_id));
    }
    log.records.push_back(std::move(r));
  }
  return log;
}

PredictionLog load_prediction_log(const std::filesystem::path& path, int num_classes) {
  try {
    return parse_prediction_log(io::read_file(path), num_classes);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string format_prediction_log(const PredictionLog& log) {
  std::ostringstream out;
  if (!log.model.empty()) out << "# model=" << log.model << "\n";
  out << "# split=" << log.split << "\n";
  if (!log.manifest_hash.empty()) out << "# manifest_hash=" << log.manifest_hash << "\n";
  out << "example_id,true_label,predicted_label";
  for (const auto& name : log.attribute_names) out << ",attr_" << name;
  out << "\n";
  for (const auto& r : log.records) {
    out << r.example_id << "," << r.true_label << "," << r.predicted_label;
    for (int g : r.attributes) out << "," << g;
    out << "\n";
  }
  return out.str();
}

void save_prediction_log(const PredictionLog& log, const std::filesystem::path& path) {
  io::write_file_atomic(path, format_prediction_log(log));
}

}  // namespace kdbias
