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

// Per-example prediction records of one model on one split, and their CSV
// form:
//
//   # key=value            (optional metadata lines)
//   example_id,true_label,predicted_label,attr_<name>...
//   17,2,2,0,1
//
// Column order is free but the column set is strict: any header that is not
// one of the three fixed names or an attr_ column is rejected.

#ifndef KDBIAS_PREDICTION_LOG_H_
#define KDBIAS_PREDICTION_LOG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace kdbias {

struct PredictionRecord {
  int64_t example_id = 0;
  int true_label = 0;
  int predicted_label = 0;
  std::vector<int> attributes;  // aligned with PredictionLog::attribute_names
};

struct PredictionLog {
  int num_classes = 0;
  std::vector<std::string> attribute_names;
  std::vector<PredictionRecord> records;
  std::string split = "test";
  std::string model;
  std::string manifest_hash;

  size_t size() const { return records.size(); }
  // Throws ValidationError if the attribute is not part of the log.
  int attribute_index(const std::string& name) const;
  // Unique ids, labels in range, attribute arity, nonnegative groups.
  void validate() const;
};

PredictionLog load_prediction_log(const std::filesystem::path& path, int num_classes);
PredictionLog parse_prediction_log(const std::string& text, int num_classes);

std::string format_prediction_log(const PredictionLog& log);
void save_prediction_log(const PredictionLog& log, const std::filesystem::path& path);

}  // namespace kdbias

#endif  // KDBIAS_PREDICTION_LOG_H_
