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

// Experiment manifest: the single JSON document that drives generate, run,
// audit and report. Parsing is strict (unknown keys are rejected) and every
// error names the offending field.

#ifndef KDBIAS_MANIFEST_H_
#define KDBIAS_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kdbias/dataset.h"
#include "kdbias/distillation.h"

namespace kdbias {

struct PreprocessConfig {
  bool balance_labels = true;
  uint64_t balance_seed = 7;
  double train_fraction = 0.75;
  uint64_t split_seed = 11;
};

struct AnalysisConfig {
  double threshold = 0.05;
  std::vector<std::string> attributes;  // empty: every non-label attribute
};

struct ExperimentManifest {
  GenerationConfig generation;
  uint64_t generation_seed = 42;
  PreprocessConfig preprocess;
  ExperimentPlan plan;
  // Width of the hidden dense layer of each architecture.
  int teacher_hidden = 64;
  int student_hidden = 32;
  AnalysisConfig analysis;
  std::string output_dir;

  // Checks everything, including that analysis attributes exist in the
  // schema the generation config produces.
  void validate() const;
  // Attributes to audit after defaulting.
  std::vector<std::string> audit_attributes() const;
  // FNV-1a of the canonical JSON without output_dir.
  std::string hash() const;
};

ExperimentManifest parse_manifest(const std::string& json_text);
ExperimentManifest load_manifest(const std::filesystem::path& path);
// Canonical form with every field spelled out.
std::string manifest_to_json(const ExperimentManifest& m, bool include_output_dir = true);

}  // namespace kdbias

#endif  // KDBIAS_MANIFEST_H_
