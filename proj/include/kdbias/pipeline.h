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

// generate -> run -> audit -> report over one output directory. Layout and
// file schemas are described in docs/formats.md.

#ifndef KDBIAS_PIPELINE_H_
#define KDBIAS_PIPELINE_H_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kdbias/dataset.h"
#include "kdbias/distillation.h"
#include "kdbias/manifest.h"

namespace kdbias {

inline constexpr int kReportSchemaVersion = 1;

struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path dataset() const { return root / "dataset"; }
  std::filesystem::path run() const { return root / "run"; }
  std::filesystem::path logs() const { return root / "run" / "logs"; }
  std::filesystem::path groups() const { return root / "run" / "groups"; }
  std::filesystem::path run_index() const { return root / "run" / "run.json"; }
  std::filesystem::path audit() const { return root / "audit"; }
  std::filesystem::path report_json() const { return root / "audit" / "report.json"; }
  std::filesystem::path report() const { return root / "report"; }
};

// "5", "2.5"; used in file names and CSV cells.
std::string temperature_tag(double t);
// teacher_seed3, nds_seed3, ds_T5_seed3
std::string run_name(ModelKind kind, double temperature, uint64_t seed);

// Exclusive lock on an output directory, released on destruction. Throws
// std::runtime_error if another command holds it.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Generation, label balancing and split exactly as cmd_generate + cmd_run
// perform them, without touching disk.
struct PreparedData {
  Dataset full;
  Dataset train;
  Dataset test;
};
Dataset generate_dataset(const ExperimentManifest& m);
PreparedData prepare_splits(const ExperimentManifest& m, const Dataset& full);

void cmd_generate(const ExperimentManifest& m, const std::filesystem::path& out,
                  std::ostream& log);
void cmd_run(const ExperimentManifest& m, const std::filesystem::path& out, int jobs,
             std::ostream& log);
void cmd_audit(const std::filesystem::path& out, std::ostream& log);
void cmd_report(const std::filesystem::path& out, std::ostream& log);

// Structural check of the master report; throws SchemaError naming the
// first offending path.
void validate_master_report(const nlohmann::json& report);

}  // namespace kdbias

#endif  // KDBIAS_PIPELINE_H_
