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

// kdbias: generate | run | audit | report
//
// Exit codes: 0 success, 2 invalid configuration or input schema, 3 runtime
// or training failure, 4 missing artifacts.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kdbias/common.h"
#include "kdbias/manifest.h"
#include "kdbias/pipeline.h"

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutRootEnv = "KDBIAS_OUT_ROOT";

struct Options {
  std::string config;
  std::string out;
  int jobs = 1;
  std::optional<uint64_t> seed_override;
};

kdbias::ExperimentManifest read_manifest(const Options& o) {
  kdbias::ExperimentManifest m = kdbias::load_manifest(o.config);
  if (o.seed_override) {
    m.generation_seed = *o.seed_override;
    m.validate();
  }
  return m;
}

// --out wins; then the manifest's output_dir, placed under $KDBIAS_OUT_ROOT
// when relative; then $KDBIAS_OUT_ROOT/<config stem>.
fs::path resolve_out(const Options& o, const kdbias::ExperimentManifest* m) {
  if (!o.out.empty()) return o.out;
  const char* root = std::getenv(kOutRootEnv);
  if (m && !m->output_dir.empty()) {
    fs::path dir = m->output_dir;
    if (dir.is_relative() && root && *root) return fs::path(root) / dir;
    return dir;
  }
  if (root && *root && !o.config.empty()) return fs::path(root) / fs::path(o.config).stem();
  throw kdbias::ValidationError(
      "no output directory: pass --out, set output_dir in the manifest, or set " +
      std::string(kOutRootEnv));
}

int dispatch(const std::string& command, const Options& o) {
  if (command == "generate" || command == "run") {
    if (o.config.empty()) throw kdbias::ValidationError("--config is required for " + command);
    const auto m = read_manifest(o);
    const fs::path out = resolve_out(o, &m);
    if (command == "generate") {
      kdbias::cmd_generate(m, out, std::cerr);
    } else {
      kdbias::cmd_run(m, out, o.jobs, std::cerr);
    }
    return 0;
  }
  std::optional<kdbias::ExperimentManifest> m;
  if (!o.config.empty()) m = read_manifest(o);
  const fs::path out = resolve_out(o, m ? &*m : nullptr);
  if (command == "audit") {
    kdbias::cmd_audit(out, std::cerr);
  } else {
    kdbias::cmd_report(out, std::cerr);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-bias and fairness audit of knowledge distillation"};
  app.require_subcommand(1);
  Options o;
  const std::pair<const char*, const char*> commands[] = {
      {"generate", "Render the synthetic dataset described by a manifest"},
      {"run", "Train teacher, student and distilled runs and write prediction logs"},
      {"audit", "Significance tests, disagreement matrices and fairness tables"},
      {"report", "Long-format plot data from an audit"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "Experiment manifest (JSON)");
    sub->add_option("--out", o.out, "Output directory (default: manifest output_dir or $KDBIAS_OUT_ROOT)");
    sub->add_option("--jobs", o.jobs, "Concurrent training runs")->check(CLI::PositiveNumber);
    sub->add_option("--seed-override", o.seed_override, "Replace the manifest's generation seed");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, o);
  } catch (const kdbias::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const kdbias::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
