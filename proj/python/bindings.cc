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

// Python bindings: the pipeline commands plus the numerical and audit
// primitives, for notebooks and smoke tests.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kdbias/bias.h"
#include "kdbias/common.h"
#include "kdbias/fairness.h"
#include "kdbias/io.h"
#include "kdbias/manifest.h"
#include "kdbias/nn.h"
#include "kdbias/pipeline.h"
#include "kdbias/prediction_log.h"
#include "kdbias/stats.h"

namespace py = pybind11;
using namespace kdbias;

namespace {

ExperimentManifest manifest_from(const std::string& path, std::optional<uint64_t> seed) {
  ExperimentManifest m = load_manifest(path);
  if (seed) {
    m.generation_seed = *seed;
    m.validate();
  }
  return m;
}

template <typename Fn>
std::string logged(Fn&& fn) {
  std::ostringstream log;
  {
    py::gil_scoped_release release;
    fn(log);
  }
  return log.str();
}

py::dict fairness_dict(const FairnessReport& r) {
  py::dict d;
  d["attribute"] = r.attribute;
  d["dpd"] = r.dpd;
  d["eod"] = r.eod;
  py::list per_class;
  for (const auto& c : r.per_class) {
    py::dict row;
    row["label"] = c.label;
    row["dpd"] = c.dpd;
    row["eod"] = c.eod;
    per_class.append(row);
  }
  d["per_class"] = per_class;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "kdbias C++ core";

  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", validation.ptr());
  py::register_exception<MissingArtifactError>(m, "MissingArtifactError", PyExc_FileNotFoundError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.def("softmax_t", [](const std::vector<double>& z, double t) { return softmax_t(z, t); },
        py::arg("logits"), py::arg("temperature"));
  m.def("student_t_cdf", &student_t_cdf, py::arg("t"), py::arg("df"));
  m.def(
      "welch_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const TTestResult r = welch_t_test(a, b);
        py::dict d;
        d["t"] = r.t;
        d["df"] = r.df;
        d["p"] = r.p;
        return d;
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
      py::arg("x"), py::arg("y"));

  m.def(
      "canonical_manifest",
      [](const std::string& text) { return manifest_to_json(parse_manifest(text)); },
      py::arg("text"), "Parse, validate and return the canonical JSON form.");
  m.def(
      "manifest_hash", [](const std::string& text) { return parse_manifest(text).hash(); },
      py::arg("text"));

  m.def(
      "class_accuracies",
      [](const std::string& log_path, int num_classes) {
        return class_accuracies(load_prediction_log(log_path, num_classes), num_classes);
      },
      py::arg("log_path"), py::arg("num_classes"));
  m.def(
      "fairness",
      [](const std::string& log_path, int num_classes, const std::string& attribute) {
        return fairness_dict(fairness_report(load_prediction_log(log_path, num_classes), attribute));
      },
      py::arg("log_path"), py::arg("num_classes"), py::arg("attribute"));

  m.def(
      "generate",
      [](const std::string& config, const std::string& out, std::optional<uint64_t> seed) {
        const auto mf = manifest_from(config, seed);
        return logged([&](std::ostream& log) { cmd_generate(mf, out, log); });
      },
      py::arg("config"), py::arg("out"), py::arg("seed_override") = py::none());
  m.def(
      "run",
      [](const std::string& config, const std::string& out, int jobs, std::optional<uint64_t> seed) {
        if (jobs < 1) throw ValidationError("jobs must be positive");
        const auto mf = manifest_from(config, seed);
        return logged([&](std::ostream& log) { cmd_run(mf, out, jobs, log); });
      },
      py::arg("config"), py::arg("out"), py::arg("jobs") = 1, py::arg("seed_override") = py::none());
  m.def(
      "audit", [](const std::string& out) { return logged([&](std::ostream& log) { cmd_audit(out, log); }); },
      py::arg("out"));
  m.def(
      "report",
      [](const std::string& out) { return logged([&](std::ostream& log) { cmd_report(out, log); }); },
      py::arg("out"));
  m.def(
      "validate_report",
      [](const std::string& text) { validate_master_report(nlohmann::json::parse(text)); },
      py::arg("text"));
}
