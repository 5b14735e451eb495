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

#include "kdbias/pipeline.h"

#include <fcntl.h>
#include <unistd.h>

#include <cmath>
#include <map>
#include <sstream>

#include "kdbias/bias.h"
#include "kdbias/common.h"
#include "kdbias/fairness.h"
#include "kdbias/io.h"
#include "kdbias/prediction_log.h"
#include "kdbias/stats.h"

namespace kdbias {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kRunIndexVersion = 1;

// JSON has no infinities; the degenerate Welch case stores t as null.
ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string relative_to(const fs::path& p, const fs::path& root) {
  return p.lexically_relative(root).generic_string();
}

std::string group_file(ModelKind kind, double t) {
  if (kind == ModelKind::kDs) return "ds_T" + temperature_tag(t) + ".json";
  return kind_name(kind) + ".json";
}

void check_hash(const std::string& what, const std::string& found, const std::string& expected) {
  if (found != expected) {
    throw ValidationError("manifest hash mismatch in " + what + ": found '" + found +
                          "', expected '" + expected + "'");
  }
}

ordered_json group_stats(const RunGroup& g) {
  ordered_json j;
  j["overall_acc_mean"] = mean(g.overall_accuracy);
  j["overall_acc_std"] = g.runs() > 1 ? sample_std(g.overall_accuracy) : 0.0;
  std::vector<double> class_mean(static_cast<size_t>(g.num_classes()), 0.0);
  for (const auto& row : g.class_accuracy) {
    for (size_t c = 0; c < row.size(); ++c) class_mean[c] += row[c] / static_cast<double>(g.runs());
  }
  j["class_acc_mean"] = class_mean;
  return j;
}

std::string format_significance(const SignificanceReport& r, const std::string& comparison,
                                double t, const std::string& hash) {
  std::ostringstream out;
  out << "# schema_version=1\n# manifest_hash=" << hash << "\n# comparison=" << comparison
      << "\n# temperature=" << temperature_tag(t) << "\n# threshold=" << io::format_double(r.threshold)
      << "\nclass,p_value,t,df,significant\n";
  for (const auto& c : r.classes) {
    out << c.label << ',' << io::format_double(c.test.p) << ',' << io::format_double(c.test.t) << ','
        << io::format_double(c.test.df) << ',' << (c.significant ? 1 : 0) << '\n';
  }
  return out.str();
}

ordered_json significance_json(const SignificanceReport& r) {
  ordered_json arr = ordered_json::array();
  for (const auto& c : r.classes) {
    arr.push_back({{"class", c.label},
                   {"p_value", c.test.p},
                   {"t", finite_or_null(c.test.t)},
                   {"df", c.test.df},
                   {"significant", c.significant}});
  }
  return arr;
}

std::string format_matrix(const DisagreementMatrix& m, double t, const std::string& hash) {
  std::ostringstream out;
  out << "# schema_version=1\n# manifest_hash=" << hash << "\n# pair=" << m.pair;
  if (t > 0) out << "\n# temperature=" << temperature_tag(t);
  out << "\n# runs_averaged=" << m.runs_averaged << "\npred_a";
  for (int j = 0; j < m.num_classes; ++j) out << ',' << j;
  out << '\n';
  for (int i = 0; i < m.num_classes; ++i) {
    out << i;
    for (int j = 0; j < m.num_classes; ++j) out << ',' << io::format_double(m.at(i, j));
    out << '\n';
  }
  return out.str();
}

DisagreementMatrix paired_matrix(const std::vector<PredictionLog>& a,
                                 const std::vector<PredictionLog>& b, const std::string& pair) {
  std::vector<DisagreementMatrix> ms;
  for (size_t k = 0; k < a.size(); ++k) ms.push_back(disagreement_matrix(a[k], b[k], pair));
  return average_matrices(ms);
}

// Reads a JSON file, mapping parse failures to SchemaError.
json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string cell(const json& v, double scale = 1.0) {
  if (v.is_null()) return "NA";
  return io::format_double(v.get<double>() * scale);
}

}  // namespace

std::string temperature_tag(double t) { return io::format_double(t); }

std::string run_name(ModelKind kind, double temperature, uint64_t seed) {
  std::string name = kind_name(kind);
  if (kind == ModelKind::kDs) name += "_T" + temperature_tag(temperature);
  return name + "_seed" + std::to_string(seed);
}

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / ".kdbias.lock") {
  fs::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw std::runtime_error("output directory is locked by another command (" + path_.string() +
                             "); remove the lock file if no command is running");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  if (::write(fd, pid.data(), pid.size()) < 0) {
    // The lock is the file's existence; the pid is informational only.
  }
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

Dataset generate_dataset(const ExperimentManifest& m) {
  return generate_trifeature(m.generation, m.generation_seed);
}

PreparedData prepare_splits(const ExperimentManifest& m, const Dataset& full) {
  PreparedData p;
  p.full = full;
  const Dataset balanced =
      m.preprocess.balance_labels ? balance_by_label(full, m.preprocess.balance_seed) : full;
  SplitResult s = split(balanced, m.preprocess.train_fraction, m.preprocess.split_seed);
  p.train = std::move(s.train);
  p.test = std::move(s.test);
  return p;
}

void cmd_generate(const ExperimentManifest& m, const fs::path& out, std::ostream& log) {
  m.validate();
  const OutputLayout layout{out};
  DirectoryLock lock(out);
  const std::string hash = m.hash();
  const Dataset d = generate_dataset(m);
  save_dataset(d, layout.dataset(), hash);
  io::write_file_atomic(layout.manifest(), manifest_to_json(m));
  log << "generated " << d.size() << " examples (" << d.num_classes << " classes) into "
      << layout.dataset().string() << ", manifest hash " << hash << "\n";
}

void cmd_run(const ExperimentManifest& m, const fs::path& out, int jobs, std::ostream& log) {
  m.validate();
  if (jobs < 1) throw ValidationError("jobs: must be >= 1");
  const OutputLayout layout{out};
  if (!fs::exists(layout.manifest()) || !fs::exists(layout.dataset() / "examples.csv")) {
    throw MissingArtifactError("no dataset in " + out.string() + "; run `generate` first");
  }
  DirectoryLock lock(out);
  const std::string hash = m.hash();
  check_hash(layout.manifest().string(), load_manifest(layout.manifest()).hash(), hash);
  std::string data_hash;
  const Dataset full = load_dataset(layout.dataset(), &data_hash);
  check_hash(layout.dataset().string(), data_hash, hash);

  if (m.plan.seeds.size() < 5) {
    log << "WARNING: only " << m.plan.seeds.size()
        << " seeds configured; significance tests are weak below 5 runs\n";
  }
  // A rerun replaces everything; run.json appears only once all logs exist.
  fs::remove_all(layout.run());
  fs::create_directories(layout.logs());

  const PreparedData data = prepare_splits(m, full);
  ExperimentPlan plan = m.plan;
  plan.jobs = jobs;
  plan.teacher_arch = teacher_architecture(data.train.num_classes, m.teacher_hidden);
  plan.student_arch = student_architecture(data.train.num_classes, m.student_hidden);
  Experiment exp(data.train, data.test, plan);
  log << "train " << data.train.size() << ", test " << data.test.size() << "\n";

  ordered_json index;
  index["schema_version"] = kRunIndexVersion;
  index["manifest_hash"] = hash;
  index["num_classes"] = data.test.num_classes;
  index["seeds"] = plan.seeds;
  index["temperatures"] = plan.temperatures;
  index["alpha"] = plan.alpha;
  index["runs"] = ordered_json::array();
  index["groups"] = ordered_json::array();

  auto record = [&](ModelKind kind, double t) {
    GroupResult r = exp.run_group(kind, t);
    for (size_t k = 0; k < r.logs.size(); ++k) {
      PredictionLog& pl = r.logs[k];
      pl.model = run_name(kind, t, plan.seeds[k]);
      pl.manifest_hash = hash;
      const fs::path path = layout.logs() / (pl.model + ".csv");
      save_prediction_log(pl, path);
      ordered_json entry;
      entry["name"] = pl.model;
      entry["model_kind"] = kind_name(kind);
      entry["temperature"] = kind == ModelKind::kDs ? ordered_json(t) : ordered_json(nullptr);
      entry["seed"] = plan.seeds[k];
      entry["log"] = relative_to(path, layout.run());
      entry["test_accuracy"] = r.group.overall_accuracy[k];
      index["runs"].push_back(entry);
    }
    const fs::path gpath = layout.groups() / group_file(kind, t);
    io::write_file_atomic(gpath, format_run_group_summary(r.group, hash));
    index["groups"].push_back(relative_to(gpath, layout.run()));
    log << kind_name(kind);
    if (kind == ModelKind::kDs) log << " T=" << temperature_tag(t);
    log << ": mean test accuracy " << io::format_fixed(100.0 * mean(r.group.overall_accuracy), 2)
        << "%\n";
  };
  record(ModelKind::kTeacher, 0);
  record(ModelKind::kNds, 0);
  for (double t : plan.temperatures) record(ModelKind::kDs, t);
  io::write_file_atomic(layout.run_index(), index.dump(2) + "\n");
}

void cmd_audit(const fs::path& out, std::ostream& log) {
  const OutputLayout layout{out};
  std::vector<std::string> missing;
  for (const fs::path& p : {layout.manifest(), layout.run_index()}) {
    if (!fs::exists(p)) missing.push_back(p.string());
  }
  json index;
  if (missing.empty()) {
    index = read_json(layout.run_index());
    if (!index.contains("runs") || !index["runs"].is_array()) {
      throw SchemaError(layout.run_index().string() + ": 'runs' missing");
    }
    for (const auto& r : index["runs"]) {
      const fs::path p = layout.run() / r.at("log").get<std::string>();
      if (!fs::exists(p)) missing.push_back(p.string());
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing artifacts:";
    for (const auto& p : missing) msg += "\n  " + p;
    throw MissingArtifactError(msg);
  }

  DirectoryLock lock(out);
  const ExperimentManifest m = load_manifest(layout.manifest());
  const std::string hash = m.hash();
  check_hash(layout.run_index().string(), index.at("manifest_hash").get<std::string>(), hash);
  const int k = index.at("num_classes").get<int>();
  const auto seeds = index.at("seeds").get<std::vector<uint64_t>>();
  const auto temperatures = index.at("temperatures").get<std::vector<double>>();
  const double alpha = index.at("alpha").get<double>();
  const double threshold = m.analysis.threshold;

  std::vector<PredictionLog> teacher, nds;
  std::map<double, std::vector<PredictionLog>> ds;
  for (const auto& r : index["runs"]) {
    const fs::path p = layout.run() / r.at("log").get<std::string>();
    PredictionLog pl = load_prediction_log(p, k);
    check_hash(p.string(), pl.manifest_hash, hash);
    const std::string kind = r.at("model_kind").get<std::string>();
    if (kind == "teacher") {
      teacher.push_back(std::move(pl));
    } else if (kind == "nds") {
      nds.push_back(std::move(pl));
    } else {
      ds[r.at("temperature").get<double>()].push_back(std::move(pl));
    }
  }

  fs::remove_all(layout.audit());
  fs::create_directories(layout.audit());
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, const std::string& content) {
    io::write_file_atomic(layout.audit() / name, content);
    files.push_back(name);
  };

  const RunGroup g_teacher = make_run_group("teacher", 0, 0, seeds, teacher);
  const RunGroup g_nds = make_run_group("nds", 0, 0, seeds, nds);

  ordered_json report;
  report["schema_version"] = kReportSchemaVersion;
  report["manifest_hash"] = hash;
  report["num_classes"] = k;
  report["threshold"] = threshold;
  report["alpha"] = alpha;
  report["seeds"] = seeds;
  report["temperatures"] = temperatures;
  report["baselines"] = {{"teacher", group_stats(g_teacher)}, {"nds", group_stats(g_nds)}};
  report["sweep"] = ordered_json::array();
  report["disagreement"] = ordered_json::array();

  auto add_matrix = [&](const DisagreementMatrix& dm, double t) {
    std::string name = "disagreement_" + dm.pair;
    if (t > 0) name += "_T" + temperature_tag(t);
    name += ".csv";
    emit(name, format_matrix(dm, t, hash));
    report["disagreement"].push_back({{"pair", dm.pair},
                                      {"temperature", t > 0 ? ordered_json(t) : ordered_json(nullptr)},
                                      {"runs_averaged", dm.runs_averaged},
                                      {"total", dm.total()},
                                      {"file", name}});
  };
  add_matrix(paired_matrix(teacher, nds, "teacher-vs-nds"), 0);

  std::ostringstream summary;
  summary << "# schema_version=1\n# manifest_hash=" << hash << "\n# threshold="
          << io::format_double(threshold)
          << "\ntemperature,overall_acc_mean,overall_acc_std,num_SC,num_TC\n";
  for (double t : temperatures) {
    const auto& logs = ds.at(t);
    const RunGroup g = make_run_group("ds", t, alpha, seeds, logs);
    const SignificanceReport sc = significant_classes(g_nds, g, threshold);
    const SignificanceReport tc = significant_classes(g_teacher, g, threshold);
    emit("significance_SC_T" + temperature_tag(t) + ".csv",
         format_significance(sc, "nds-vs-ds", t, hash));
    emit("significance_TC_T" + temperature_tag(t) + ".csv",
         format_significance(tc, "teacher-vs-ds", t, hash));
    add_matrix(paired_matrix(teacher, logs, "teacher-vs-ds"), t);
    add_matrix(paired_matrix(nds, logs, "nds-vs-ds"), t);

    ordered_json row;
    row["temperature"] = t;
    const ordered_json stats = group_stats(g);
    for (const auto& [key, value] : stats.items()) row[key] = value;
    row["num_SC"] = sc.num_significant;
    row["num_TC"] = tc.num_significant;
    row["significance"] = {{"SC", significance_json(sc)}, {"TC", significance_json(tc)}};
    report["sweep"].push_back(row);
    summary << temperature_tag(t) << ',' << io::format_double(row["overall_acc_mean"].get<double>())
            << ',' << io::format_double(row["overall_acc_std"].get<double>()) << ','
            << sc.num_significant << ',' << tc.num_significant << '\n';
  }
  emit("summary.csv", summary.str());

  report["fairness"] = ordered_json::object();
  for (const auto& attr : m.audit_attributes()) {
    const auto rows = fairness_sweep(teacher, nds, ds, attr);
    emit("fairness_" + attr + ".csv", format_fairness_table(rows, hash));
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
      arr.push_back({{"model", r.model},
                     {"temperature", r.model == "ds" ? ordered_json(r.temperature) : ordered_json(nullptr)},
                     {"acc_mean", r.acc_mean},
                     {"acc_std", r.acc_std},
                     {"eod_mean", optional_json(r.eod_mean)},
                     {"eod_std", optional_json(r.eod_std)},
                     {"dpd_mean", optional_json(r.dpd_mean)},
                     {"dpd_std", optional_json(r.dpd_std)}});
    }
    report["fairness"][attr] = arr;
  }
  files.push_back("report.json");
  report["files"] = files;
  validate_master_report(json::parse(report.dump()));
  io::write_file_atomic(layout.report_json(), report.dump(2) + "\n");
  log << "audit: " << files.size() << " files in " << layout.audit().string() << "\n";
}

void cmd_report(const fs::path& out, std::ostream& log) {
  const OutputLayout layout{out};
  if (!fs::exists(layout.run_index())) {
    throw MissingArtifactError("no run artifacts in " + out.string() + "; run `run` first");
  }
  if (!fs::exists(layout.report_json())) {
    throw MissingArtifactError("audit report missing: " + layout.report_json().string() +
                               "; run `audit` first");
  }
  const json report = read_json(layout.report_json());
  validate_master_report(report);
  DirectoryLock lock(out);
  const std::string hash = report["manifest_hash"].get<std::string>();
  const std::string head = "# schema_version=1\n# manifest_hash=" + hash +
                           "\n# units=percent for accuracies and fairness metrics\n"
                           "temperature,series,value,std\n";

  std::ostringstream bias;
  bias << head;
  const auto& base = report["baselines"];
  for (const auto& row : report["sweep"]) {
    const std::string t = temperature_tag(row["temperature"].get<double>());
    bias << t << ",test_acc," << cell(row["overall_acc_mean"], 100) << ','
         << cell(row["overall_acc_std"], 100) << '\n';
    bias << t << ",num_SC," << row["num_SC"].get<int>() << ",\n";
    bias << t << ",num_TC," << row["num_TC"].get<int>() << ",\n";
    for (const char* b : {"teacher", "nds"}) {
      bias << t << ',' << b << "_test_acc," << cell(base[b]["overall_acc_mean"], 100) << ','
           << cell(base[b]["overall_acc_std"], 100) << '\n';
    }
  }
  fs::remove_all(layout.report());
  io::write_file_atomic(layout.report() / "fig_bias.csv", bias.str());

  for (const auto& [attr, rows] : report["fairness"].items()) {
    std::map<std::string, json> baselines;
    for (const auto& r : rows) {
      if (r["model"] != "ds") baselines[r["model"].get<std::string>()] = r;
    }
    std::ostringstream fair;
    fair << head;
    for (const auto& r : rows) {
      if (r["model"] != "ds") continue;
      const std::string t = temperature_tag(r["temperature"].get<double>());
      fair << t << ",EOD," << cell(r["eod_mean"], 100) << ',' << cell(r["eod_std"], 100) << '\n';
      fair << t << ",DPD," << cell(r["dpd_mean"], 100) << ',' << cell(r["dpd_std"], 100) << '\n';
      for (const auto& [name, b] : baselines) {
        fair << t << ',' << name << "_EOD," << cell(b["eod_mean"], 100) << ','
             << cell(b["eod_std"], 100) << '\n';
        fair << t << ',' << name << "_DPD," << cell(b["dpd_mean"], 100) << ','
             << cell(b["dpd_std"], 100) << '\n';
      }
    }
    io::write_file_atomic(layout.report() / ("fig_fairness_" + attr + ".csv"), fair.str());
  }
  log << "report: plot data in " << layout.report().string() << "\n";
}

void validate_master_report(const json& report) {
  auto fail = [](const std::string& path, const std::string& what) {
    throw SchemaError("report" + path + ": " + what);
  };
  auto need = [&](const json& obj, const std::string& path, const char* key) -> const json& {
    if (!obj.is_object()) fail(path, "expected an object");
    if (!obj.contains(key)) fail(path + "." + key, "missing");
    return obj.at(key);
  };
  auto number = [&](const json& obj, const std::string& path, const char* key, bool nullable) {
    const json& v = need(obj, path, key);
    if (!(v.is_number() || (nullable && v.is_null()))) fail(path + "." + key, "expected a number");
  };
  auto integer = [&](const json& obj, const std::string& path, const char* key) {
    if (!need(obj, path, key).is_number_integer()) fail(path + "." + key, "expected an integer");
  };
  auto array = [&](const json& obj, const std::string& path, const char* key) -> const json& {
    const json& v = need(obj, path, key);
    if (!v.is_array()) fail(path + "." + key, "expected an array");
    return v;
  };
  auto group = [&](const json& g, const std::string& path) {
    number(g, path, "overall_acc_mean", false);
    number(g, path, "overall_acc_std", false);
    for (const auto& v : array(g, path, "class_acc_mean")) {
      if (!v.is_number()) fail(path + ".class_acc_mean", "expected numbers");
    }
  };

  if (need(report, "", "schema_version") != kReportSchemaVersion) {
    fail(".schema_version", "unsupported version");
  }
  if (!need(report, "", "manifest_hash").is_string()) fail(".manifest_hash", "expected a string");
  integer(report, "", "num_classes");
  number(report, "", "threshold", false);
  number(report, "", "alpha", false);
  array(report, "", "seeds");
  array(report, "", "temperatures");
  const json& base = need(report, "", "baselines");
  group(need(base, ".baselines", "teacher"), ".baselines.teacher");
  group(need(base, ".baselines", "nds"), ".baselines.nds");
  const json& sweep = array(report, "", "sweep");
  for (size_t i = 0; i < sweep.size(); ++i) {
    const std::string p = ".sweep[" + std::to_string(i) + "]";
    number(sweep[i], p, "temperature", false);
    group(sweep[i], p);
    integer(sweep[i], p, "num_SC");
    integer(sweep[i], p, "num_TC");
    const json& sig = need(sweep[i], p, "significance");
    for (const char* which : {"SC", "TC"}) {
      const std::string sp = p + ".significance." + which;
      const json& rows = array(sig, p + ".significance", which);
      for (const auto& r : rows) {
        integer(r, sp, "class");
        number(r, sp, "p_value", false);
        number(r, sp, "t", true);
        number(r, sp, "df", false);
        if (!need(r, sp, "significant").is_boolean()) fail(sp + ".significant", "expected a boolean");
      }
    }
  }
  const json& dis = array(report, "", "disagreement");
  for (size_t i = 0; i < dis.size(); ++i) {
    const std::string p = ".disagreement[" + std::to_string(i) + "]";
    if (!need(dis[i], p, "pair").is_string()) fail(p + ".pair", "expected a string");
    number(dis[i], p, "temperature", true);
    integer(dis[i], p, "runs_averaged");
    number(dis[i], p, "total", false);
    if (!need(dis[i], p, "file").is_string()) fail(p + ".file", "expected a string");
  }
  const json& fair = need(report, "", "fairness");
  if (!fair.is_object()) fail(".fairness", "expected an object");
  for (const auto& [attr, rows] : fair.items()) {
    const std::string p = ".fairness." + attr;
    if (!rows.is_array()) fail(p, "expected an array");
    for (const auto& r : rows) {
      if (!need(r, p, "model").is_string()) fail(p + ".model", "expected a string");
      number(r, p, "temperature", true);
      number(r, p, "acc_mean", false);
      number(r, p, "acc_std", false);
      for (const char* key : {"eod_mean", "eod_std", "dpd_mean", "dpd_std"}) number(r, p, key, true);
    }
  }
  array(report, "", "files");
}

}  // namespace kdbias
