#pragma once

// Implementations behind the `gauge` command-line tool. Each command writes
// results to `out`, diagnostics to `err`, and returns the process exit code.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gaugereader/fixtures.hpp"
#include "gaugereader/json_io.hpp"
#include "gaugereader/pipeline.hpp"
#include "gaugereader/report.hpp"
#include "gaugereader/synthgauge.hpp"

namespace gauge::cli {

enum ExitCode : int {
  kSuccess = 0,
  kReadingFailure = 1,
  kUsageOrIo = 2,
  kSchemaError = 3,
};

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::Io: return kUsageOrIo;
    default: return kSchemaError;
  }
}

inline PipelineConfig load_config(const std::optional<std::string>& path) {
  return path ? PipelineConfig::load(*path) : PipelineConfig{};
}

namespace detail {

inline std::string table_row(const std::string& path, const GaugeReadingReport& r) {
  std::string readings;
  for (const auto& rd : r.readings) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%s=%.6g", readings.empty() ? "" : " ", to_string(rd.scale), rd.value);
    readings += buf;
  }
  if (readings.empty()) readings = "-";
  std::string stages;
  for (const auto& st : r.stage_statuses) {
    if (!stages.empty()) stages += ' ';
    stages += to_string(st.stage);
    stages += st.ok() ? ":Ok" : std::string(":Failed(") + to_string(*st.failure) + ")";
  }
  return path + "\t" + readings + "\t" + r.unit.value_or("-") + "\t" + stages + "\n";
}

}  // namespace detail

/// Reads each fixture and prints its report. JSON output is a single report
/// for one input, otherwise an array of {"path", "report"} objects.
inline int cmd_read(const std::vector<std::string>& paths, const std::optional<std::string>& config_path, bool table,
                    std::ostream& out, std::ostream& err) {
  if (paths.empty()) {
    err << "read: no fixture paths given\n";
    return kUsageOrIo;
  }
  PipelineConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    err << "config: " << e.what() << "\n";
    return exit_code_for(e);
  }

  int code = kSuccess;
  json_io::Json many = json_io::Json::array();
  std::string single;
  for (const auto& path : paths) {
    GaugeReadingReport report;
    try {
      report = read_gauge(parse_fixture(json_io::read_file(path)), cfg);
    } catch (const Error& e) {
      err << path << ": " << e.what() << "\n";
      code = std::max(code, exit_code_for(e));
      continue;
    }
    if (report.readings.empty()) code = std::max(code, static_cast<int>(kReadingFailure));
    if (table) {
      out << detail::table_row(path, report);
    } else if (paths.size() == 1) {
      single = serialize_report(report);
    } else {
      many.push_back(json_io::Json{{"path", path}, {"report", report_to_json(report)}});
    }
  }
  if (!table) out << (paths.size() == 1 ? single : json_io::dump(many, 9));
  return code;
}

/// One batch entry from an evaluation manifest.
struct ManifestEntry {
  std::string name;
  std::string category;
  std::optional<std::string> fixture_path;
  std::optional<synth::SceneSpec> spec;
  std::optional<synth::PerturbationSpec> perturbation;
};

/// Manifest: {"fixtures": ["a.json" | {"path", "category"}],
///            "scenes": [{"spec", "perturbation"?, "category"?, "name"?}]}.
/// Relative paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> parse_manifest(const json_io::Json& doc, const std::filesystem::path& base_dir) {
  using namespace json_io;
  if (!doc.is_object()) throw Error(Errc::Schema, "manifest must be an object", "$");
  std::vector<ManifestEntry> entries;
  if (const Json* fixtures = optional_field(doc, "fixtures")) {
    as_array(*fixtures, "fixtures");
    for (std::size_t i = 0; i < fixtures->size(); ++i) {
      const Json& f = (*fixtures)[i];
      const std::string path = index("fixtures", i);
      ManifestEntry e;
      std::string file;
      if (f.is_string()) {
        file = f.get<std::string>();
      } else {
        file = as_string(require(f, "path", path), join(path, "path"));
        if (const Json* c = optional_field(f, "category")) e.category = as_string(*c, join(path, "category"));
      }
      std::filesystem::path p = file;
      if (p.is_relative()) p = base_dir / p;
      e.name = file;
      e.fixture_path = p.string();
      entries.push_back(std::move(e));
    }
  }
  if (const Json* scenes = optional_field(doc, "scenes")) {
    as_array(*scenes, "scenes");
    for (std::size_t i = 0; i < scenes->size(); ++i) {
      const Json& s = (*scenes)[i];
      const std::string path = index("scenes", i);
      ManifestEntry e;
      e.name = "scene_" + std::to_string(i);
      if (const Json* n = optional_field(s, "name")) e.name = as_string(*n, join(path, "name"));
      if (const Json* c = optional_field(s, "category")) e.category = as_string(*c, join(path, "category"));
      e.spec = synth::scene_spec_from_json(require(s, "spec", path), join(path, "spec"));
      if (const Json* p = optional_field(s, "perturbation")) {
        e.perturbation = synth::perturbation_from_json(*p, join(path, "perturbation"));
        if (!optional_field(*p, "seed")) e.perturbation->seed = i;
      }
      entries.push_back(std::move(e));
    }
  }
  return entries;
}

inline GaugeFixture materialize(const ManifestEntry& e) {
  if (e.fixture_path) return parse_fixture(json_io::read_file(*e.fixture_path));
  auto scene = synth::generate_scene(*e.spec);
  if (e.perturbation) return synth::perturb_scene(scene.fixture, scene.truth, *e.perturbation);
  return scene.fixture;
}

/// Evaluates a manifest: summary JSON to `out` (or to --out, printing its
/// path), the text table to `err`.
inline int cmd_eval(const std::string& manifest_path, const std::optional<std::string>& config_path,
                    const std::optional<std::string>& out_path, std::ostream& out, std::ostream& err) {
  EvalSummary summary;
  try {
    const PipelineConfig cfg = load_config(config_path);
    const auto entries = parse_manifest(json_io::parse_document(json_io::read_file(manifest_path)),
                                        std::filesystem::path(manifest_path).parent_path());
    std::vector<BatchItem> batch;
    batch.reserve(entries.size());
    for (const auto& e : entries) batch.push_back({e.name, e.category, materialize(e)});
    summary = evaluate_batch(batch, cfg);
  } catch (const Error& e) {
    err << "eval: " << e.what() << "\n";
    return exit_code_for(e);
  }

  const std::string json = serialize_summary(summary);
  if (out_path) {
    try {
      json_io::write_file(*out_path, json);
    } catch (const Error& e) {
      err << "eval: " << e.what() << "\n";
      return kUsageOrIo;
    }
    out << *out_path << "\n";
  } else {
    out << json;
  }
  err << format_summary_table(summary);
  return kSuccess;
}

/// Writes scene_<index>.json for a single spec, a {"spec", "perturbation"}
/// entry, or a {"scenes": [...]} manifest. A perturbation without its own
/// seed uses `seed + index`.
inline int cmd_generate(const std::string& input_path, std::uint64_t seed, const std::string& out_dir,
                        std::ostream& out, std::ostream& err) {
  using json_io::Json;
  std::vector<std::string> written;
  try {
    const Json doc = json_io::parse_document(json_io::read_file(input_path));
    std::vector<const Json*> entries;
    const Json* scenes = json_io::optional_field(doc, "scenes");
    if (scenes) {
      json_io::as_array(*scenes, "scenes");
      for (const auto& s : *scenes) entries.push_back(&s);
    } else {
      entries.push_back(&doc);
    }

    std::vector<GaugeFixture> fixtures;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const Json& entry = *entries[i];
      const std::string path = scenes ? json_io::index("scenes", i) : "";
      const bool wrapped = entry.is_object() && entry.contains("spec");
      const auto spec = synth::scene_spec_from_json(wrapped ? entry["spec"] : entry, wrapped ? json_io::join(path, "spec") : path);
      auto scene = synth::generate_scene(spec);
      const Json* pj = wrapped ? json_io::optional_field(entry, "perturbation") : nullptr;
      if (pj) {
        auto p = synth::perturbation_from_json(*pj, json_io::join(path, "perturbation"));
        if (!json_io::optional_field(*pj, "seed")) p.seed = seed + i;
        fixtures.push_back(synth::perturb_scene(scene.fixture, scene.truth, p));
      } else {
        fixtures.push_back(std::move(scene.fixture));
      }
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(Errc::Io, "cannot create output directory", out_dir);
    for (std::size_t i = 0; i < fixtures.size(); ++i) {
      const auto file = (std::filesystem::path(out_dir) / ("scene_" + std::to_string(i) + ".json")).string();
      json_io::write_file(file, serialize_fixture(fixtures[i]));
      written.push_back(file);
    }
  } catch (const Error& e) {
    err << "generate: " << e.what() << "\n";
    return exit_code_for(e);
  }
  for (const auto& w : written) out << w << "\n";
  return kSuccess;
}

}  // namespace gauge::cli
