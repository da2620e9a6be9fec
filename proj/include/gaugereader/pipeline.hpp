#pragma once

// Fixture -> report: ellipse fit, circularization, orientation, needle fit and
// intersection, marker projection, per-scale linear model and reading. Every
// failure is recorded as a stage status; read_gauge does not throw on valid
// fixtures.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaugereader/fixtures.hpp"
#include "gaugereader/geometry.hpp"
#include "gaugereader/json_io.hpp"
#include "gaugereader/keypoints.hpp"
#include "gaugereader/report.hpp"
#include "gaugereader/scale_model.hpp"

namespace gauge {

struct PipelineConfig {
  struct Ransac {
    int iterations = 200;
    double threshold_fraction = 0.02;
    std::uint64_t seed = 0;
    /// false replaces RANSAC with plain least squares (ablation).
    bool enabled = true;
  } ransac;
  struct MeanShift {
    double bandwidth_fraction = 0.05;
  } meanshift;
  std::optional<std::string> unit_lexicon_path;
  UnitLexicon lexicon;
  double failure_error_threshold_percent = 10.0;

  /// Mean-shift bandwidth for a heatmap of the given size.
  double meanshift_bandwidth(int width, int height) const {
    return default_bandwidth(width, height, meanshift.bandwidth_fraction);
  }

  /// Keys: ransac{iterations, threshold_fraction, seed, enabled},
  /// meanshift{bandwidth_fraction}, unit_lexicon_path,
  /// failure_error_threshold_percent. A relative lexicon path resolves
  /// against `base_dir`.
  static PipelineConfig from_json(const json_io::Json& doc, const std::filesystem::path& base_dir = {}) {
    using namespace json_io;
    PipelineConfig cfg;
    if (!doc.is_object()) throw Error(Errc::Schema, "config must be an object", "$");
    if (const Json* r = optional_field(doc, "ransac")) {
      if (const Json* v = optional_field(*r, "iterations")) {
        const long long it = as_integer(*v, "ransac.iterations");
        if (it < 1 || it > 1'000'000) throw Error(Errc::Schema, "iterations out of range", "ransac.iterations");
        cfg.ransac.iterations = static_cast<int>(it);
      }
      cfg.ransac.threshold_fraction = number_or(*r, "threshold_fraction", cfg.ransac.threshold_fraction, "ransac");
      if (!(cfg.ransac.threshold_fraction > 0.0))
        throw Error(Errc::Schema, "threshold_fraction must be positive", "ransac.threshold_fraction");
      if (const Json* v = optional_field(*r, "seed")) {
        const long long s = as_integer(*v, "ransac.seed");
        if (s < 0) throw Error(Errc::Schema, "seed must be non-negative", "ransac.seed");
        cfg.ransac.seed = static_cast<std::uint64_t>(s);
      }
      if (const Json* v = optional_field(*r, "enabled")) {
        if (!v->is_boolean()) throw Error(Errc::Schema, "expected a boolean", "ransac.enabled");
        cfg.ransac.enabled = v->get<bool>();
      }
    }
    if (const Json* m = optional_field(doc, "meanshift")) {
      cfg.meanshift.bandwidth_fraction = number_or(*m, "bandwidth_fraction", 0.05, "meanshift");
      if (!(cfg.meanshift.bandwidth_fraction > 0.0))
        throw Error(Errc::Schema, "bandwidth_fraction must be positive", "meanshift.bandwidth_fraction");
    }
    if (const Json* p = optional_field(doc, "unit_lexicon_path")) {
      std::filesystem::path path = as_string(*p, "unit_lexicon_path");
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      cfg.unit_lexicon_path = path.string();
      cfg.lexicon = UnitLexicon::load(path.string());
    }
    cfg.failure_error_threshold_percent =
        number_or(doc, "failure_error_threshold_percent", cfg.failure_error_threshold_percent, "");
    return cfg;
  }

  static PipelineConfig load(const std::string& path) {
    return from_json(json_io::parse_document(json_io::read_file(path)),
                     std::filesystem::path(path).parent_path());
  }
};

namespace detail {

inline bool finite_transform(const AffineTransform& t) {
  const auto& m = t.linear;
  return std::isfinite(m.m00) && std::isfinite(m.m01) && std::isfinite(m.m10) && std::isfinite(m.m11) &&
         is_finite(t.translation) && std::isfinite(m.det()) && m.det() != 0.0;
}

inline void fit_scale(GaugeReadingReport& report, ScaleSide side, const std::vector<ScaleMarker>& markers,
                      double wrap, const PipelineConfig& cfg, bool& any_populated, bool& any_model) {
  std::vector<AngleValue> pairs;
  pairs.reserve(markers.size());
  for (const auto& m : markers) pairs.push_back({relative_angle(m.angle, wrap), m.value});

  std::vector<bool> inlier(markers.size(), false);
  if (markers.size() >= 2) {
    any_populated = true;
    try {
      LinearScaleModel model =
          cfg.ransac.enabled
              ? ransac_fit_linear(pairs, inlier_threshold(pairs, cfg.ransac.threshold_fraction),
                                  cfg.ransac.iterations, cfg.ransac.seed)
              : fit_least_squares_linear(pairs);
      model.wrap_angle = wrap;
      for (auto i : model.inliers) inlier[i] = true;
      if (model.inliers.size() >= 2 && std::isfinite(model.slope) && std::isfinite(model.intercept)) {
        report.scale_fits.push_back({side, model.slope, model.intercept, model.threshold, markers.size(),
                                     model.inliers.size()});
        any_model = true;
      }
    } catch (const Error&) {
      // No usable model for this scale; reported through the Ocr status.
    }
  }
  for (std::size_t i = 0; i < markers.size(); ++i)
    report.markers_used.push_back(
        {side, markers[i].angle, pairs[i].angle, markers[i].value, markers[i].radius, inlier[i],
         markers[i].source_text});
}

}  // namespace detail

inline GaugeReadingReport read_gauge(const GaugeFixture& f, const PipelineConfig& cfg = {}) {
  GaugeReadingReport report;
  report.unit = extract_unit(f.ocr_items, cfg.lexicon);

  // Ellipse through all notch keypoints.
  if (f.keypoints.size() < 5) {
    report.mark_failed(Stage::Ellipse, FailureReason::InsufficientNotches);
    return report;
  }
  std::vector<Point2> notch_points;
  notch_points.reserve(f.keypoints.size());
  for (const auto& k : f.keypoints) notch_points.push_back(k.position);

  Ellipse ellipse;
  try {
    ellipse = fit_ellipse_direct(notch_points);
  } catch (const Error&) {
    report.mark_failed(Stage::Ellipse, FailureReason::DegenerateEllipse);
    return report;
  }
  const AffineTransform to_circle = circularize(ellipse);
  if (!detail::finite_transform(to_circle) || !detail::finite_transform(to_circle.inverse())) {
    report.mark_failed(Stage::Ellipse, FailureReason::DegenerateEllipse);
    return report;
  }
  report.fitted_ellipse = ellipse;
  report.mark_ok(Stage::Ellipse);

  // Orientation from the start/end notches.
  double rms = 0.0;
  std::vector<double> all_angles, intermediate_angles;
  std::optional<double> start_angle, end_angle;
  for (const auto& k : f.keypoints) {
    const Point2 q = apply_affine(to_circle, k.position);
    rms += (norm(q) - 1.0) * (norm(q) - 1.0);
    if (!is_finite(q) || (q.x == 0.0 && q.y == 0.0)) continue;
    const double a = parametric_angle(q);
    all_angles.push_back(a);
    if (k.cls == KeypointClass::Start) start_angle = a;
    else if (k.cls == KeypointClass::End) end_angle = a;
    else intermediate_angles.push_back(a);
  }
  report.diagnostics.ellipse_rms_residual = std::sqrt(rms / static_cast<double>(f.keypoints.size()));

  double wrap = 0.0;
  if (start_angle && end_angle) {
    try {
      wrap = wrap_around_angle(*start_angle, *end_angle, intermediate_angles);
    } catch (const Error&) {
      wrap = shorter_arc_midpoint(*start_angle, *end_angle);
      report.mark_failed(Stage::Notches, FailureReason::AmbiguousOrientation);
    }
  } else {
    wrap = largest_gap_midpoint(all_angles);
    report.mark_failed(Stage::Notches, FailureReason::AmbiguousOrientation);
  }
  report.wrap_angle = wrap;
  report.orientation_correction = orientation_correction({std::cos(wrap), std::sin(wrap)});

  // Needle line and its intersection with the scale circle.
  if (f.needle_points.size() < 2) {
    report.mark_failed(Stage::Needle, FailureReason::InsufficientNeedlePoints);
    return report;
  }
  std::vector<Point2> needle;
  needle.reserve(f.needle_points.size());
  for (const auto& p : f.needle_points) needle.push_back(apply_affine(to_circle, p));

  LineFit needle_fit;
  try {
    needle_fit = odr_fit_line(needle);
  } catch (const Error&) {
    report.mark_failed(Stage::Needle, FailureReason::InsufficientNeedlePoints);
    return report;
  }
  report.diagnostics.needle_eigen_ratio = needle_fit.eigen_ratio;
  report.needle_line = transform_line(to_circle.inverse(), needle_fit.line);
  if (needle_fit.isotropic()) {
    report.mark_failed(Stage::Needle, FailureReason::IsotropicNeedle);
    return report;
  }

  std::vector<Point2> candidates;
  try {
    candidates = line_circle_intersections(needle_fit.line);
  } catch (const Error&) {
    report.mark_failed(Stage::Needle, FailureReason::NoIntersection);
    return report;
  }
  double s_min = std::numeric_limits<double>::infinity(), s_max = -s_min;
  for (const auto& p : needle) {
    const double s = needle_fit.line.param_of(p);
    s_min = std::min(s_min, s);
    s_max = std::max(s_max, s);
  }
  const Point2 tail = needle_fit.line.at(s_min), tip = needle_fit.line.at(s_max);
  if (candidates.size() == 2) {
    int on_segment = 0;
    for (const auto& c : candidates) {
      const double s = needle_fit.line.param_of(c);
      on_segment += s >= s_min - 1e-9 && s <= s_max + 1e-9;
    }
    report.diagnostics.needle_pick_ambiguous = on_segment != 1;
  }
  const Point2 hit = pick_needle_intersection(candidates, tail, tip);
  const double needle_angle = parametric_angle(hit);
  report.needle_angle = needle_angle;
  report.needle_relative_angle = relative_angle(needle_angle, wrap);
  report.mark_ok(Stage::Needle);

  // Numeric markers projected onto the circle, one model per populated scale.
  std::vector<ScaleMarker> markers;
  for (const auto& item : f.ocr_items) {
    const auto value = parse_numeric_token(item.text);
    if (!value || !std::isfinite(*value)) continue;
    const Point2 q = apply_affine(to_circle, item.box.center());
    if (!is_finite(q) || (q.x == 0.0 && q.y == 0.0)) continue;
    const auto proj = radial_project_to_circle(q);
    markers.push_back({parametric_angle(proj.on_circle), *value, proj.radius, item.text});
  }
  const auto [outer, inner] = split_inner_outer(markers);
  bool any_populated = false, any_model = false;
  detail::fit_scale(report, ScaleSide::Outer, outer, wrap, cfg, any_populated, any_model);
  detail::fit_scale(report, ScaleSide::Inner, inner, wrap, cfg, any_populated, any_model);
  if (!any_model) {
    report.mark_failed(Stage::Ocr, any_populated ? FailureReason::NoConsensus : FailureReason::InsufficientMarkers);
    return report;
  }
  report.mark_ok(Stage::Ocr);

  for (const auto& fit : report.scale_fits)
    report.readings.push_back({fit.scale, fit.slope * *report.needle_relative_angle + fit.intercept});
  report.mark_ok(Stage::Reading);
  return report;
}

/// Reading error as a percentage of the full scale range.
inline double compute_relative_error(double predicted, double truth, double range_min, double range_max) {
  if (!(range_max > range_min)) throw Error(Errc::InvalidRange, "range_max must exceed range_min");
  return 100.0 * std::abs(predicted - truth) / (range_max - range_min);
}

// ---------------------------------------------------------------------------
// Batch evaluation

struct BatchItem {
  std::string name;
  std::string category;
  GaugeFixture fixture;
};

struct FixtureOutcome {
  std::string name;
  std::string category;
  std::optional<double> reading;
  double truth = 0.0;
  std::optional<double> relative_error;
  std::optional<FailureReason> failure;
  bool ocr_success = false;
  bool charged_notches = false;
  bool charged_ellipse = false;
  bool charged_needle = false;
  bool charged_ocr = false;
};

struct CategorySummary {
  std::size_t count = 0;
  std::size_t readings = 0;
  std::size_t ocr_success = 0;
  double full_re_sum = 0.0;
  double ocr_success_re_sum = 0.0;
  std::size_t notches_failures = 0;
  std::size_t ellipse_failures = 0;
  std::size_t needle_failures = 0;
  std::size_t ocr_failures = 0;

  std::optional<double> full_re_mean() const {
    return readings ? std::optional(full_re_sum / static_cast<double>(readings)) : std::nullopt;
  }
  std::optional<double> ocr_success_re_mean() const {
    return ocr_success ? std::optional(ocr_success_re_sum / static_cast<double>(ocr_success)) : std::nullopt;
  }
  double rate(std::size_t n) const { return count ? static_cast<double>(n) / static_cast<double>(count) : 0.0; }
  double reading_failure_share() const { return rate(count - readings); }

  void add(const FixtureOutcome& o) {
    ++count;
    if (o.relative_error) {
      ++readings;
      full_re_sum += *o.relative_error;
      if (o.ocr_success) {
        ++ocr_success;
        ocr_success_re_sum += *o.relative_error;
      }
    }
    notches_failures += o.charged_notches;
    ellipse_failures += o.charged_ellipse;
    needle_failures += o.charged_needle;
    ocr_failures += o.charged_ocr;
  }
};

struct EvalSummary {
  CategorySummary overall;
  std::map<std::string, CategorySummary> categories;
  std::vector<FixtureOutcome> fixtures;
};

/// Diagnostic thresholds that mark a stage as suspect.
inline constexpr double kEllipseResidualFlag = 0.02;
inline constexpr double kNeedleEigenRatioFlag = 0.1;

/// Scores one report against its ground truth. A stage is charged when it
/// blocked the reading, or when its diagnostic fired and the reading is off by
/// more than the configured error threshold.
inline FixtureOutcome score_report(const GaugeReadingReport& report, const GroundTruth& gt, const PipelineConfig& cfg) {
  FixtureOutcome o;
  o.truth = gt.reading;
  o.failure = report.blocking_failure();
  if (gt.scale) {
    o.reading = report.reading(*gt.scale);
  } else if (auto best = report.best_reading()) {
    o.reading = best->value;
  }
  if (o.reading) o.relative_error = compute_relative_error(*o.reading, gt.reading, gt.range_min, gt.range_max);

  const bool distorted = o.relative_error && *o.relative_error > cfg.failure_error_threshold_percent;
  const auto& d = report.diagnostics;
  o.charged_notches = report.failed(Stage::Notches) && distorted;
  o.charged_ellipse = report.failed(Stage::Ellipse) ||
                      (distorted && d.ellipse_rms_residual && *d.ellipse_rms_residual > kEllipseResidualFlag);
  o.charged_needle = report.failed(Stage::Needle) ||
                     (distorted && (d.needle_pick_ambiguous ||
                                    (d.needle_eigen_ratio && *d.needle_eigen_ratio > kNeedleEigenRatioFlag)));

  bool ocr_flag = false;
  const ScaleFitRecord* fit = nullptr;
  if (gt.scale) fit = report.fit(*gt.scale);
  else if (auto best = report.best_reading()) fit = report.fit(best->scale);
  if (fit) ocr_flag = fit->inlier_count < fit->marker_count;
  const bool missing_scale = !o.reading && report.status(Stage::Reading) != nullptr;
  o.charged_ocr = report.failed(Stage::Ocr) || missing_scale || (distorted && ocr_flag);
  o.ocr_success = o.relative_error.has_value() && !o.charged_ocr;
  return o;
}

/// Runs every fixture and aggregates Table-style statistics. An empty batch
/// yields a summary with count 0.
inline EvalSummary evaluate_batch(const std::vector<BatchItem>& items, const PipelineConfig& cfg = {}) {
  for (const auto& item : items)
    if (!item.fixture.ground_truth) throw Error(Errc::MissingGroundTruth, "fixture has no ground truth", item.name);

  EvalSummary summary;
  summary.fixtures.reserve(items.size());
  for (const auto& item : items) {
    FixtureOutcome o = score_report(read_gauge(item.fixture, cfg), *item.fixture.ground_truth, cfg);
    o.name = item.name;
    o.category = item.category;
    summary.overall.add(o);
    summary.categories[item.category].add(o);
    summary.fixtures.push_back(std::move(o));
  }
  return summary;
}

inline json_io::Json category_to_json(const CategorySummary& c) {
  using json_io::Json;
  auto opt = [](std::optional<double> v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"count", c.count},
              {"readings_computed", c.readings},
              {"reading_failure_share", c.reading_failure_share()},
              {"full_re", Json{{"count", c.readings}, {"mean", opt(c.full_re_mean())}}},
              {"ocr_success_re", Json{{"count", c.ocr_success}, {"mean", opt(c.ocr_success_re_mean())}}},
              {"failure_rates", Json{{"notches", c.rate(c.notches_failures)},
                                     {"ellipse", c.rate(c.ellipse_failures)},
                                     {"needle", c.rate(c.needle_failures)},
                                     {"ocr", c.rate(c.ocr_failures)}}}};
}

inline json_io::Json summary_to_json(const EvalSummary& s) {
  using json_io::Json;
  Json doc = category_to_json(s.overall);
  Json cats = Json::object();
  for (const auto& [name, c] : s.categories) cats[name] = category_to_json(c);
  doc["categories"] = std::move(cats);
  Json fixtures = Json::array();
  for (const auto& o : s.fixtures)
    fixtures.push_back(Json{{"name", o.name},
                            {"category", o.category},
                            {"reading", o.reading ? Json(*o.reading) : Json(nullptr)},
                            {"truth", o.truth},
                            {"relative_error", o.relative_error ? Json(*o.relative_error) : Json(nullptr)},
                            {"failure", o.failure ? Json(to_string(*o.failure)) : Json(nullptr)}});
  doc["fixtures"] = std::move(fixtures);
  return doc;
}

inline std::string serialize_summary(const EvalSummary& s) { return json_io::dump(summary_to_json(s), 9); }

/// Fixed-width text table: one row per category, then the overall row.
inline std::string format_summary_table(const EvalSummary& s) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %6s %10s %12s %8s %8s %8s %8s %8s\n", "category", "n", "Full RE",
                "OCR-ok RE", "RF", "notches", "ellipse", "needle", "ocr");
  out += line;
  auto pct = [](std::optional<double> v) {
    char b[32];
    if (v) std::snprintf(b, sizeof b, "%.3f%%", *v);
    else std::snprintf(b, sizeof b, "-");
    return std::string(b);
  };
  auto row = [&](const std::string& name, const CategorySummary& c) {
    std::snprintf(line, sizeof line, "%-16s %6zu %10s %12s %7.1f%% %7.1f%% %7.1f%% %7.1f%% %7.1f%%\n", name.c_str(),
                  c.count, pct(c.full_re_mean()).c_str(), pct(c.ocr_success_re_mean()).c_str(),
                  100.0 * c.reading_failure_share(), 100.0 * c.rate(c.notches_failures),
                  100.0 * c.rate(c.ellipse_failures), 100.0 * c.rate(c.needle_failures),
                  100.0 * c.rate(c.ocr_failures));
    out += line;
  };
  for (const auto& [name, c] : s.categories)
    if (s.categories.size() > 1 || !name.empty()) row(name.empty() ? "(none)" : name, c);
  row("all", s.overall);
  return out;
}

}  // namespace gauge
