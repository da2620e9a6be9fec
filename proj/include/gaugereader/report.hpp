#pragma once

// Result of reading one gauge: per-stage statuses, intermediate geometry and
// the final reading(s), plus its deterministic JSON form.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "gaugereader/fixtures.hpp"
#include "gaugereader/geometry.hpp"
#include "gaugereader/json_io.hpp"

namespace gauge {

enum class Stage { Notches, Ellipse, Needle, Ocr, Reading };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::Notches: return "notches";
    case Stage::Ellipse: return "ellipse";
    case Stage::Needle: return "needle";
    case Stage::Ocr: return "ocr";
    case Stage::Reading: return "reading";
  }
  return "reading";
}

enum class FailureReason {
  InsufficientNotches,
  DegenerateEllipse,
  InsufficientNeedlePoints,
  IsotropicNeedle,
  NoIntersection,
  InsufficientMarkers,
  NoConsensus,
  AmbiguousOrientation,
};

inline const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::InsufficientNotches: return "insufficient_notches";
    case FailureReason::DegenerateEllipse: return "degenerate_ellipse";
    case FailureReason::InsufficientNeedlePoints: return "insufficient_needle_points";
    case FailureReason::IsotropicNeedle: return "isotropic_needle";
    case FailureReason::NoIntersection: return "no_intersection";
    case FailureReason::InsufficientMarkers: return "insufficient_markers";
    case FailureReason::NoConsensus: return "no_consensus";
    case FailureReason::AmbiguousOrientation: return "ambiguous_orientation";
  }
  return "unknown";
}

struct StageStatus {
  Stage stage = Stage::Reading;
  std::optional<FailureReason> failure;

  bool ok() const { return !failure.has_value(); }
};

/// A numeric OCR marker as placed on the circularized scale.
struct MarkerRecord {
  ScaleSide scale = ScaleSide::Outer;
  double angle = 0.0;
  double relative_angle = 0.0;
  double value = 0.0;
  double radius = 1.0;
  bool inlier = false;
  std::string text;
};

struct ScaleFitRecord {
  ScaleSide scale = ScaleSide::Outer;
  double slope = 0.0;
  double intercept = 0.0;
  double threshold = 0.0;
  std::size_t marker_count = 0;
  std::size_t inlier_count = 0;
};

struct ScaleReading {
  ScaleSide scale = ScaleSide::Outer;
  double value = 0.0;
};

/// Non-blocking signals used to charge stages that distorted a reading.
struct ReportDiagnostics {
  std::optional<double> ellipse_rms_residual;  // RMS of (|T p| - 1) over notches
  std::optional<double> needle_eigen_ratio;
  bool needle_pick_ambiguous = false;  // both or neither candidate on the needle segment
};

struct GaugeReadingReport {
  /// Stages in execution order. A stage that never ran has no entry; the
  /// Notches entry only appears when the orientation fallback was used.
  std::vector<StageStatus> stage_statuses;
  std::optional<Ellipse> fitted_ellipse;
  std::optional<Line> needle_line;  // image frame
  std::optional<double> wrap_angle;
  std::optional<double> needle_angle;
  std::optional<double> needle_relative_angle;
  std::optional<AffineTransform> orientation_correction;
  std::vector<MarkerRecord> markers_used;
  std::vector<ScaleFitRecord> scale_fits;
  std::vector<ScaleReading> readings;
  std::optional<std::string> unit;
  ReportDiagnostics diagnostics;

  void mark_ok(Stage s) { stage_statuses.push_back({s, std::nullopt}); }
  void mark_failed(Stage s, FailureReason r) { stage_statuses.push_back({s, r}); }

  const StageStatus* status(Stage s) const {
    auto it = std::find_if(stage_statuses.begin(), stage_statuses.end(),
                           [&](const StageStatus& st) { return st.stage == s; });
    return it == stage_statuses.end() ? nullptr : &*it;
  }
  bool failed(Stage s) const {
    const auto* st = status(s);
    return st && !st->ok();
  }

  /// The failure that stopped the pipeline, if any. Orientation ambiguity is
  /// advisory and never blocks.
  std::optional<FailureReason> blocking_failure() const {
    for (const auto& st : stage_statuses)
      if (!st.ok() && st.stage != Stage::Notches) return st.failure;
    return std::nullopt;
  }

  std::optional<double> reading(ScaleSide side) const {
    for (const auto& r : readings)
      if (r.scale == side) return r.value;
    return std::nullopt;
  }

  const ScaleFitRecord* fit(ScaleSide side) const {
    for (const auto& f : scale_fits)
      if (f.scale == side) return &f;
    return nullptr;
  }

  /// Reading of the scale with the most inlier markers; ties prefer outer.
  std::optional<ScaleReading> best_reading() const {
    std::optional<ScaleReading> best;
    std::size_t best_support = 0;
    for (const auto& r : readings) {
      const auto* f = fit(r.scale);
      const std::size_t support = f ? f->inlier_count : 0;
      if (!best || support > best_support) {
        best = r;
        best_support = support;
      }
    }
    return best;
  }
};

namespace detail {

inline json_io::Json point_json(Point2 p) { return json_io::Json::array({p.x, p.y}); }

template <typename T, typename F>
json_io::Json optional_json(const std::optional<T>& v, F&& convert) {
  return v ? convert(*v) : json_io::Json(nullptr);
}

}  // namespace detail

inline json_io::Json report_to_json(const GaugeReadingReport& r) {
  using json_io::Json;
  Json doc = Json::object();
  doc["schema"] = kFixtureSchemaVersion;

  Json stages = Json::object();
  for (const auto& st : r.stage_statuses) {
    Json s = Json::object();
    s["status"] = st.ok() ? "Ok" : "Failed";
    if (st.failure) s["reason"] = to_string(*st.failure);
    stages[to_string(st.stage)] = std::move(s);
  }
  doc["stage_statuses"] = std::move(stages);

  doc["fitted_ellipse"] = detail::optional_json(r.fitted_ellipse, [](const Ellipse& e) {
    return Json{{"center", detail::point_json(e.center)}, {"a", e.a}, {"b", e.b}, {"theta", e.theta}};
  });
  doc["needle_line"] = detail::optional_json(r.needle_line, [](const Line& l) {
    return Json{{"point", detail::point_json(l.point)}, {"direction", detail::point_json(l.direction)}};
  });
  auto number = [](double d) { return Json(d); };
  doc["wrap_angle"] = detail::optional_json(r.wrap_angle, number);
  doc["needle_angle"] = detail::optional_json(r.needle_angle, number);
  doc["needle_relative_angle"] = detail::optional_json(r.needle_relative_angle, number);
  doc["orientation_correction"] = detail::optional_json(r.orientation_correction, [](const AffineTransform& t) {
    return Json{{"linear", Json::array({Json::array({t.linear.m00, t.linear.m01}),
                                        Json::array({t.linear.m10, t.linear.m11})})},
                {"translation", detail::point_json(t.translation)}};
  });

  Json markers = Json::array();
  for (const auto& m : r.markers_used)
    markers.push_back(Json{{"scale", to_string(m.scale)},
                           {"angle", m.angle},
                           {"relative_angle", m.relative_angle},
                           {"value", m.value},
                           {"radius", m.radius},
                           {"inlier", m.inlier},
                           {"text", m.text}});
  doc["markers_used"] = std::move(markers);

  Json fits = Json::array();
  for (const auto& f : r.scale_fits)
    fits.push_back(Json{{"scale", to_string(f.scale)},
                        {"slope", f.slope},
                        {"intercept", f.intercept},
                        {"threshold", f.threshold},
                        {"markers", f.marker_count},
                        {"inliers", f.inlier_count}});
  doc["scale_fits"] = std::move(fits);

  Json readings = Json::array();
  for (const auto& rd : r.readings) readings.push_back(Json{{"scale", to_string(rd.scale)}, {"value", rd.value}});
  doc["readings"] = std::move(readings);
  doc["unit"] = r.unit ? Json(*r.unit) : Json(nullptr);

  doc["diagnostics"] = Json{{"ellipse_rms_residual", detail::optional_json(r.diagnostics.ellipse_rms_residual, number)},
                            {"needle_eigen_ratio", detail::optional_json(r.diagnostics.needle_eigen_ratio, number)},
                            {"needle_pick_ambiguous", r.diagnostics.needle_pick_ambiguous}};
  return doc;
}

/// Deterministic JSON: fixed key order, reals with 9 significant digits.
inline std::string serialize_report(const GaugeReadingReport& r) { return json_io::dump(report_to_json(r), 9); }

}  // namespace gauge
