#pragma once

// Detection data model for one cropped gauge and its JSON form.
//
//   { "schema": 1, "crop_size": [448, 448],
//     "keypoints": [{"x": .., "y": .., "class": "start|intermediate|end"}],
//     "needle_points": [[x, y], ...],
//     "ocr": [{"box": [x, y, w, h], "text": "..", "confidence": 0.97}],
//     "ground_truth": {"reading": .., "range_min": .., "range_max": .., "unit": "..",
//                      "scale": "inner|outer"} }
//
// `ocr`, `crop_size` and `ground_truth` are optional; unknown fields are ignored.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gaugereader/core.hpp"
#include "gaugereader/json_io.hpp"

namespace gauge {

inline constexpr int kFixtureSchemaVersion = 1;

enum class KeypointClass { Start, Intermediate, End };

inline const char* to_string(KeypointClass c) {
  switch (c) {
    case KeypointClass::Start: return "start";
    case KeypointClass::Intermediate: return "intermediate";
    case KeypointClass::End: return "end";
  }
  return "intermediate";
}

struct Keypoint {
  Point2 position;
  KeypointClass cls = KeypointClass::Intermediate;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// Axis-aligned text box; `min_corner` is the top-left corner.
struct OcrBox {
  Point2 min_corner;
  double width = 1.0;
  double height = 1.0;

  Point2 center() const { return {min_corner.x + width / 2.0, min_corner.y + height / 2.0}; }

  friend bool operator==(const OcrBox&, const OcrBox&) = default;
};

struct OcrItem {
  OcrBox box;
  std::string text;
  double confidence = 1.0;

  friend bool operator==(const OcrItem&, const OcrItem&) = default;
};

/// Which of a dual-scale gauge's scales a marker or reading belongs to.
enum class ScaleSide { Outer, Inner };

inline const char* to_string(ScaleSide s) { return s == ScaleSide::Outer ? "outer" : "inner"; }

struct GroundTruth {
  double reading = 0.0;
  double range_min = 0.0;
  double range_max = 1.0;
  std::string unit;
  /// Scale the reading refers to; absent means "the best-supported scale".
  std::optional<ScaleSide> scale;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct CropSize {
  int width = 448;
  int height = 448;

  friend bool operator==(const CropSize&, const CropSize&) = default;
};

struct GaugeFixture {
  CropSize crop_size;
  std::vector<Keypoint> keypoints;
  std::vector<Point2> needle_points;
  std::vector<OcrItem> ocr_items;
  std::optional<GroundTruth> ground_truth;

  friend bool operator==(const GaugeFixture&, const GaugeFixture&) = default;
};

/// Checks every fixture invariant; throws Errc::Schema naming the offending path.
inline void validate_fixture(const GaugeFixture& f) {
  if (f.crop_size.width <= 0 || f.crop_size.height <= 0)
    throw Error(Errc::Schema, "crop size must be positive", "crop_size");
  auto check_point = [&](Point2 p, const std::string& path) {
    if (!is_finite(p)) throw Error(Errc::Schema, "coordinate is not finite", path);
    if (p.x < 0.0 || p.x >= f.crop_size.width || p.y < 0.0 || p.y >= f.crop_size.height)
      throw Error(Errc::Schema, "coordinate outside the crop", path);
  };
  int starts = 0, ends = 0;
  for (std::size_t i = 0; i < f.keypoints.size(); ++i) {
    check_point(f.keypoints[i].position, json_io::index("keypoints", i));
    starts += f.keypoints[i].cls == KeypointClass::Start;
    ends += f.keypoints[i].cls == KeypointClass::End;
  }
  if (starts > 1) throw Error(Errc::Schema, "more than one start keypoint", "keypoints");
  if (ends > 1) throw Error(Errc::Schema, "more than one end keypoint", "keypoints");
  for (std::size_t i = 0; i < f.needle_points.size(); ++i)
    check_point(f.needle_points[i], json_io::index("needle_points", i));
  for (std::size_t i = 0; i < f.ocr_items.size(); ++i) {
    const auto& item = f.ocr_items[i];
    const std::string path = json_io::index("ocr", i);
    check_point(item.box.min_corner, path + ".box");
    if (!(item.box.width > 0.0) || !(item.box.height > 0.0) || !std::isfinite(item.box.width) ||
        !std::isfinite(item.box.height))
      throw Error(Errc::Schema, "box width and height must be positive", path + ".box");
    if (!(item.confidence >= 0.0 && item.confidence <= 1.0))
      throw Error(Errc::Schema, "confidence outside [0, 1]", path + ".confidence");
  }
  if (f.ground_truth) {
    const auto& gt = *f.ground_truth;
    if (!std::isfinite(gt.reading)) throw Error(Errc::Schema, "reading is not finite", "ground_truth.reading");
    if (!(gt.range_max > gt.range_min)) throw Error(Errc::Schema, "range_max must exceed range_min", "ground_truth");
  }
}

namespace detail {

inline Point2 parse_xy_pair(const json_io::Json& v, const std::string& path) {
  using namespace json_io;
  const Json& arr = as_array(v, path, 2);
  return {as_number(arr[0], index(path, 0)), as_number(arr[1], index(path, 1))};
}

inline KeypointClass parse_keypoint_class(const json_io::Json& v, const std::string& path) {
  const std::string s = json_io::as_string(v, path);
  if (s == "start") return KeypointClass::Start;
  if (s == "intermediate") return KeypointClass::Intermediate;
  if (s == "end") return KeypointClass::End;
  throw Error(Errc::Schema, "unknown keypoint class '" + s + "'", path);
}

}  // namespace detail

inline ScaleSide parse_scale_side(const json_io::Json& v, const std::string& path) {
  const std::string s = json_io::as_string(v, path);
  if (s == "outer") return ScaleSide::Outer;
  if (s == "inner") return ScaleSide::Inner;
  throw Error(Errc::Schema, "expected \"inner\" or \"outer\"", path);
}

inline GaugeFixture fixture_from_json(const json_io::Json& doc) {
  using namespace json_io;
  if (!doc.is_object()) throw Error(Errc::Schema, "document must be an object", "$");
  const long long schema = as_integer(require(doc, "schema", ""), "schema");
  if (schema != kFixtureSchemaVersion)
    throw Error(Errc::Schema, "unsupported schema version " + std::to_string(schema), "schema");

  GaugeFixture f;
  if (const Json* cs = optional_field(doc, "crop_size")) {
    const Json& arr = as_array(*cs, "crop_size", 2);
    const long long w = as_integer(arr[0], "crop_size[0]");
    const long long h = as_integer(arr[1], "crop_size[1]");
    if (w <= 0 || h <= 0 || w > 1'000'000 || h > 1'000'000)
      throw Error(Errc::Schema, "crop size must be positive", "crop_size");
    f.crop_size = {static_cast<int>(w), static_cast<int>(h)};
  }

  const Json& kps = as_array(require(doc, "keypoints", ""), "keypoints");
  for (std::size_t i = 0; i < kps.size(); ++i) {
    const std::string path = index("keypoints", i);
    const Json& k = kps[i];
    f.keypoints.push_back({{as_number(require(k, "x", path), join(path, "x")),
                            as_number(require(k, "y", path), join(path, "y"))},
                           detail::parse_keypoint_class(require(k, "class", path), join(path, "class"))});
  }

  const Json& needle = as_array(require(doc, "needle_points", ""), "needle_points");
  for (std::size_t i = 0; i < needle.size(); ++i)
    f.needle_points.push_back(detail::parse_xy_pair(needle[i], index("needle_points", i)));

  if (const Json* ocr = optional_field(doc, "ocr")) {
    as_array(*ocr, "ocr");
    for (std::size_t i = 0; i < ocr->size(); ++i) {
      const std::string path = index("ocr", i);
      const Json& item = (*ocr)[i];
      const Json& box = as_array(require(item, "box", path), join(path, "box"), 4);
      const std::string bp = join(path, "box");
      OcrItem o;
      o.box = {{as_number(box[0], index(bp, 0)), as_number(box[1], index(bp, 1))},
               as_number(box[2], index(bp, 2)),
               as_number(box[3], index(bp, 3))};
      o.text = as_string(require(item, "text", path), join(path, "text"));
      o.confidence = number_or(item, "confidence", 1.0, path);
      f.ocr_items.push_back(std::move(o));
    }
  }

  if (const Json* gt = optional_field(doc, "ground_truth")) {
    const std::string path = "ground_truth";
    GroundTruth g;
    g.reading = as_number(require(*gt, "reading", path), join(path, "reading"));
    g.range_min = as_number(require(*gt, "range_min", path), join(path, "range_min"));
    g.range_max = as_number(require(*gt, "range_max", path), join(path, "range_max"));
    if (const Json* u = optional_field(*gt, "unit")) g.unit = as_string(*u, join(path, "unit"));
    if (const Json* s = optional_field(*gt, "scale")) g.scale = parse_scale_side(*s, join(path, "scale"));
    f.ground_truth = g;
  }

  validate_fixture(f);
  return f;
}

/// Parses and validates a fixture document.
inline GaugeFixture parse_fixture(std::string_view bytes) {
  return fixture_from_json(json_io::parse_document(bytes));
}

inline json_io::Json fixture_to_json(const GaugeFixture& f) {
  using json_io::Json;
  Json doc = Json::object();
  doc["schema"] = kFixtureSchemaVersion;
  doc["crop_size"] = Json::array({f.crop_size.width, f.crop_size.height});
  Json kps = Json::array();
  for (const auto& k : f.keypoints)
    kps.push_back(Json{{"x", k.position.x}, {"y", k.position.y}, {"class", to_string(k.cls)}});
  doc["keypoints"] = std::move(kps);
  Json needle = Json::array();
  for (const auto& p : f.needle_points) needle.push_back(Json::array({p.x, p.y}));
  doc["needle_points"] = std::move(needle);
  Json ocr = Json::array();
  for (const auto& o : f.ocr_items)
    ocr.push_back(Json{{"box", Json::array({o.box.min_corner.x, o.box.min_corner.y, o.box.width, o.box.height})},
                       {"text", o.text},
                       {"confidence", o.confidence}});
  doc["ocr"] = std::move(ocr);
  if (f.ground_truth) {
    const auto& g = *f.ground_truth;
    Json gt{{"reading", g.reading}, {"range_min", g.range_min}, {"range_max", g.range_max}, {"unit", g.unit}};
    if (g.scale) gt["scale"] = to_string(*g.scale);
    doc["ground_truth"] = std::move(gt);
  }
  return doc;
}

/// Reals are written with 17 significant digits, so parsing restores them exactly.
inline std::string serialize_fixture(const GaugeFixture& f) {
  return json_io::dump(fixture_to_json(f), 17);
}

}  // namespace gauge
