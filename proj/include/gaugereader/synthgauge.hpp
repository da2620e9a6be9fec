#pragma once

// Parametric gauge scenes with known readings, and seeded perturbations
// (noise, OCR dropout and corruption, outlier text, affine and rotation).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "gaugereader/fixtures.hpp"
#include "gaugereader/geometry.hpp"
#include "gaugereader/json_io.hpp"
#include "gaugereader/random.hpp"
#include "gaugereader/scale_model.hpp"

namespace gauge::synth {

struct ScaleRange {
  double min = 0.0;
  double max = 10.0;
  std::string unit;
};

struct SecondScale {
  ScaleRange range;
  double radius_factor = 1.2;
};

/// Scale arc in parametric angles; direction +1 runs with increasing angle
/// (clockwise on screen), -1 against it.
struct ScaleArc {
  double start_angle = 0.75 * kPi;
  double end_angle = 0.25 * kPi;
  int direction = 1;

  double span() const { return normalize_angle(direction * (end_angle - start_angle)); }
};

struct SceneSpec {
  CropSize crop_size;
  Ellipse ellipse{{224.0, 224.0}, 120.0, 120.0, 0.0};
  ScaleArc scale_arc;
  ScaleRange range;
  int n_major_notches = 9;
  double needle_value = 5.0;
  double marker_radius_factor = 0.85;
  std::optional<SecondScale> second_scale;
  int needle_point_count = 60;
};

struct PerturbationSpec {
  double keypoint_noise_sigma = 0.0;
  double ocr_dropout_rate = 0.0;
  int n_outlier_ocr = 0;
  double digit_corruption_rate = 0.0;
  std::optional<AffineTransform> affine_distortion;
  double rotation = 0.0;
  std::uint64_t seed = 0;
};

struct GeneratedScene {
  GaugeFixture fixture;
  GroundTruth truth;
};

inline constexpr double kOcrBoxWidth = 20.0;
inline constexpr double kOcrBoxHeight = 10.0;

inline void validate_scene_spec(const SceneSpec& s) {
  auto fail = [](const std::string& what, const std::string& path) { throw Error(Errc::Spec, what, path); };
  if (s.crop_size.width <= 0 || s.crop_size.height <= 0) fail("crop size must be positive", "crop_size");
  const auto& e = s.ellipse;
  if (!(e.b > 0.0) || !(e.a >= e.b) || !std::isfinite(e.a) || !is_finite(e.center))
    fail("ellipse needs a >= b > 0", "ellipse");
  if (s.scale_arc.direction != 1 && s.scale_arc.direction != -1) fail("direction must be +1 or -1", "scale_arc.direction");
  const double span = s.scale_arc.span();
  if (span < kPi / 2.0 - 1e-12 || span > 0.95 * kTwoPi + 1e-12)
    fail("scale span must lie in [pi/2, 0.95 * 2pi]", "scale_arc");
  if (!(s.range.max > s.range.min)) fail("range max must exceed min", "range");
  if (s.n_major_notches < 5) fail("at least 5 major notches required", "n_major_notches");
  if (!(s.needle_value >= s.range.min && s.needle_value <= s.range.max)) fail("needle value outside range", "needle_value");
  if (!(s.marker_radius_factor > 0.0)) fail("radius factor must be positive", "marker_radius_factor");
  if (s.needle_point_count < 50) fail("at least 50 needle points required", "needle_point_count");
  if (s.second_scale) {
    const auto& sc = *s.second_scale;
    if (!(sc.range.max > sc.range.min)) fail("range max must exceed min", "second_scale.range");
    if (!(sc.radius_factor > 0.0) || (sc.radius_factor >= 1.0) == (s.marker_radius_factor >= 1.0))
      fail("second scale must sit on the other side of the notch ellipse", "second_scale.radius_factor");
  }
}

/// Shortest fixed-point text (up to 9 decimals) that reproduces `v`.
inline std::string format_marker_value(double v) {
  char buf[64];
  for (int decimals = 0; decimals <= 9; ++decimals) {
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    const auto back = parse_numeric_token(buf);
    if (back && std::abs(*back - v) <= 1e-9 * std::max(1.0, std::abs(v))) break;
  }
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos) s = "0";
  return s;
}

namespace detail {

inline Point2 scaled_point(const Ellipse& e, double t, double factor) {
  return point_on(Ellipse{e.center, e.a * factor, e.b * factor, e.theta}, t);
}

inline OcrItem box_at(Point2 center, std::string text, double confidence = 1.0) {
  return {{{center.x - kOcrBoxWidth / 2.0, center.y - kOcrBoxHeight / 2.0}, kOcrBoxWidth, kOcrBoxHeight},
          std::move(text),
          confidence};
}

inline void add_scale_markers(GaugeFixture& f, const SceneSpec& s, const ScaleRange& range, double factor) {
  const int n = s.n_major_notches;
  for (int k = 0; k < n; ++k) {
    const double u = static_cast<double>(k) / (n - 1);
    const double t = s.scale_arc.start_angle + s.scale_arc.direction * s.scale_arc.span() * u;
    const double value = range.min + u * (range.max - range.min);
    f.ocr_items.push_back(box_at(scaled_point(s.ellipse, t, factor), format_marker_value(value)));
  }
}

}  // namespace detail

/// Parametric angle of a value on the primary scale.
inline double angle_of_value(const SceneSpec& s, double value) {
  const double u = (value - s.range.min) / (s.range.max - s.range.min);
  return s.scale_arc.start_angle + s.scale_arc.direction * s.scale_arc.span() * u;
}

inline GeneratedScene generate_scene(const SceneSpec& s) {
  validate_scene_spec(s);
  GaugeFixture f;
  f.crop_size = s.crop_size;
  const int n = s.n_major_notches;
  const double span = s.scale_arc.span();

  for (int k = 0; k < n; ++k) {
    const double t = s.scale_arc.start_angle + s.scale_arc.direction * span * k / (n - 1);
    const KeypointClass cls = k == 0 ? KeypointClass::Start : (k == n - 1 ? KeypointClass::End : KeypointClass::Intermediate);
    f.keypoints.push_back({point_on(s.ellipse, t), cls});
  }

  const Point2 tip = point_on(s.ellipse, angle_of_value(s, s.needle_value));
  for (int k = 0; k < s.needle_point_count; ++k) {
    const double u = static_cast<double>(k) / (s.needle_point_count - 1);
    f.needle_points.push_back(s.ellipse.center + u * (tip - s.ellipse.center));
  }

  detail::add_scale_markers(f, s, s.range, s.marker_radius_factor);
  if (s.second_scale) detail::add_scale_markers(f, s, s.second_scale->range, s.second_scale->radius_factor);

  // Units sit halfway between the center and the gap of the scale.
  const double gap = s.scale_arc.start_angle - s.scale_arc.direction * (kTwoPi - span) / 2.0;
  if (!s.range.unit.empty())
    f.ocr_items.push_back(detail::box_at(detail::scaled_point(s.ellipse, gap, 0.5), s.range.unit));
  if (s.second_scale && !s.second_scale->range.unit.empty() && s.second_scale->range.unit != s.range.unit)
    f.ocr_items.push_back(detail::box_at(detail::scaled_point(s.ellipse, gap, 0.3), s.second_scale->range.unit, 0.8));

  GroundTruth gt;
  gt.reading = s.needle_value;
  gt.range_min = s.range.min;
  gt.range_max = s.range.max;
  gt.unit = s.range.unit;
  gt.scale = s.marker_radius_factor >= 1.0 ? ScaleSide::Outer : ScaleSide::Inner;
  f.ground_truth = gt;

  try {
    validate_fixture(f);
  } catch (const Error& e) {
    throw Error(Errc::Spec, std::string("scene does not fit the crop: ") + e.what());
  }
  return {std::move(f), gt};
}

inline void validate_perturbation(const PerturbationSpec& p) {
  auto unit_rate = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!(p.keypoint_noise_sigma >= 0.0) || !std::isfinite(p.keypoint_noise_sigma))
    throw Error(Errc::Spec, "noise sigma must be non-negative", "keypoint_noise_sigma");
  if (!unit_rate(p.ocr_dropout_rate)) throw Error(Errc::Spec, "rate outside [0, 1]", "ocr_dropout_rate");
  if (!unit_rate(p.digit_corruption_rate)) throw Error(Errc::Spec, "rate outside [0, 1]", "digit_corruption_rate");
  if (p.n_outlier_ocr < 0) throw Error(Errc::Spec, "outlier count must be non-negative", "n_outlier_ocr");
  if (!std::isfinite(p.rotation)) throw Error(Errc::Spec, "rotation must be finite", "rotation");
  if (p.affine_distortion) {
    const double d = p.affine_distortion->linear.det();
    if (!std::isfinite(d) || d == 0.0 || !is_finite(p.affine_distortion->translation))
      throw Error(Errc::Spec, "affine distortion must be invertible", "affine_distortion");
  }
}

namespace detail {

inline void map_coordinates(GaugeFixture& f, const AffineTransform& t) {
  for (auto& k : f.keypoints) k.position = apply_affine(t, k.position);
  for (auto& p : f.needle_points) p = apply_affine(t, p);
  for (auto& o : f.ocr_items) {
    const Point2 c = apply_affine(t, o.box.center());
    o.box.min_corner = {c.x - o.box.width / 2.0, c.y - o.box.height / 2.0};
  }
}

inline bool inside(const CropSize& crop, Point2 p) {
  return is_finite(p) && p.x >= 0.0 && p.y >= 0.0 && p.x < crop.width && p.y < crop.height;
}

}  // namespace detail

/// Applies, in order: affine distortion, rotation about the crop center,
/// keypoint noise, OCR dropout, digit corruption and outlier text injection.
/// Detections pushed outside the crop are discarded, as a crop would.
inline GaugeFixture perturb_scene(const GaugeFixture& fixture, const GroundTruth& gt, const PerturbationSpec& p) {
  validate_perturbation(p);
  GaugeFixture f = fixture;
  f.ground_truth = gt;
  Rng rng(p.seed);

  if (p.affine_distortion) detail::map_coordinates(f, *p.affine_distortion);
  if (p.rotation != 0.0) {
    const Point2 c{f.crop_size.width / 2.0, f.crop_size.height / 2.0};
    const Matrix2 r = Matrix2::rotation(p.rotation);
    detail::map_coordinates(f, AffineTransform{r, c - r * c});
  }
  if (p.keypoint_noise_sigma > 0.0)
    for (auto& k : f.keypoints) {
      k.position.x += p.keypoint_noise_sigma * rng.normal();
      k.position.y += p.keypoint_noise_sigma * rng.normal();
    }
  if (p.ocr_dropout_rate > 0.0) {
    std::vector<OcrItem> kept;
    for (auto& o : f.ocr_items)
      if (!rng.bernoulli(p.ocr_dropout_rate)) kept.push_back(std::move(o));
    f.ocr_items = std::move(kept);
  }
  if (p.digit_corruption_rate > 0.0)
    for (auto& o : f.ocr_items) {
      if (!parse_numeric_token(o.text) || !rng.bernoulli(p.digit_corruption_rate)) continue;
      std::vector<std::size_t> digits;
      for (std::size_t i = 0; i < o.text.size(); ++i)
        if (o.text[i] >= '0' && o.text[i] <= '9') digits.push_back(i);
      const std::size_t pos = digits[rng.index(digits.size())];
      const int old_digit = o.text[pos] - '0';
      const int new_digit = (old_digit + 1 + static_cast<int>(rng.index(9))) % 10;
      o.text[pos] = static_cast<char>('0' + new_digit);
    }
  for (int i = 0; i < p.n_outlier_ocr; ++i) {
    const int length = 3 + static_cast<int>(rng.index(4));
    std::string text(1, static_cast<char>('1' + rng.index(9)));
    for (int d = 1; d < length; ++d) text += static_cast<char>('0' + rng.index(10));
    const Point2 c{rng.uniform(kOcrBoxWidth / 2.0, f.crop_size.width - kOcrBoxWidth / 2.0),
                   rng.uniform(kOcrBoxHeight / 2.0, f.crop_size.height - kOcrBoxHeight / 2.0)};
    f.ocr_items.push_back(detail::box_at(c, std::move(text), rng.uniform(0.5, 1.0)));
  }

  std::erase_if(f.keypoints, [&](const Keypoint& k) { return !detail::inside(f.crop_size, k.position); });
  std::erase_if(f.needle_points, [&](Point2 q) { return !detail::inside(f.crop_size, q); });
  std::erase_if(f.ocr_items, [&](const OcrItem& o) { return !detail::inside(f.crop_size, o.box.min_corner); });
  return f;
}

// ---------------------------------------------------------------------------
// JSON forms

inline json_io::Json range_to_json(const ScaleRange& r) {
  return json_io::Json{{"min", r.min}, {"max", r.max}, {"unit", r.unit}};
}

inline ScaleRange range_from_json(const json_io::Json& j, const std::string& path) {
  using namespace json_io;
  ScaleRange r;
  r.min = as_number(require(j, "min", path), join(path, "min"));
  r.max = as_number(require(j, "max", path), join(path, "max"));
  if (const Json* u = optional_field(j, "unit")) r.unit = as_string(*u, join(path, "unit"));
  return r;
}

inline json_io::Json affine_to_json(const AffineTransform& t) {
  using json_io::Json;
  return Json{{"linear", Json::array({Json::array({t.linear.m00, t.linear.m01}), Json::array({t.linear.m10, t.linear.m11})})},
              {"translation", Json::array({t.translation.x, t.translation.y})}};
}

inline AffineTransform affine_from_json(const json_io::Json& j, const std::string& path) {
  using namespace json_io;
  const Json& lin = as_array(require(j, "linear", path), join(path, "linear"), 2);
  const Json& r0 = as_array(lin[0], join(path, "linear[0]"), 2);
  const Json& r1 = as_array(lin[1], join(path, "linear[1]"), 2);
  AffineTransform t;
  t.linear = {as_number(r0[0], path), as_number(r0[1], path), as_number(r1[0], path), as_number(r1[1], path)};
  if (const Json* tr = optional_field(j, "translation")) {
    const Json& a = as_array(*tr, join(path, "translation"), 2);
    t.translation = {as_number(a[0], path), as_number(a[1], path)};
  }
  return t;
}

inline json_io::Json scene_spec_to_json(const SceneSpec& s) {
  using json_io::Json;
  Json j{{"crop_size", Json::array({s.crop_size.width, s.crop_size.height})},
         {"ellipse", Json{{"center", Json::array({s.ellipse.center.x, s.ellipse.center.y})},
                          {"a", s.ellipse.a},
                          {"b", s.ellipse.b},
                          {"theta", s.ellipse.theta}}},
         {"scale_arc", Json{{"start_angle", s.scale_arc.start_angle},
                            {"end_angle", s.scale_arc.end_angle},
                            {"direction", s.scale_arc.direction}}},
         {"range", range_to_json(s.range)},
         {"n_major_notches", s.n_major_notches},
         {"needle_value", s.needle_value},
         {"marker_radius_factor", s.marker_radius_factor},
         {"needle_point_count", s.needle_point_count}};
  if (s.second_scale)
    j["second_scale"] = Json{{"range", range_to_json(s.second_scale->range)},
                             {"radius_factor", s.second_scale->radius_factor}};
  return j;
}

inline SceneSpec scene_spec_from_json(const json_io::Json& j, const std::string& path = "") {
  using namespace json_io;
  if (!j.is_object()) throw Error(Errc::Spec, "scene spec must be an object", path.empty() ? "$" : path);
  SceneSpec s;
  if (const Json* cs = optional_field(j, "crop_size")) {
    const Json& a = as_array(*cs, join(path, "crop_size"), 2);
    s.crop_size = {static_cast<int>(as_integer(a[0], join(path, "crop_size"))),
                   static_cast<int>(as_integer(a[1], join(path, "crop_size")))};
  }
  {
    const std::string ep = join(path, "ellipse");
    const Json& e = require(j, "ellipse", path);
    const Json& c = as_array(require(e, "center", ep), join(ep, "center"), 2);
    s.ellipse = {{as_number(c[0], ep), as_number(c[1], ep)},
                 as_number(require(e, "a", ep), join(ep, "a")),
                 as_number(require(e, "b", ep), join(ep, "b")),
                 number_or(e, "theta", 0.0, ep)};
  }
  {
    const std::string ap = join(path, "scale_arc");
    const Json& a = require(j, "scale_arc", path);
    s.scale_arc.start_angle = as_number(require(a, "start_angle", ap), join(ap, "start_angle"));
    s.scale_arc.end_angle = as_number(require(a, "end_angle", ap), join(ap, "end_angle"));
    if (const Json* d = optional_field(a, "direction")) s.scale_arc.direction = static_cast<int>(as_integer(*d, join(ap, "direction")));
  }
  s.range = range_from_json(require(j, "range", path), join(path, "range"));
  s.n_major_notches = static_cast<int>(as_integer(require(j, "n_major_notches", path), join(path, "n_major_notches")));
  s.needle_value = as_number(require(j, "needle_value", path), join(path, "needle_value"));
  s.marker_radius_factor = number_or(j, "marker_radius_factor", s.marker_radius_factor, path);
  if (const Json* n = optional_field(j, "needle_point_count"))
    s.needle_point_count = static_cast<int>(as_integer(*n, join(path, "needle_point_count")));
  if (const Json* sc = optional_field(j, "second_scale")) {
    const std::string sp = join(path, "second_scale");
    s.second_scale = SecondScale{range_from_json(require(*sc, "range", sp), join(sp, "range")),
                                 as_number(require(*sc, "radius_factor", sp), join(sp, "radius_factor"))};
  }
  validate_scene_spec(s);
  return s;
}

inline json_io::Json perturbation_to_json(const PerturbationSpec& p) {
  using json_io::Json;
  Json j{{"keypoint_noise_sigma", p.keypoint_noise_sigma},
         {"ocr_dropout_rate", p.ocr_dropout_rate},
         {"n_outlier_ocr", p.n_outlier_ocr},
         {"digit_corruption_rate", p.digit_corruption_rate},
         {"rotation", p.rotation},
         {"seed", p.seed}};
  if (p.affine_distortion) j["affine_distortion"] = affine_to_json(*p.affine_distortion);
  return j;
}

inline PerturbationSpec perturbation_from_json(const json_io::Json& j, const std::string& path = "") {
  using namespace json_io;
  if (!j.is_object()) throw Error(Errc::Spec, "perturbation must be an object", path.empty() ? "$" : path);
  PerturbationSpec p;
  p.keypoint_noise_sigma = number_or(j, "keypoint_noise_sigma", 0.0, path);
  p.ocr_dropout_rate = number_or(j, "ocr_dropout_rate", 0.0, path);
  if (const Json* n = optional_field(j, "n_outlier_ocr"))
    p.n_outlier_ocr = static_cast<int>(as_integer(*n, join(path, "n_outlier_ocr")));
  p.digit_corruption_rate = number_or(j, "digit_corruption_rate", 0.0, path);
  if (const Json* a = optional_field(j, "affine_distortion")) p.affine_distortion = affine_from_json(*a, join(path, "affine_distortion"));
  p.rotation = number_or(j, "rotation", 0.0, path);
  if (const Json* s = optional_field(j, "seed")) {
    const long long seed = as_integer(*s, join(path, "seed"));
    if (seed < 0) throw Error(Errc::Spec, "seed must be non-negative", join(path, "seed"));
    p.seed = static_cast<std::uint64_t>(seed);
  }
  validate_perturbation(p);
  return p;
}

// ---------------------------------------------------------------------------
// Random scene sampling

/// Ranges used when sampling scene specs. Defaults keep every detection
/// inside a 448 x 448 crop under a cond <= 3 affine with scale <= 1.2.
struct SceneSampling {
  CropSize crop_size;
  double center_jitter = 15.0;
  double semi_major_min = 95.0, semi_major_max = 115.0;
  double axis_ratio_min = 0.75;
  double span_min_deg = 120.0, span_max_deg = 340.0;
  int notches_min = 7, notches_max = 13;
  double dual_scale_probability = 0.2;
  double negative_range_probability = 0.2;
};

namespace detail {

inline ScaleRange sample_range(Rng& rng, int n_notches, bool allow_negative) {
  static constexpr double kMantissa[] = {1.0, 2.0, 2.5, 5.0};
  const double step = kMantissa[rng.index(4)] * std::pow(10.0, static_cast<int>(rng.index(5)) - 2);
  const int offset = allow_negative ? -static_cast<int>(1 + rng.index(static_cast<std::uint64_t>(n_notches - 2))) : 0;
  const auto units = UnitLexicon::default_units();
  ScaleRange r;
  r.min = step * offset;
  r.max = step * (offset + n_notches - 1);
  r.unit = units[rng.index(units.size())];
  return r;
}

}  // namespace detail

/// Draws a valid scene spec. Marker values are multiples of a "nice" step
/// (1, 2, 2.5 or 5 times 10^-2 .. 10^2), so ranges span four orders of magnitude.
inline SceneSpec sample_scene_spec(Rng& rng, const SceneSampling& o = {}) {
  SceneSpec s;
  s.crop_size = o.crop_size;
  const double a = rng.uniform(o.semi_major_min, o.semi_major_max);
  s.ellipse = {{o.crop_size.width / 2.0 + rng.uniform(-o.center_jitter, o.center_jitter),
                o.crop_size.height / 2.0 + rng.uniform(-o.center_jitter, o.center_jitter)},
               a,
               a * rng.uniform(o.axis_ratio_min, 1.0),
               rng.uniform(0.0, kPi)};
  const double span = rng.uniform(o.span_min_deg, o.span_max_deg) * kPi / 180.0;
  s.scale_arc.direction = rng.bernoulli(0.5) ? 1 : -1;
  s.scale_arc.start_angle = rng.uniform(0.0, kTwoPi);
  s.scale_arc.end_angle = normalize_angle(s.scale_arc.start_angle + s.scale_arc.direction * span);
  s.n_major_notches = o.notches_min + static_cast<int>(rng.index(static_cast<std::uint64_t>(o.notches_max - o.notches_min + 1)));
  s.range = detail::sample_range(rng, s.n_major_notches, rng.bernoulli(o.negative_range_probability));
  s.needle_value = rng.uniform(s.range.min, s.range.max);
  const bool inner = rng.bernoulli(0.7);
  s.marker_radius_factor = inner ? rng.uniform(0.78, 0.9) : rng.uniform(1.12, 1.22);
  if (rng.bernoulli(o.dual_scale_probability)) {
    ScaleRange second = detail::sample_range(rng, s.n_major_notches, false);
    second.unit = s.range.unit;
    s.second_scale = SecondScale{second, inner ? rng.uniform(1.12, 1.22) : rng.uniform(0.78, 0.9)};
  }
  return s;
}

/// Random affine about the crop center: rotation * diag(s, s / cond) * rotation
/// with s in [scale_min, scale_max] and cond in [1, max_condition].
inline AffineTransform sample_affine(Rng& rng, const CropSize& crop, double max_condition, double scale_min = 0.9,
                                     double scale_max = 1.2) {
  const double s = rng.uniform(scale_min, scale_max);
  const double cond = rng.uniform(1.0, max_condition);
  const Matrix2 lin = Matrix2::rotation(rng.uniform(0.0, kTwoPi)) * Matrix2::diagonal(s, s / cond) *
                      Matrix2::rotation(rng.uniform(0.0, kTwoPi));
  const Point2 c{crop.width / 2.0, crop.height / 2.0};
  return {lin, c - lin * c};
}

}  // namespace gauge::synth
