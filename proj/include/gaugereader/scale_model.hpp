#pragma once

// From OCR text and notch geometry to a linear angle -> value model:
// wrap-around anchoring, numeric token parsing, unit lookup, inner/outer
// separation and the RANSAC line fit.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gaugereader/core.hpp"
#include "gaugereader/fixtures.hpp"
#include "gaugereader/json_io.hpp"
#include "gaugereader/random.hpp"

namespace gauge {

struct ScaleMarker {
  double angle = 0.0;   // parametric angle on the circularized scale, [0, 2pi)
  double value = 0.0;
  double radius = 1.0;  // distance from the circle center, circularized frame
  std::string source_text;
};

/// (relative angle, value) sample for the scale line fit.
struct AngleValue {
  double angle = 0.0;
  double value = 0.0;
};

struct LinearScaleModel {
  double slope = 0.0;      // value per radian
  double intercept = 0.0;  // value at relative angle 0
  std::vector<std::size_t> inliers;
  double wrap_angle = 0.0;
  /// Residual bound every inlier satisfies.
  double threshold = 0.0;
};

inline double evaluate_model(const LinearScaleModel& m, double relative_angle) {
  return m.slope * relative_angle + m.intercept;
}

inline double relative_angle(double angle, double wrap_angle) { return normalize_angle(angle - wrap_angle); }

namespace detail {

inline double arc_length(double from, double to) { return normalize_angle(to - from); }

inline bool strictly_inside_arc(double x, double from, double length) {
  constexpr double eps = 1e-12;
  const double r = arc_length(from, x);
  return r > eps && r < length - eps;
}

}  // namespace detail

/// Midpoint of the shorter of the two arcs between `a` and `b`. Equal arcs
/// resolve to the midpoint lying in [0, pi).
inline double shorter_arc_midpoint(double a, double b) {
  a = normalize_angle(a);
  b = normalize_angle(b);
  const double l1 = detail::arc_length(a, b);
  const double l2 = kTwoPi - l1;
  const double m1 = normalize_angle(a + l1 / 2.0);
  const double m2 = normalize_angle(b + l2 / 2.0);
  if (std::abs(l1 - l2) <= 1e-12) return m1 < kPi ? m1 : m2;
  return l1 < l2 ? m1 : m2;
}

/// Wrap-around point between the start and end notches: the midpoint of the
/// arc holding fewer intermediate notches, i.e. the arc the scale does not
/// occupy. With no intermediates at all the shorter arc is used. Throws
/// AmbiguousOrientation when intermediates split evenly across both arcs.
inline double wrap_around_angle(double start_angle, double end_angle, std::span<const double> intermediate_angles) {
  const double s = normalize_angle(start_angle);
  const double e = normalize_angle(end_angle);
  const double l1 = detail::arc_length(s, e);
  if (l1 <= 1e-12 || l1 >= kTwoPi - 1e-12)
    throw Error(Errc::AmbiguousOrientation, "start and end notches coincide");
  const double l2 = kTwoPi - l1;

  std::size_t in_first = 0, in_second = 0;
  for (double x : intermediate_angles) {
    if (detail::strictly_inside_arc(x, s, l1)) ++in_first;
    if (detail::strictly_inside_arc(x, e, l2)) ++in_second;
  }
  if (in_first < in_second) return normalize_angle(s + l1 / 2.0);
  if (in_second < in_first) return normalize_angle(e + l2 / 2.0);
  if (in_first == 0) return shorter_arc_midpoint(s, e);
  throw Error(Errc::AmbiguousOrientation, "intermediate notches split evenly between both arcs");
}

/// Midpoint of the widest angular gap between consecutive angles; used when
/// the start or end notch is missing.
inline double largest_gap_midpoint(std::vector<double> angles) {
  if (angles.empty()) return 0.0;
  for (double& a : angles) a = normalize_angle(a);
  std::sort(angles.begin(), angles.end());
  double best_gap = -1.0, best_mid = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double from = angles[i];
    const double to = i + 1 < angles.size() ? angles[i + 1] : angles.front() + kTwoPi;
    if (to - from > best_gap) {
      best_gap = to - from;
      best_mid = normalize_angle(from + (to - from) / 2.0);
    }
  }
  return best_mid;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (!s.empty() && space(s.front())) s.remove_prefix(1);
  while (!s.empty() && space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string ascii_lower(std::string_view s) {
  std::string r(s);
  for (char& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return r;
}

}  // namespace detail

/// Accepts an optionally signed decimal number ("160", "-0.4", ".5").
/// Exponents, thousands separators and mixed alphanumerics are rejected.
/// The Unicode minus sign is accepted as a sign.
inline std::optional<double> parse_numeric_token(std::string_view text) {
  std::string_view s = detail::trim(text);
  bool negative = false;
  constexpr std::string_view unicode_minus = "\xE2\x88\x92";
  if (s.starts_with(unicode_minus)) {
    negative = true;
    s.remove_prefix(unicode_minus.size());
  } else if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) return std::nullopt;

  std::size_t digits = 0, points = 0;
  for (char c : s) {
    if (c >= '0' && c <= '9') {
      ++digits;
    } else if (c == '.') {
      ++points;
    } else {
      return std::nullopt;
    }
  }
  if (digits == 0 || points > 1) return std::nullopt;

  std::string body(s);
  if (body.front() == '.') body.insert(body.begin(), '0');
  if (body.back() == '.') body.pop_back();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (ec != std::errc{} || ptr != body.data() + body.size()) return std::nullopt;
  return negative ? -value : value;
}

/// Known unit strings, in their canonical spelling.
class UnitLexicon {
 public:
  UnitLexicon() : units_(default_units()) {}
  explicit UnitLexicon(std::vector<std::string> units) : units_(std::move(units)) {}

  static std::vector<std::string> default_units() {
    return {"bar", "mbar", "psi", "kpa", "mpa", "pa", "%", "°c", "°f", "rpm", "l/min", "m3/h", "mmhg", "inhg"};
  }

  /// One unit per line; '#' starts a comment.
  static UnitLexicon parse(std::string_view contents) {
    std::vector<std::string> units;
    while (!contents.empty()) {
      const auto nl = contents.find('\n');
      std::string_view line = contents.substr(0, nl);
      contents = nl == std::string_view::npos ? std::string_view{} : contents.substr(nl + 1);
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (!line.empty()) units.emplace_back(line);
    }
    return UnitLexicon(std::move(units));
  }

  static UnitLexicon load(const std::string& path) { return parse(json_io::read_file(path)); }

  /// Canonical spelling of `token` if it names a known unit (case-insensitive).
  std::optional<std::string> match(std::string_view token) const {
    const std::string key = detail::ascii_lower(detail::trim(token));
    for (const auto& u : units_)
      if (detail::ascii_lower(u) == key) return u;
    return std::nullopt;
  }

  const std::vector<std::string>& units() const { return units_; }

 private:
  std::vector<std::string> units_;
};

/// Highest-confidence non-numeric OCR token that names a known unit. Equal
/// confidences keep the earlier item.
inline std::optional<std::string> extract_unit(std::span<const OcrItem> items, const UnitLexicon& lexicon = {}) {
  std::optional<std::string> best;
  double best_conf = -1.0;
  for (const auto& item : items) {
    if (parse_numeric_token(item.text)) continue;
    auto unit = lexicon.match(item.text);
    if (unit && item.confidence > best_conf) {
      best = std::move(unit);
      best_conf = item.confidence;
    }
  }
  return best;
}

/// Markers on or outside the unit circle belong to the outer scale.
inline std::pair<std::vector<ScaleMarker>, std::vector<ScaleMarker>> split_inner_outer(
    std::span<const ScaleMarker> markers) {
  std::vector<ScaleMarker> outer, inner;
  for (const auto& m : markers) (m.radius >= 1.0 ? outer : inner).push_back(m);
  return {std::move(outer), std::move(inner)};
}

namespace detail {

struct LineCoefficients {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares of value on angle over `subset`.
inline std::optional<LineCoefficients> least_squares(std::span<const AngleValue> pairs,
                                                     std::span<const std::size_t> subset) {
  if (subset.size() < 2) return std::nullopt;
  double ma = 0.0, mv = 0.0;
  for (auto i : subset) {
    ma += pairs[i].angle;
    mv += pairs[i].value;
  }
  ma /= static_cast<double>(subset.size());
  mv /= static_cast<double>(subset.size());
  double saa = 0.0, sav = 0.0;
  for (auto i : subset) {
    const double da = pairs[i].angle - ma;
    saa += da * da;
    sav += da * (pairs[i].value - mv);
  }
  if (!(saa > 0.0)) return std::nullopt;
  const double slope = sav / saa;
  return LineCoefficients{slope, mv - slope * ma};
}

inline std::vector<std::size_t> consensus(std::span<const AngleValue> pairs, LineCoefficients line, double threshold) {
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (std::abs(pairs[i].value - (line.slope * pairs[i].angle + line.intercept)) <= threshold) in.push_back(i);
  return in;
}

}  // namespace detail

/// RANSAC over two-point line hypotheses, refit by least squares on the
/// largest consensus set (ties keep the set found first).
inline LinearScaleModel ransac_fit_linear(std::span<const AngleValue> pairs, double threshold, int iterations,
                                          std::uint64_t seed) {
  const std::size_t n = pairs.size();
  if (n < 2) throw Error(Errc::InsufficientMarkers, "need at least 2 scale markers, got " + std::to_string(n));
  if (!(threshold > 0.0)) throw Error(Errc::InvalidRange, "inlier threshold must be positive");

  Rng rng(seed);
  std::vector<std::size_t> best;
  detail::LineCoefficients best_line;
  for (int it = 0; it < iterations; ++it) {
    const std::size_t i = rng.index(n);
    std::size_t j = rng.index(n - 1);
    if (j >= i) ++j;
    const double da = pairs[j].angle - pairs[i].angle;
    if (std::abs(da) < 1e-12) continue;
    const double slope = (pairs[j].value - pairs[i].value) / da;
    const detail::LineCoefficients line{slope, pairs[i].value - slope * pairs[i].angle};
    auto in = detail::consensus(pairs, line, threshold);
    if (in.size() > best.size()) {
      best = std::move(in);
      best_line = line;
    }
  }
  if (best.size() < 2) throw Error(Errc::NoConsensus, "no two-marker consensus found");

  detail::LineCoefficients final_line = best_line;
  if (auto refit = detail::least_squares(pairs, best)) {
    const auto refit_in = detail::consensus(pairs, *refit, threshold);
    // Keep the refit only if it still explains the whole consensus set.
    if (std::includes(refit_in.begin(), refit_in.end(), best.begin(), best.end())) final_line = *refit;
  }
  LinearScaleModel m;
  m.slope = final_line.slope;
  m.intercept = final_line.intercept;
  m.inliers = detail::consensus(pairs, final_line, threshold);
  m.threshold = threshold;
  return m;
}

/// Plain least squares over every pair, without outlier rejection. All pairs
/// are reported as inliers; `threshold` is set to the largest residual.
inline LinearScaleModel fit_least_squares_linear(std::span<const AngleValue> pairs) {
  if (pairs.size() < 2) throw Error(Errc::InsufficientMarkers, "need at least 2 scale markers");
  std::vector<std::size_t> all(pairs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto line = detail::least_squares(pairs, all);
  if (!line) throw Error(Errc::NoConsensus, "all markers share one angle");
  LinearScaleModel m;
  m.slope = line->slope;
  m.intercept = line->intercept;
  m.inliers = std::move(all);
  for (const auto& p : pairs)
    m.threshold = std::max(m.threshold, std::abs(p.value - evaluate_model(m, p.angle)));
  return m;
}

/// Default inlier threshold: a fraction of the value span, floored at 1e-9.
/// The span ignores values further than 10 scaled MADs from the median, so a
/// stray serial number cannot inflate the threshold past the whole scale.
inline double inlier_threshold(std::span<const AngleValue> pairs, double fraction) {
  if (pairs.empty()) return 1e-9;
  std::vector<double> v;
  for (const auto& p : pairs) v.push_back(p.value);
  auto median = [](std::vector<double> x) {
    const auto mid = x.begin() + static_cast<std::ptrdiff_t>(x.size() / 2);
    std::nth_element(x.begin(), mid, x.end());
    if (x.size() % 2) return *mid;
    return 0.5 * (*mid + *std::max_element(x.begin(), mid));
  };
  const double med = median(v);
  std::vector<double> dev;
  for (double x : v) dev.push_back(std::abs(x - med));
  const double reach = 10.0 * 1.4826 * median(dev);
  double lo = med, hi = med;
  for (double x : v)
    if (std::abs(x - med) <= reach) lo = std::min(lo, x), hi = std::max(hi, x);
  if (hi - lo <= 0.0) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    lo = *mn, hi = *mx;
  }
  return std::max(1e-9, fraction * (hi - lo));
}

}  // namespace gauge
