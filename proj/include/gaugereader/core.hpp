#pragma once

// Basic value types and the error type shared by every gaugereader module.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace gauge {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Error categories surfaced by the library. Every rejected input maps to one.
enum class Errc {
  Syntax,
  Schema,
  InsufficientPoints,
  DegenerateConfiguration,
  DegeneratePoints,
  NoIntersection,
  ZeroVector,
  InvalidSigma,
  AmbiguousOrientation,
  InsufficientMarkers,
  NoConsensus,
  InvalidRange,
  MissingGroundTruth,
  Spec,
  Io,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::Syntax: return "SyntaxError";
    case Errc::Schema: return "SchemaError";
    case Errc::InsufficientPoints: return "InsufficientPoints";
    case Errc::DegenerateConfiguration: return "DegenerateConfiguration";
    case Errc::DegeneratePoints: return "DegeneratePoints";
    case Errc::NoIntersection: return "NoIntersection";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::InvalidSigma: return "InvalidSigma";
    case Errc::AmbiguousOrientation: return "AmbiguousOrientation";
    case Errc::InsufficientMarkers: return "InsufficientMarkers";
    case Errc::NoConsensus: return "NoConsensus";
    case Errc::InvalidRange: return "InvalidRange";
    case Errc::MissingGroundTruth: return "MissingGroundTruth";
    case Errc::Spec: return "SpecError";
    case Errc::Io: return "IoError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string path = {})
      : std::runtime_error(std::string(errc_name(code)) +
                           (path.empty() ? "" : " at \"" + path + "\"") + ": " + message),
        code_(code),
        path_(std::move(path)) {}

  Errc code() const noexcept { return code_; }
  /// JSON path of the offending field, empty when not applicable.
  const std::string& path() const noexcept { return path_; }

 private:
  Errc code_;
  std::string path_;
};

/// A point or displacement in the image frame: origin top-left, y grows downward.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator-(Point2 a) { return {-a.x, -a.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline Point2 operator*(Point2 p, double s) { return {s * p.x, s * p.y}; }
inline Point2 operator/(Point2 p, double s) { return {p.x / s, p.y / s}; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Wraps an angle into [0, 2pi).
inline double normalize_angle(double angle) {
  double r = std::fmod(angle, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

}  // namespace gauge
