#pragma once

// Conic and line fitting, affine coordinate maps and the needle/scale
// intersection used to locate the reading on the dial.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "gaugereader/core.hpp"

namespace gauge {

/// Ellipse in geometric form. `theta` is the rotation of the major axis in the
/// y-down image frame.
struct Ellipse {
  Point2 center;
  double a = 1.0;      // semi-major
  double b = 1.0;      // semi-minor
  double theta = 0.0;  // [0, pi)

  friend bool operator==(const Ellipse&, const Ellipse&) = default;
};

/// Point at parametric angle t: center + R(theta) * (a cos t, b sin t).
inline Point2 point_on(const Ellipse& e, double t) {
  const double c = std::cos(e.theta), s = std::sin(e.theta);
  const double u = e.a * std::cos(t), v = e.b * std::sin(t);
  return {e.center.x + c * u - s * v, e.center.y + s * u + c * v};
}

/// Parametric line; `direction` has unit length.
struct Line {
  Point2 point;
  Point2 direction{1.0, 0.0};

  Point2 at(double s) const { return point + s * direction; }
  double param_of(Point2 p) const { return dot(p - point, direction); }
  double distance_to(Point2 p) const { return std::abs(cross(direction, p - point)); }
};

struct Matrix2 {
  double m00 = 1.0, m01 = 0.0;
  double m10 = 0.0, m11 = 1.0;

  double det() const { return m00 * m11 - m01 * m10; }
  Point2 operator*(Point2 p) const { return {m00 * p.x + m01 * p.y, m10 * p.x + m11 * p.y}; }
  Matrix2 operator*(const Matrix2& o) const {
    return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
            m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
  }
  Matrix2 inverse() const {
    const double d = det();
    return {m11 / d, -m01 / d, -m10 / d, m00 / d};
  }
  static Matrix2 rotation(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c, -s, s, c};
  }
  static Matrix2 diagonal(double sx, double sy) { return {sx, 0.0, 0.0, sy}; }

  friend bool operator==(const Matrix2&, const Matrix2&) = default;
};

/// p -> linear * p + translation. `linear` must be invertible.
struct AffineTransform {
  Matrix2 linear;
  Point2 translation;

  static AffineTransform identity() { return {}; }

  AffineTransform inverse() const {
    const Matrix2 inv = linear.inverse();
    return {inv, -(inv * translation)};
  }
  /// (this after other)(p) = this(other(p))
  AffineTransform after(const AffineTransform& other) const {
    return {linear * other.linear, linear * other.translation + translation};
  }
};

inline Point2 apply_affine(const AffineTransform& t, Point2 p) {
  return t.linear * p + t.translation;
}

/// Maps a line through an affine transform, renormalizing the direction.
inline Line transform_line(const AffineTransform& t, const Line& l) {
  const Point2 d = t.linear * l.direction;
  return {apply_affine(t, l.point), d / norm(d)};
}

namespace detail {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

inline Vec3 cross3(const Vec3& u, const Vec3& v) {
  return {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
}
inline double dot3(const Vec3& u, const Vec3& v) { return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]; }

inline double det3(const Mat3& m) { return dot3(m[0], cross3(m[1], m[2])); }

inline Mat3 mul3(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

inline Mat3 transpose3(const Mat3& m) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = m[j][i];
  return r;
}

/// Inverse via the adjugate; caller guarantees a non-singular matrix.
inline Mat3 inverse3(const Mat3& m) {
  const double d = det3(m);
  const Vec3 c0 = cross3(m[1], m[2]);
  const Vec3 c1 = cross3(m[2], m[0]);
  const Vec3 c2 = cross3(m[0], m[1]);
  Mat3 r{};
  for (int i = 0; i < 3; ++i) {
    r[i][0] = c0[i] / d;
    r[i][1] = c1[i] / d;
    r[i][2] = c2[i] / d;
  }
  return r;
}

/// Real roots (and real parts of a complex pair) of x^3 + c2 x^2 + c1 x + c0,
/// each polished with Newton steps. Near-coincident roots can read as a
/// complex pair after rounding, so their real part is kept as a candidate.
inline std::vector<double> cubic_root_candidates(double c2, double c1, double c0) {
  const double shift = c2 / 3.0;
  const double p = c1 - c2 * c2 / 3.0;
  const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
  const double disc = q * q / 4.0 + p * p * p / 27.0;

  std::vector<double> roots;
  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    const double t = std::cbrt(-q / 2.0 + sq) + std::cbrt(-q / 2.0 - sq);
    roots = {t - shift, -t / 2.0 - shift};
  } else if (p == 0.0) {
    roots = {-shift};
  } else {
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) roots.push_back(r * std::cos(phi - kTwoPi * k / 3.0) - shift);
  }

  for (double& x : roots) {
    for (int it = 0; it < 4; ++it) {
      const double f = ((x + c2) * x + c1) * x + c0;
      const double df = (3.0 * x + 2.0 * c2) * x + c1;
      if (df == 0.0) break;
      const double next = x - f / df;
      if (!std::isfinite(next)) break;
      x = next;
    }
  }
  return roots;
}

/// Null vector of (m - lambda I) from the largest cross product of its rows.
inline Vec3 null_vector(const Mat3& m, double lambda) {
  Mat3 a = m;
  for (int i = 0; i < 3; ++i) a[i][i] -= lambda;
  const std::array<Vec3, 3> candidates = {cross3(a[0], a[1]), cross3(a[0], a[2]), cross3(a[1], a[2])};
  Vec3 best = candidates[0];
  double best_norm = dot3(best, best);
  for (const auto& c : candidates) {
    const double n = dot3(c, c);
    if (n > best_norm) {
      best = c;
      best_norm = n;
    }
  }
  if (best_norm == 0.0) return best;
  const double inv = 1.0 / std::sqrt(best_norm);
  return {best[0] * inv, best[1] * inv, best[2] * inv};
}

/// General conic A x^2 + B xy + C y^2 + D x + E y + F = 0.
struct Conic {
  double A, B, C, D, E, F;
};

/// Converts a conic to geometric parameters; returns false if it is not a
/// real, non-degenerate ellipse.
inline bool conic_to_ellipse(const Conic& k, Ellipse& out) {
  const double disc = 4.0 * k.A * k.C - k.B * k.B;
  if (!(disc > 0.0)) return false;
  const double x0 = (k.B * k.E - 2.0 * k.C * k.D) / disc;
  const double y0 = (k.B * k.D - 2.0 * k.A * k.E) / disc;
  double f0 = k.A * x0 * x0 + k.B * x0 * y0 + k.C * y0 * y0 + k.D * x0 + k.E * y0 + k.F;

  double A = k.A, B = k.B, C = k.C;
  if (A + C < 0.0) {
    A = -A;
    B = -B;
    C = -C;
    f0 = -f0;
  }
  if (!(f0 < 0.0)) return false;

  const double phi = 0.5 * std::atan2(B, A - C);
  const double c = std::cos(phi), s = std::sin(phi);
  const double along = A * c * c + B * c * s + C * s * s;
  const double across = A * s * s - B * c * s + C * c * c;
  if (!(along > 0.0) || !(across > 0.0)) return false;

  double theta = phi;
  double lambda_major = along, lambda_minor = across;
  if (along > across) {
    theta = phi + kPi / 2.0;
    lambda_major = across;
    lambda_minor = along;
  }
  theta = std::fmod(theta, kPi);
  if (theta < 0.0) theta += kPi;
  if (theta >= kPi) theta = 0.0;

  out.center = {x0, y0};
  out.a = std::sqrt(-f0 / lambda_major);
  out.b = std::sqrt(-f0 / lambda_minor);
  out.theta = theta;
  return std::isfinite(out.a) && std::isfinite(out.b) && is_finite(out.center) && out.b > 0.0;
}

}  // namespace detail

/// Direct least-squares ellipse fit (Halir & Flusser's stable form of
/// Fitzgibbon's method). Points are normalized to zero mean and unit RMS
/// radius before building the scatter matrices.
inline Ellipse fit_ellipse_direct(std::span<const Point2> points) {
  using namespace detail;
  const std::size_t n = points.size();
  if (n < 5) throw Error(Errc::InsufficientPoints, "ellipse fit needs at least 5 points, got " + std::to_string(n));

  Point2 mean{};
  for (const auto& p : points) {
    if (!is_finite(p)) throw Error(Errc::DegenerateConfiguration, "non-finite point");
    mean = mean + p;
  }
  mean = mean / static_cast<double>(n);
  double ms = 0.0;
  for (const auto& p : points) ms += dot(p - mean, p - mean);
  const double scale = std::sqrt(ms / static_cast<double>(n));
  if (!(scale > 0.0)) throw Error(Errc::DegenerateConfiguration, "all points coincide");

  std::vector<Point2> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = (points[i] - mean) / scale;

  std::size_t distinct = 0;
  {
    std::vector<Point2> sorted = u;
    std::sort(sorted.begin(), sorted.end(), [](Point2 l, Point2 r) { return l.x < r.x || (l.x == r.x && l.y < r.y); });
    for (std::size_t i = 0; i < n; ++i)
      if (i == 0 || distance(sorted[i], sorted[i - 1]) > 1e-12) ++distinct;
  }
  if (distinct < 5) throw Error(Errc::DegenerateConfiguration, "fewer than 5 distinct points");

  Mat3 s1{}, s2{}, s3{};
  for (const auto& p : u) {
    const Vec3 d1 = {p.x * p.x, p.x * p.y, p.y * p.y};
    const Vec3 d2 = {p.x, p.y, 1.0};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        s1[i][j] += d1[i] * d1[j];
        s2[i][j] += d1[i] * d2[j];
        s3[i][j] += d2[i] * d2[j];
      }
  }
  // Collinear scatter: the second-moment determinant vanishes relative to its scale.
  const double moment_det = s3[0][0] * s3[1][1] - s3[0][1] * s3[0][1];
  if (!(moment_det > 1e-10 * static_cast<double>(n) * static_cast<double>(n)))
    throw Error(Errc::DegenerateConfiguration, "points are collinear");

  const Mat3 t = [&] {
    Mat3 r = mul3(inverse3(s3), transpose3(s2));
    for (auto& row : r)
      for (auto& v : row) v = -v;
    return r;
  }();
  Mat3 reduced = mul3(s2, t);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) reduced[i][j] += s1[i][j];

  // Premultiply by the inverse of the constraint block [[0,0,2],[0,-1,0],[2,0,0]].
  const Mat3 m = {Vec3{reduced[2][0] / 2.0, reduced[2][1] / 2.0, reduced[2][2] / 2.0},
                  Vec3{-reduced[1][0], -reduced[1][1], -reduced[1][2]},
                  Vec3{reduced[0][0] / 2.0, reduced[0][1] / 2.0, reduced[0][2] / 2.0}};

  const double trace = m[0][0] + m[1][1] + m[2][2];
  const double minors = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) + (m[0][0] * m[2][2] - m[0][2] * m[2][0]) +
                        (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
  const double determinant = det3(m);

  bool found = false;
  double best_cost = std::numeric_limits<double>::infinity();
  Vec3 best{};
  for (double lambda : cubic_root_candidates(-trace, minors, -determinant)) {
    const Vec3 v = null_vector(m, lambda);
    const double constraint = 4.0 * v[0] * v[2] - v[1] * v[1];
    if (!(constraint > 0.0)) continue;
    // Algebraic residual per unit of the ellipse constraint.
    Vec3 rv{};
    for (int i = 0; i < 3; ++i) rv[i] = dot3(reduced[i], v);
    const double cost = dot3(v, rv) / constraint;
    if (cost < best_cost) {
      best_cost = cost;
      best = v;
      found = true;
    }
  }
  if (!found) throw Error(Errc::DegenerateConfiguration, "eigensystem yields no ellipse");

  Vec3 lin{};
  for (int i = 0; i < 3; ++i) lin[i] = dot3(t[i], best);

  // Convert in the normalized frame, then undo u = (p - mean) / scale.
  Ellipse normalized;
  if (!conic_to_ellipse({best[0], best[1], best[2], lin[0], lin[1], lin[2]}, normalized))
    throw Error(Errc::DegenerateConfiguration, "fitted conic is not a real ellipse");
  Ellipse e = normalized;
  e.center = mean + scale * normalized.center;
  e.a = normalized.a * scale;
  e.b = normalized.b * scale;
  if (!(e.a > 0.0) || !(e.b > 0.0) || !std::isfinite(e.a) || !is_finite(e.center))
    throw Error(Errc::DegenerateConfiguration, "fitted ellipse is not finite");
  return e;
}

/// Affine map taking `e` onto the unit circle at the origin:
/// translate center to origin, rotate by -theta, scale axes by (1/a, 1/b).
inline AffineTransform circularize(const Ellipse& e) {
  const Matrix2 linear = Matrix2::diagonal(1.0 / e.a, 1.0 / e.b) * Matrix2::rotation(-e.theta);
  return {linear, -(linear * e.center)};
}

/// Result of a total-least-squares line fit.
struct LineFit {
  Line line;
  /// Minor / major eigenvalue of the scatter; 1 means isotropic.
  double eigen_ratio = 0.0;

  static constexpr double kIsotropicRatio = 0.9;
  bool isotropic() const { return eigen_ratio > kIsotropicRatio; }
};

/// Orthogonal distance regression: line through the centroid along the
/// principal axis of the point scatter.
inline LineFit odr_fit_line(std::span<const Point2> points) {
  if (points.size() < 2) throw Error(Errc::InsufficientPoints, "line fit needs at least 2 points");
  Point2 c{};
  for (const auto& p : points) c = c + p;
  c = c / static_cast<double>(points.size());

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const Point2 d = p - c;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
  }
  const double half_diff = 0.5 * (sxx - syy);
  const double root = std::hypot(half_diff, sxy);
  const double mean_eig = 0.5 * (sxx + syy);
  const double major = mean_eig + root;
  const double minor = std::max(0.0, mean_eig - root);
  const double coord_scale = 1.0 + dot(c, c);
  if (!(major > 1e-24 * coord_scale * static_cast<double>(points.size())))
    throw Error(Errc::DegeneratePoints, "all needle points coincide");

  const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  return {{c, {std::cos(phi), std::sin(phi)}}, minor / major};
}

inline constexpr double kTangencyTolerance = 1e-12;

/// Intersections of `l` with the unit circle at the origin, ordered along the
/// line direction.
inline std::vector<Point2> line_circle_intersections(const Line& l) {
  const Point2 foot = l.point + l.param_of({0.0, 0.0}) * l.direction;
  const double disc = 1.0 - dot(foot, foot);
  if (disc < -kTangencyTolerance) throw Error(Errc::NoIntersection, "line misses the scale circle");
  if (disc <= kTangencyTolerance) return {foot};
  const double h = std::sqrt(disc);
  return {foot - h * l.direction, foot + h * l.direction};
}

/// Polar angle in [0, 2pi); increases clockwise on screen in the y-down frame.
inline double parametric_angle(Point2 p) {
  if (p.x == 0.0 && p.y == 0.0) throw Error(Errc::ZeroVector, "angle of zero vector");
  return normalize_angle(std::atan2(p.y, p.x));
}

/// Chooses the needle/scale intersection: the candidate lying on the needle
/// segment if exactly one does, otherwise the one nearest either segment end.
inline Point2 pick_needle_intersection(std::span<const Point2> candidates, Point2 end_a, Point2 end_b) {
  if (candidates.empty()) throw Error(Errc::NoIntersection, "no intersection candidates");
  if (candidates.size() == 1) return candidates.front();

  const Point2 axis = end_b - end_a;
  const double len = norm(axis);
  auto on_segment = [&](Point2 p) {
    constexpr double slack = 1e-9;
    if (len == 0.0) return distance(p, end_a) <= slack;
    const Point2 dir = axis / len;
    const double s = dot(p - end_a, dir);
    return s >= -slack && s <= len + slack && std::abs(cross(dir, p - end_a)) <= slack;
  };

  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (on_segment(candidates[i])) inside.push_back(i);
  if (inside.size() == 1) return candidates[inside.front()];

  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  double best_angle = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Point2 p = candidates[i];
    const double d = std::min(distance(p, end_a), distance(p, end_b));
    const double ang = (p.x == 0.0 && p.y == 0.0) ? 0.0 : parametric_angle(p);
    if (d < best_dist || (d == best_dist && ang < best_angle)) {
      best = i;
      best_dist = d;
      best_angle = ang;
    }
  }
  return candidates[best];
}

struct RadialProjection {
  Point2 on_circle;
  double radius = 0.0;
};

/// Radial projection onto the unit circle in the circularized frame.
inline RadialProjection radial_project_to_circle(Point2 p) {
  const double r = norm(p);
  if (!(r > 0.0)) throw Error(Errc::ZeroVector, "cannot project the circle center");
  return {p / r, r};
}

/// Rotation taking `wrap_direction` onto (0, 1), the bottom of the dial.
inline AffineTransform orientation_correction(Point2 wrap_direction) {
  const double angle = kPi / 2.0 - std::atan2(wrap_direction.y, wrap_direction.x);
  return {Matrix2::rotation(angle), {}};
}

}  // namespace gauge
