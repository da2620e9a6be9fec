#pragma once

// Test-only oracles and helpers, written independently of the library paths
// they check.

#include <cmath>
#include <vector>

#include "gaugereader/core.hpp"

namespace gauge::test {

/// Analytic ellipse sampler: center + R(theta) * (a cos t, b sin t).
inline Point2 ellipse_point(double cx, double cy, double a, double b, double theta, double t) {
  const double x = a * std::cos(t), y = b * std::sin(t);
  return {cx + std::cos(theta) * x - std::sin(theta) * y, cy + std::sin(theta) * x + std::cos(theta) * y};
}

/// Implicit conic value of an ellipse at p, scaled so 4AC - B^2 = 1.
inline double normalized_conic_value(double cx, double cy, double a, double b, double theta, Point2 p) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double A = c * c / (a * a) + s * s / (b * b);
  const double B = 2.0 * c * s * (1.0 / (a * a) - 1.0 / (b * b));
  const double C = s * s / (a * a) + c * c / (b * b);
  const double D = -2.0 * A * cx - B * cy;
  const double E = -2.0 * C * cy - B * cx;
  const double F = A * cx * cx + B * cx * cy + C * cy * cy - 1.0;
  const double k = 1.0 / std::sqrt(4.0 * A * C - B * B);
  return k * (A * p.x * p.x + B * p.x * p.y + C * p.y * p.y + D * p.x + E * p.y + F);
}

inline double angle_difference_mod_pi(double a, double b) {
  double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

}  // namespace gauge::test
