#pragma once

// Notch keypoints from dense heatmaps: Gaussian rendering for synthesis and
// flat-kernel mean-shift decoding of the thresholded support.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "gaugereader/core.hpp"

namespace gauge {

/// Row-major grid with values in [0, 1]; pixel (x, y) sits at column x, row y.
class Heatmap {
 public:
  Heatmap(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw Error(Errc::Spec, "heatmap size must be positive");
    values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0);
  }

  Heatmap(int width, int height, std::vector<double> values) : Heatmap(width, height) {
    if (values.size() != values_.size()) throw Error(Errc::Spec, "heatmap value count does not match its size");
    for (double v : values)
      if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::Spec, "heatmap values must lie in [0, 1]");
    values_ = std::move(values);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int x, int y) const { return values_[index(x, y)]; }
  void set(int x, int y, double v) { values_[index(x, y)] = std::clamp(v, 0.0, 1.0); }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<double> values_;
};

/// Max-composition of unit-peak Gaussians, one per center.
inline Heatmap render_gaussian_heatmap(int width, int height, std::span<const Point2> centers, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(Errc::InvalidSigma, "sigma must be positive");
  Heatmap h(width, height);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double v = 0.0;
      for (const auto& c : centers) {
        const double dx = x - c.x, dy = y - c.y;
        v = std::max(v, std::exp(-(dx * dx + dy * dy) * inv));
      }
      h.set(x, y, v);
    }
  return h;
}

struct MeanShiftOptions {
  double threshold = 0.5;  // strict: only values above it are clustered
  double tolerance = 1e-3;
  int max_iterations = 100;
};

/// Bandwidth used when none is given: 5% of the smaller heatmap side.
inline double default_bandwidth(int width, int height, double fraction = 0.05) {
  return fraction * static_cast<double>(std::min(width, height));
}

/// Mean-shift with a flat kernel over the pixels above threshold, seeded at
/// every such pixel. Converged modes closer than bandwidth / 2 are merged.
/// Keypoints come back sorted lexicographically by (x, y).
inline std::vector<Point2> extract_keypoints_meanshift(const Heatmap& h, double bandwidth,
                                                       const MeanShiftOptions& opts = {}) {
  if (!(bandwidth > 0.0)) throw Error(Errc::Spec, "bandwidth must be positive");
  std::vector<Point2> support;
  for (int y = 0; y < h.height(); ++y)
    for (int x = 0; x < h.width(); ++x)
      if (h.at(x, y) > opts.threshold) support.push_back({static_cast<double>(x), static_cast<double>(y)});
  if (support.empty()) return {};

  const double bw2 = bandwidth * bandwidth;
  std::vector<Point2> modes;
  modes.reserve(support.size());
  for (const auto& seed : support) {
    Point2 p = seed;
    for (int it = 0; it < opts.max_iterations; ++it) {
      Point2 sum{};
      std::size_t count = 0;
      for (const auto& q : support) {
        const Point2 d = q - p;
        if (dot(d, d) <= bw2) {
          sum = sum + q;
          ++count;
        }
      }
      if (count == 0) break;
      const Point2 next = sum / static_cast<double>(count);
      const double shift = distance(next, p);
      p = next;
      if (shift < opts.tolerance) break;
    }
    modes.push_back(p);
  }

  std::sort(modes.begin(), modes.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  struct Cluster {
    Point2 anchor;
    Point2 sum;
    std::size_t count;
  };
  std::vector<Cluster> clusters;
  const double merge = bandwidth / 2.0;
  for (const auto& m : modes) {
    auto it = std::find_if(clusters.begin(), clusters.end(),
                           [&](const Cluster& c) { return distance(c.anchor, m) < merge; });
    if (it == clusters.end()) {
      clusters.push_back({m, m, 1});
    } else {
      it->sum = it->sum + m;
      ++it->count;
    }
  }

  std::vector<Point2> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) out.push_back(c.sum / static_cast<double>(c.count));
  std::sort(out.begin(), out.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  return out;
}

}  // namespace gauge
