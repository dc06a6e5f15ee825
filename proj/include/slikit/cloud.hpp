#pragma once

#include <cstddef>
#include <vector>

#include "slikit/geometry.hpp"

namespace slikit {

// Triangulated 3D points in the device (projector) frame of one pose.
struct PointCloud {
  std::vector<Vec3> points;
  // Camera pixel (mu, nu) each point was triangulated from; empty when the
  // cloud did not come from an image.
  std::vector<Eigen::Vector2d> source_pixel;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void add(const Vec3& p) { points.push_back(p); }
  void add(const Vec3& p, double mu, double nu) {
    points.push_back(p);
    source_pixel.emplace_back(mu, nu);
  }

  PointCloud transformed(const RigidTransform& t) const {
    PointCloud out;
    out.points.reserve(points.size());
    for (const auto& p : points) out.points.push_back(t.apply(p));
    out.source_pixel = source_pixel;
    return out;
  }

  // Deterministic subsample: keeps every k-th point so that at most
  // max_points survive. Keeps everything when already small enough.
  PointCloud strided(std::size_t max_points) const {
    if (max_points == 0 || points.size() <= max_points) return *this;
    const std::size_t stride = (points.size() + max_points - 1) / max_points;
    PointCloud out;
    out.points.reserve(max_points);
    const bool with_pixels = source_pixel.size() == points.size();
    for (std::size_t i = 0; i < points.size(); i += stride) {
      out.points.push_back(points[i]);
      if (with_pixels) out.source_pixel.push_back(source_pixel[i]);
    }
    return out;
  }
};

}  // namespace slikit
