#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "slikit/geometry.hpp"

namespace slikit {

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Vec3 point = Vec3::Zero();
  int surface = -1;
};

struct Plane {
  Vec3 point;
  Vec3 normal;  // unit length
};

struct Sphere {
  Vec3 center;
  double radius;
};

namespace detail {

constexpr double kRayEps = 1e-9;

inline bool intersect_plane(const Plane& pl, const Ray& ray, double& t) {
  const double denom = pl.normal.dot(ray.dir);
  if (std::abs(denom) < 1e-12) return false;
  t = pl.normal.dot(pl.point - ray.origin) / denom;
  return t > kRayEps;
}

inline bool intersect_sphere(const Sphere& sp, const Ray& ray, double& t) {
  const Vec3 oc = ray.origin - sp.center;
  const double b = oc.dot(ray.dir);
  const double c = oc.squaredNorm() - sp.radius * sp.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  double root = -b - sq;
  if (root <= kRayEps) root = -b + sq;
  if (root <= kRayEps) return false;
  t = root;
  return true;
}

// Moller-Trumbore.
inline bool intersect_triangle(const Vec3& v0, const Vec3& v1, const Vec3& v2,
                               const Ray& ray, double& t) {
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 pvec = ray.dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return false;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = ray.origin - v0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qvec = tvec.cross(e1);
  const double v = ray.dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return false;
  t = e2.dot(qvec) * inv_det;
  return t > kRayEps;
}

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool hit(const Ray& ray, double t_max) const {
    double t0 = 0.0, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      const double inv = 1.0 / ray.dir[a];
      double near = (lo[a] - ray.origin[a]) * inv;
      double far = (hi[a] - ray.origin[a]) * inv;
      if (inv < 0.0) std::swap(near, far);
      t0 = std::max(t0, near);
      t1 = std::min(t1, far);
      if (t1 < t0) return false;
    }
    return true;
  }
};

}  // namespace detail

// Triangle mesh with an axis-aligned BVH; intersect_brute is the testing
// oracle for the accelerated path.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Eigen::Vector3i> faces)
      : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    for (const auto& f : faces_) {
      if (f.minCoeff() < 0 || f.maxCoeff() >= static_cast<int>(vertices_.size())) {
        throw std::invalid_argument("mesh face indexes a missing vertex");
      }
    }
    build_bvh();
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Eigen::Vector3i>& faces() const { return faces_; }

  bool intersect(const Ray& ray, double& t_out) const {
    if (nodes_.empty()) return false;
    double best = std::numeric_limits<double>::infinity();
    // Explicit stack traversal.
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const int idx = stack[--top];
      const Node& node = nodes_[idx];
      if (!node.box.hit(ray, best)) continue;
      if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i) {
          const auto& f = faces_[order_[i]];
          double t;
          if (detail::intersect_triangle(vertices_[f[0]], vertices_[f[1]], vertices_[f[2]], ray, t) &&
              t < best) {
            best = t;
          }
        }
      } else {
        // DFS layout: the left child directly follows its parent; `first`
        // holds the right child.
        stack[top++] = idx + 1;
        stack[top++] = node.first;
      }
    }
    if (!std::isfinite(best)) return false;
    t_out = best;
    return true;
  }

  bool intersect_brute(const Ray& ray, double& t_out) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : faces_) {
      double t;
      if (detail::intersect_triangle(vertices_[f[0]], vertices_[f[1]], vertices_[f[2]], ray, t) &&
          t < best) {
        best = t;
      }
    }
    if (!std::isfinite(best)) return false;
    t_out = best;
    return true;
  }

 private:
  struct Node {
    detail::Aabb box;
    int first = 0;  // child index for inner nodes, triangle offset for leaves
    int count = 0;  // 0 for inner nodes
  };

  void build_bvh() {
    order_.resize(faces_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    centroids_.resize(faces_.size());
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      const auto& f = faces_[i];
      centroids_[i] = (vertices_[f[0]] + vertices_[f[1]] + vertices_[f[2]]) / 3.0;
    }
    if (!faces_.empty()) {
      nodes_.reserve(faces_.size() * 2);
      build_node(0, static_cast<int>(faces_.size()));
    }
  }

  int build_node(int first, int count) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    detail::Aabb box;
    for (int i = first; i < first + count; ++i) {
      const auto& f = faces_[order_[i]];
      box.expand(vertices_[f[0]]);
      box.expand(vertices_[f[1]]);
      box.expand(vertices_[f[2]]);
    }
    nodes_[index].box = box;
    if (count <= 4) {
      nodes_[index].first = first;
      nodes_[index].count = count;
      return index;
    }
    const Vec3 extent = box.hi - box.lo;
    int axis = 0;
    if (extent.y() > extent.x()) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;
    const double mid = 0.5 * (box.lo[axis] + box.hi[axis]);
    auto* begin = order_.data() + first;
    auto* split = std::partition(begin, begin + count, [&](int idx) {
      return centroids_[idx][axis] < mid;
    });
    int left_count = static_cast<int>(split - begin);
    if (left_count == 0 || left_count == count) left_count = count / 2;  // degenerate split
    build_node(first, left_count);  // lands at index + 1
    const int right = build_node(first + left_count, count - left_count);
    nodes_[index].first = right;
    nodes_[index].count = 0;
    return index;
  }

  std::vector<Vec3> vertices_;
  std::vector<Eigen::Vector3i> faces_;
  std::vector<Vec3> centroids_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

struct Surface {
  std::variant<Plane, Sphere, TriangleMesh> shape;
  double albedo = 0.9;
};

// World-frame scene: a list of primitives plus a global ambient term.
struct Scene {
  std::vector<Surface> surfaces;
  double ambient = 0.05;

  void validate() const {
    if (surfaces.empty()) throw std::invalid_argument("scene has no surfaces");
    if (ambient < 0.0 || ambient >= 1.0) throw std::invalid_argument("ambient outside [0,1)");
    for (const auto& s : surfaces) {
      if (s.albedo <= 0.0 || s.albedo > 1.0) throw std::invalid_argument("albedo outside (0,1]");
      if (const auto* pl = std::get_if<Plane>(&s.shape)) {
        if (std::abs(pl->normal.norm() - 1.0) > 1e-9) {
          throw std::invalid_argument("plane normal must be unit length");
        }
      }
    }
  }

  std::optional<Hit> intersect(const Ray& ray) const {
    Hit best;
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
      double t;
      bool ok = false;
      if (const auto* pl = std::get_if<Plane>(&surfaces[i].shape)) {
        ok = detail::intersect_plane(*pl, ray, t);
      } else if (const auto* sp = std::get_if<Sphere>(&surfaces[i].shape)) {
        ok = detail::intersect_sphere(*sp, ray, t);
      } else {
        ok = std::get<TriangleMesh>(surfaces[i].shape).intersect(ray, t);
      }
      if (ok && t < best.t) {
        best.t = t;
        best.surface = static_cast<int>(i);
      }
    }
    if (best.surface < 0) return std::nullopt;
    best.point = ray.origin + best.t * ray.dir;
    return best;
  }

  // True when the open segment between a and b is blocked by any surface.
  bool occluded(const Vec3& a, const Vec3& b) const {
    const Vec3 d = b - a;
    const double dist = d.norm();
    if (dist < 1e-12) return false;
    const Ray ray{a, d / dist};
    // Small offsets keep the endpoints themselves from registering.
    for (const auto& s : surfaces) {
      double t;
      bool ok = false;
      if (const auto* pl = std::get_if<Plane>(&s.shape)) {
        ok = detail::intersect_plane(*pl, ray, t);
      } else if (const auto* sp = std::get_if<Sphere>(&s.shape)) {
        ok = detail::intersect_sphere(*sp, ray, t);
      } else {
        ok = std::get<TriangleMesh>(s.shape).intersect(ray, t);
      }
      if (ok && t > 1e-6 && t < dist - 1e-6) return true;
    }
    return false;
  }
};

}  // namespace slikit
