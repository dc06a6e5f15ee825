#pragma once

#include <Eigen/Geometry>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

#include "slikit/cloud.hpp"
#include "slikit/geometry.hpp"

namespace slikit {

// Global back end: every estimated pose is a vertex, odometry and loop
// constraints are edges, and Levenberg-Marquardt refines the absolute poses
// with vertex 0 pinned as the gauge anchor.

struct PoseVertex {
  int id = 0;
  RigidTransform pose;  // device frame -> world frame
};

struct PoseEdge {
  int from_id = 0;
  int to_id = 0;
  RigidTransform measurement;  // pose of to_id expressed in from_id's frame
  Mat6 information = Mat6::Identity();
};

// Chains device-pose increments: vertex k carries the composition of motions
// 0..k-1 applied to the identity at vertex 0.
inline std::vector<PoseVertex> accumulate(const std::vector<EulerPose>& motions) {
  if (motions.empty()) throw std::invalid_argument("accumulate needs at least one motion");
  std::vector<PoseVertex> vertices;
  vertices.reserve(motions.size() + 1);
  RigidTransform pose;
  vertices.push_back({0, pose});
  for (std::size_t k = 0; k < motions.size(); ++k) {
    pose = pose * RigidTransform::from_euler(motions[k]);
    vertices.push_back({static_cast<int>(k + 1), pose});
  }
  return vertices;
}

// Residual of one edge: r = [t_E; Log(R_E)] of E = Z^-1 * T_from^-1 * T_to.
inline Vec6 edge_residual(const PoseEdge& edge, const RigidTransform& from,
                          const RigidTransform& to) {
  const RigidTransform e = edge.measurement.inverse() * (from.inverse() * to);
  Vec6 r;
  r.head<3>() = e.t;
  r.tail<3>() = so3_log(e.r);
  return r;
}

// Exact Jacobians of edge_residual with respect to the local chart
// T <- (R * Exp(w), t + R * rho) applied at each endpoint.
inline void edge_jacobians(const PoseEdge& edge, const RigidTransform& from,
                           const RigidTransform& to, Mat6& j_from, Mat6& j_to) {
  const Mat3 rz_t = edge.measurement.r.transpose();
  const Mat3 ri_t = from.r.transpose();
  const Mat3 r_e = rz_t * ri_t * to.r;
  const Vec3 log_e = so3_log(r_e);
  const Vec3 a = ri_t * (to.t - from.t);

  j_to.setZero();
  j_to.topLeftCorner<3, 3>() = rz_t * ri_t * to.r;
  j_to.bottomRightCorner<3, 3>() = so3_right_jacobian_inv(log_e);

  j_from.setZero();
  j_from.topLeftCorner<3, 3>() = -rz_t;
  j_from.topRightCorner<3, 3>() = rz_t * skew(a);
  j_from.bottomRightCorner<3, 3>() = -so3_left_jacobian_inv(log_e) * rz_t;
}

struct OptimizeResult {
  std::vector<PoseVertex> vertices;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> chi2_history;  // accepted steps, starting value first
};

namespace detail {

inline void check_graph(const std::vector<PoseVertex>& vertices,
                        const std::vector<PoseEdge>& edges) {
  if (vertices.empty()) throw std::invalid_argument("pose graph has no vertices");
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i].id != static_cast<int>(i)) {
      throw std::invalid_argument("vertex ids must be contiguous from 0");
    }
  }
  // Union-find connectivity with vertex 0.
  std::vector<int> parent(vertices.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  const auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : edges) {
    if (e.from_id == e.to_id) throw std::invalid_argument("edge connects a vertex to itself");
    if (e.from_id < 0 || e.to_id < 0 || e.from_id >= static_cast<int>(vertices.size()) ||
        e.to_id >= static_cast<int>(vertices.size())) {
      throw std::invalid_argument("edge references a missing vertex");
    }
    Eigen::LLT<Mat6> llt(e.information);
    if (llt.info() != Eigen::Success ||
        (e.information - e.information.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
      throw std::invalid_argument("edge information matrix is not symmetric positive-definite");
    }
    parent[find(e.from_id)] = find(e.to_id);
  }
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    if (find(static_cast<int>(i)) != find(0)) {
      throw std::invalid_argument("pose graph is disconnected");
    }
  }
}

inline double graph_chi2(const std::vector<PoseVertex>& vertices,
                         const std::vector<PoseEdge>& edges) {
  double chi2 = 0.0;
  for (const auto& e : edges) {
    const Vec6 r = edge_residual(e, vertices[e.from_id].pose, vertices[e.to_id].pose);
    chi2 += r.dot(e.information * r);
  }
  return chi2;
}

inline void apply_update(std::vector<PoseVertex>& vertices, const Eigen::VectorXd& delta) {
  for (std::size_t v = 1; v < vertices.size(); ++v) {
    const Eigen::Index off = 6 * static_cast<Eigen::Index>(v - 1);
    const Vec3 rho = delta.segment<3>(off);
    const Vec3 omega = delta.segment<3>(off + 3);
    RigidTransform& pose = vertices[v].pose;
    pose.t += pose.r * rho;
    pose.r = pose.r * so3_exp(omega);
  }
}

}  // namespace detail

// Dense Levenberg-Marquardt over all non-anchored vertices. chi2 is
// non-increasing across accepted steps; stops on relative chi2 change below
// tol or on max_iters.
inline OptimizeResult optimize(const std::vector<PoseVertex>& vertices,
                               const std::vector<PoseEdge>& edges, int max_iters = 50,
                               double tol = 1e-12) {
  detail::check_graph(vertices, edges);
  OptimizeResult result;
  result.vertices = vertices;
  result.chi2 = detail::graph_chi2(result.vertices, edges);
  result.chi2_history.push_back(result.chi2);
  const Eigen::Index dim = 6 * static_cast<Eigen::Index>(vertices.size() - 1);
  if (dim == 0) {
    result.converged = true;
    return result;
  }

  double lambda = 1e-8;
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    for (const auto& e : edges) {
      const Vec6 r = edge_residual(e, result.vertices[e.from_id].pose, result.vertices[e.to_id].pose);
      Mat6 j_from, j_to;
      edge_jacobians(e, result.vertices[e.from_id].pose, result.vertices[e.to_id].pose, j_from, j_to);
      const Eigen::Index oi = 6 * static_cast<Eigen::Index>(e.from_id - 1);
      const Eigen::Index oj = 6 * static_cast<Eigen::Index>(e.to_id - 1);
      if (e.from_id != 0) {
        h.block<6, 6>(oi, oi) += j_from.transpose() * e.information * j_from;
        b.segment<6>(oi) += j_from.transpose() * e.information * r;
      }
      if (e.to_id != 0) {
        h.block<6, 6>(oj, oj) += j_to.transpose() * e.information * j_to;
        b.segment<6>(oj) += j_to.transpose() * e.information * r;
      }
      if (e.from_id != 0 && e.to_id != 0) {
        h.block<6, 6>(oi, oj) += j_from.transpose() * e.information * j_to;
        h.block<6, 6>(oj, oi) += j_to.transpose() * e.information * j_from;
      }
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::MatrixXd h_lm = h;
      h_lm.diagonal().array() += lambda;
      const Eigen::VectorXd delta = h_lm.ldlt().solve(-b);
      auto trial = result.vertices;
      detail::apply_update(trial, delta);
      const double trial_chi2 = detail::graph_chi2(trial, edges);
      if (trial_chi2 <= result.chi2) {
        const double drop = result.chi2 - trial_chi2;
        result.vertices = std::move(trial);
        result.chi2 = trial_chi2;
        result.chi2_history.push_back(trial_chi2);
        ++result.iterations;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (drop <= tol * std::max(result.chi2, 1e-300)) {
          result.converged = true;
          return result;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      result.converged = true;  // no direction improves: local minimum
      return result;
    }
  }
  return result;
}

// Transforms each cloud by its vertex pose and concatenates. voxel > 0
// downsamples to per-voxel centroids (deterministic: voxels emitted in key
// order).
inline PointCloud apply_to_clouds(const std::vector<PoseVertex>& vertices,
                                  const std::vector<PointCloud>& clouds, double voxel = 0.0) {
  if (vertices.size() != clouds.size()) {
    throw std::invalid_argument("one cloud per vertex required");
  }
  PointCloud merged;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    for (const auto& p : clouds[i].points) {
      merged.points.push_back(vertices[i].pose.apply(p));
    }
  }
  if (voxel <= 0.0) return merged;

  struct Cell {
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
  };
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, Cell> cells;
  for (const auto& p : merged.points) {
    const auto key = std::make_tuple(static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                                     static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                                     static_cast<std::int64_t>(std::floor(p.z() / voxel)));
    auto& cell = cells[key];
    cell.sum += p;
    cell.count += 1;
  }
  PointCloud down;
  down.points.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    (void)key;
    down.points.push_back(cell.sum / static_cast<double>(cell.count));
  }
  return down;
}

// g2o-style text dump for cross-checking with external tools.
inline void write_g2o(const std::filesystem::path& path, const std::vector<PoseVertex>& vertices,
                      const std::vector<PoseEdge>& edges) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  f.precision(17);
  for (const auto& v : vertices) {
    const Eigen::Quaterniond q(v.pose.r);
    f << "VERTEX_SE3:QUAT " << v.id << " " << v.pose.t.x() << " " << v.pose.t.y() << " "
      << v.pose.t.z() << " " << q.x() << " " << q.y() << " " << q.z() << " " << q.w() << "\n";
  }
  for (const auto& e : edges) {
    const Eigen::Quaterniond q(e.measurement.r);
    f << "EDGE_SE3:QUAT " << e.from_id << " " << e.to_id << " " << e.measurement.t.x() << " "
      << e.measurement.t.y() << " " << e.measurement.t.z() << " " << q.x() << " " << q.y() << " "
      << q.z() << " " << q.w();
    for (int r = 0; r < 6; ++r) {
      for (int c = r; c < 6; ++c) f << " " << e.information(r, c);
    }
    f << "\n";
  }
}

}  // namespace slikit
