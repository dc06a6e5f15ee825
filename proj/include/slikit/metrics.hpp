#pragma once

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "slikit/cloud.hpp"
#include "slikit/geometry.hpp"
#include "slikit/spatial.hpp"

namespace slikit {

struct TrajectoryError {
  double ate_rmse = 0.0;                  // meters, after rigid alignment
  std::vector<double> rpe_translation;    // per-step meters
  std::vector<double> rpe_rotation;       // per-step degrees
  double rpe_translation_median = 0.0;
  double rpe_rotation_median = 0.0;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

}  // namespace detail

// Closed-form least-squares rigid alignment (no scale): minimizes
// sum ||R*p_i + t - q_i||^2 via SVD of the cross-covariance. With
// translation_fallback, a rank-deficient covariance (coincident or collinear
// points) degrades to centroid matching instead of throwing.
inline RigidTransform align_rigid(const std::vector<Vec3>& p, const std::vector<Vec3>& q,
                                  bool translation_fallback = false) {
  if (p.size() != q.size() || p.size() < 3) {
    throw std::invalid_argument("rigid alignment needs >= 3 paired points");
  }
  Vec3 cp = Vec3::Zero(), cq = Vec3::Zero();
  for (std::size_t i = 0; i < p.size(); ++i) {
    cp += p[i];
    cq += q[i];
  }
  cp /= static_cast<double>(p.size());
  cq /= static_cast<double>(q.size());
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < p.size(); ++i) {
    h += (p[i] - cp) * (q[i] - cq).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(1) < 1e-12 * std::max(svd.singularValues()(0), 1e-300)) {
    if (!translation_fallback) {
      throw std::invalid_argument("rigid alignment: rank-deficient covariance");
    }
    return RigidTransform(Mat3::Identity(), cq - cp);
  }
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return RigidTransform(r, cq - r * cp);
}

// RMSE of translational residuals after rigidly aligning the estimate onto
// the ground truth.
inline double ate_rmse(const std::vector<RigidTransform>& estimated,
                       const std::vector<RigidTransform>& ground_truth) {
  if (estimated.size() != ground_truth.size()) {
    throw std::invalid_argument("trajectory lengths differ");
  }
  if (estimated.size() < 3) throw std::invalid_argument("ATE needs at least 3 poses");
  std::vector<Vec3> p, q;
  p.reserve(estimated.size());
  q.reserve(estimated.size());
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    p.push_back(estimated[i].t);
    q.push_back(ground_truth[i].t);
  }
  const RigidTransform a = align_rigid(p, q, /*translation_fallback=*/true);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sum += (a.apply(p[i]) - q[i]).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(p.size()));
}

// Per-step relative pose error at step size delta:
// E_k = (Q_k^-1 Q_{k+d})^-1 (P_k^-1 P_{k+d}).
inline TrajectoryError rpe(const std::vector<RigidTransform>& estimated,
                           const std::vector<RigidTransform>& ground_truth, std::size_t delta = 1) {
  if (estimated.size() != ground_truth.size()) {
    throw std::invalid_argument("trajectory lengths differ");
  }
  if (estimated.size() < delta + 1) throw std::invalid_argument("trajectory shorter than delta");
  TrajectoryError out;
  for (std::size_t k = 0; k + delta < estimated.size(); ++k) {
    const RigidTransform gt_rel = ground_truth[k].inverse() * ground_truth[k + delta];
    const RigidTransform est_rel = estimated[k].inverse() * estimated[k + delta];
    const RigidTransform err = gt_rel.inverse() * est_rel;
    out.rpe_translation.push_back(err.t.norm());
    out.rpe_rotation.push_back(rad_to_deg(rotation_angle(err.r)));
  }
  out.rpe_translation_median = detail::median(out.rpe_translation);
  out.rpe_rotation_median = detail::median(out.rpe_rotation);
  return out;
}

inline double hausdorff(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("Hausdorff needs nonempty clouds");
  const KdTree3 tree_a(a.points);
  const KdTree3 tree_b(b.points);
  double h = 0.0;
  for (const auto& p : a.points) h = std::max(h, tree_b.nearest(p).sq_dist);
  for (const auto& p : b.points) h = std::max(h, tree_a.nearest(p).sq_dist);
  return std::sqrt(h);
}

// All-pairs oracle for the KD-tree path.
inline double hausdorff_brute(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("Hausdorff needs nonempty clouds");
  const auto one_sided = [](const PointCloud& from, const PointCloud& to) {
    double h = 0.0;
    for (const auto& p : from.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to.points) best = std::min(best, (p - q).squaredNorm());
      h = std::max(h, best);
    }
    return h;
  };
  return std::sqrt(std::max(one_sided(a, b), one_sided(b, a)));
}

struct IcpResult {
  EulerPose motion;
  double rms = 0.0;
  int iterations = 0;
  std::vector<double> per_iteration_rms;
};

// Classic point-to-point ICP: nearest-neighbor correspondences alternated
// with the closed-form rigid solve, no correspondence rejection.
inline IcpResult icp_point_to_point(const PointCloud& source, const PointCloud& target,
                                    int max_iters = 30, const EulerPose& init = EulerPose()) {
  if (source.size() < 3 || target.size() < 3) {
    throw std::invalid_argument("ICP needs at least 3 points per cloud");
  }
  const KdTree3 tree(target.points);
  RigidTransform t = RigidTransform::from_euler(init);
  IcpResult result;
  for (int iter = 0; iter < max_iters; ++iter) {
    std::vector<Vec3> matched(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
      matched[i] = target.points[tree.nearest(t.apply(source.points[i])).index];
    }
    t = align_rigid(source.points, matched);
    double sum = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      sum += (t.apply(source.points[i]) - matched[i]).squaredNorm();
    }
    result.rms = std::sqrt(sum / static_cast<double>(source.size()));
    result.per_iteration_rms.push_back(result.rms);
    ++result.iterations;
  }
  result.motion = euler_from_matrix(t.r, t.t);
  return result;
}

// Median wall-clock seconds over repeated runs; one warm-up run excluded.
template <typename Fn>
double timing_harness(Fn&& fn, int repetitions) {
  if (repetitions < 3) throw std::invalid_argument("timing needs at least 3 repetitions");
  fn();  // warm-up
  std::vector<double> seconds;
  seconds.reserve(repetitions);
  for (int i = 0; i < repetitions; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto end = std::chrono::steady_clock::now();
    seconds.push_back(std::chrono::duration<double>(end - start).count());
  }
  return detail::median(seconds);
}

}  // namespace slikit
