#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "slikit/cloud.hpp"
#include "slikit/image.hpp"
#include "slikit/parallel.hpp"
#include "slikit/rig.hpp"

namespace slikit {

// Frame-to-frame 6-DoF motion estimation by phase registration: 3D points
// measured at pose k are reprojected under a candidate motion, their pattern
// phase is predicted from the projector model and compared against the
// measured phase image of pose k+1, and the squared phase residual is
// minimized over the motion.

struct OdometryConfig {
  enum class Solver { steepest_descent, gauss_newton };
  enum class JacobianMode { analytic, finite_difference };

  int max_iters = 100;
  double step_init = 1.0;      // multiplier on the curvature-derived descent step
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  double tol_step = 1e-10;     // stop when the accepted step norm drops below
  double tol_cost = 1e-12;     // stop on relative cost change below
  std::optional<Roi> roi;      // auto-derived when unset
  Solver solver = Solver::gauss_newton;
  JacobianMode jacobian = JacobianMode::analytic;

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (tol_step <= 0.0 || tol_cost <= 0.0) throw std::invalid_argument("tolerances must be positive");
    if (armijo_c <= 0.0 || armijo_c >= 1.0) throw std::invalid_argument("armijo_c outside (0,1)");
    if (armijo_shrink <= 0.0 || armijo_shrink >= 1.0) {
      throw std::invalid_argument("armijo_shrink outside (0,1)");
    }
  }
};

enum class PointStatus {
  ok,
  behind_projector,   // transformed depth z' <= 0
  off_pattern,        // predicted phase outside [0, 2*pi)
  behind_camera,      // projection denominator s <= 0
  outside_roi,
  invalid_sample,     // out of image bounds or masked neighbors
};

// Everything the analytic Jacobian row needs, captured while evaluating the
// residual of one point.
struct JacobianTerms {
  double g_x = 0.0, g_y = 0.0;       // phase-image gradients at (mu, nu)
  double big_k = 0.0;                // H^p / (2*pi)
  double s = 0.0;                    // projection denominator (third row of M)
  double mu_c[3] = {0, 0, 0};        // m_1j - m_3j * mu
  double nu_c[3] = {0, 0, 0};        // m_2j - m_3j * nu
  double j_x[3] = {0, 0, 0};         // d x' / d(alpha, beta, gamma)
  double j_y[3] = {0, 0, 0};
  double j_z[3] = {0, 0, 0};
  double j_mu[3] = {0, 0, 0};        // d mu / d(alpha, beta, gamma)
  double j_nu[3] = {0, 0, 0};
  double y_prime = 0.0, z_prime = 0.0;
  double f_p = 0.0;                  // projector focal length (row direction)
};

struct ResidualEval {
  PointStatus status = PointStatus::invalid_sample;
  double e = 0.0;          // predicted - measured, radians
  double mu = 0.0, nu = 0.0;
  JacobianTerms terms;
  bool ok() const { return status == PointStatus::ok; }
};

inline Vec3 transform_point(const Vec3& p, const EulerPose& pose) {
  return pose.rotation() * p + pose.translation();
}

// Dehomogenized pixel of a device-frame point under the composed 3x4 matrix.
inline std::optional<Eigen::Vector2d> project_to_camera(const Vec3& p_prime,
                                                        const SensorRig& rig) {
  const double s = rig.m(2, 0) * p_prime.x() + rig.m(2, 1) * p_prime.y() +
                   rig.m(2, 2) * p_prime.z() + rig.m(2, 3);
  if (s <= 1e-9) return std::nullopt;
  const double mu = (rig.m(0, 0) * p_prime.x() + rig.m(0, 1) * p_prime.y() +
                     rig.m(0, 2) * p_prime.z() + rig.m(0, 3)) / s;
  const double nu = (rig.m(1, 0) * p_prime.x() + rig.m(1, 1) * p_prime.y() +
                     rig.m(1, 2) * p_prime.z() + rig.m(1, 3)) / s;
  return Eigen::Vector2d(mu, nu);
}

struct PhasePrediction {
  PointStatus status = PointStatus::ok;
  double phi = 0.0;
};

// Predicted pattern phase of point p after motion: the transformed point's
// projector row ordinate mapped onto the 0..2*pi ramp.
inline PhasePrediction predict_phase(const Vec3& p, const EulerPose& pose,
                                     const SensorRig& rig) {
  PhasePrediction out;
  const Vec3 pp = transform_point(p, pose);
  if (pp.z() <= 1e-9) {
    out.status = PointStatus::behind_projector;
    return out;
  }
  const double nu_p = rig.proj_fy * pp.y() / pp.z() + rig.proj_cy;
  out.phi = kTwoPi * nu_p / rig.proj_height;
  if (out.phi < 0.0 || out.phi >= kTwoPi) {
    out.status = PointStatus::off_pattern;
  }
  return out;
}

// Residual of one source point against the target phase image, plus the
// Jacobian intermediates. Points are dropped (not wrapped) when the predicted
// phase leaves the pattern: wrapping would fake a residual across the fringe
// discontinuity.
inline ResidualEval residual(const Vec3& p, const EulerPose& pose, const SensorRig& rig,
                             const PhaseImage& target, const Roi* roi = nullptr) {
  ResidualEval out;
  const Mat3 r = pose.rotation();
  const Vec3 t = pose.translation();
  const Vec3 pp = r * p + t;
  if (pp.z() <= 1e-9) {
    out.status = PointStatus::behind_projector;
    return out;
  }
  const double big_k = rig.proj_height / kTwoPi;
  const double phi_hat = (rig.proj_fy * pp.y() / pp.z() + rig.proj_cy) / big_k;
  if (phi_hat < 0.0 || phi_hat >= kTwoPi) {
    out.status = PointStatus::off_pattern;
    return out;
  }
  const double s = rig.m(2, 0) * pp.x() + rig.m(2, 1) * pp.y() + rig.m(2, 2) * pp.z() + rig.m(2, 3);
  if (s <= 1e-9) {
    out.status = PointStatus::behind_camera;
    return out;
  }
  const double mu = (rig.m(0, 0) * pp.x() + rig.m(0, 1) * pp.y() + rig.m(0, 2) * pp.z() + rig.m(0, 3)) / s;
  const double nu = (rig.m(1, 0) * pp.x() + rig.m(1, 1) * pp.y() + rig.m(1, 2) * pp.z() + rig.m(1, 3)) / s;
  if (roi && !roi->contains(mu, nu)) {
    out.status = PointStatus::outside_roi;
    return out;
  }
  const PhaseSample sample = sample_phase(target, mu, nu);
  if (!sample.valid) {
    out.status = PointStatus::invalid_sample;
    return out;
  }

  out.status = PointStatus::ok;
  out.e = phi_hat - sample.value;
  out.mu = mu;
  out.nu = nu;

  JacobianTerms& jt = out.terms;
  jt.g_x = sample.gx;
  jt.g_y = sample.gy;
  jt.big_k = big_k;
  jt.s = s;
  jt.y_prime = pp.y();
  jt.z_prime = pp.z();
  jt.f_p = rig.proj_fy;
  for (int j = 0; j < 3; ++j) {
    jt.mu_c[j] = rig.m(0, j) - rig.m(2, j) * mu;
    jt.nu_c[j] = rig.m(1, j) - rig.m(2, j) * nu;
  }

  // d(R*p)/d(angle) under R = Rz(gamma) * Ry(beta) * Rx(alpha).
  const double ca = std::cos(pose.alpha), sa = std::sin(pose.alpha);
  const double cb = std::cos(pose.beta), sb = std::sin(pose.beta);
  const double cg = std::cos(pose.gamma), sg = std::sin(pose.gamma);
  // alpha: dR/da * p collapses to pairs of R columns.
  jt.j_x[0] = r(0, 2) * p.y() - r(0, 1) * p.z();
  jt.j_y[0] = r(1, 2) * p.y() - r(1, 1) * p.z();
  jt.j_z[0] = r(2, 2) * p.y() - r(2, 1) * p.z();
  // beta.
  const double common = -p.x() * sb + p.y() * cb * sa + p.z() * cb * ca;
  jt.j_x[1] = cg * common;
  jt.j_y[1] = sg * common;
  jt.j_z[1] = -p.x() * cb - p.y() * sb * sa - p.z() * sb * ca;
  // gamma: rotation of the already-rotated point about z.
  jt.j_x[2] = t.y() - pp.y();
  jt.j_y[2] = pp.x() - t.x();
  jt.j_z[2] = 0.0;

  for (int a = 0; a < 3; ++a) {
    jt.j_mu[a] = (jt.mu_c[0] * jt.j_x[a] + jt.mu_c[1] * jt.j_y[a] + jt.mu_c[2] * jt.j_z[a]) / s;
    jt.j_nu[a] = (jt.nu_c[0] * jt.j_x[a] + jt.nu_c[1] * jt.j_y[a] + jt.nu_c[2] * jt.j_z[a]) / s;
  }
  return out;
}

// The six partials of the phase residual with respect to the motion vector
// (dx, dy, dz, alpha, beta, gamma).
inline Vec6 jacobian_row(const JacobianTerms& t) {
  Vec6 j;
  const double kz = t.big_k * t.z_prime;
  const double kz2 = t.big_k * t.z_prime * t.z_prime;
  j[0] = -(t.g_x * t.mu_c[0] + t.g_y * t.nu_c[0]) / t.s;
  j[1] = t.f_p / kz - (t.g_x * t.mu_c[1] + t.g_y * t.nu_c[1]) / t.s;
  j[2] = -t.f_p * t.y_prime / kz2 - (t.g_x * t.mu_c[2] + t.g_y * t.nu_c[2]) / t.s;
  for (int a = 0; a < 3; ++a) {
    j[3 + a] = t.f_p * (t.j_y[a] * t.z_prime - t.j_z[a] * t.y_prime) / kz2 -
               (t.g_x * t.j_mu[a] + t.g_y * t.j_nu[a]);
  }
  return j;
}

struct OdometryDiagnostics {
  std::size_t behind_projector = 0;
  std::size_t off_pattern = 0;
  std::size_t behind_camera = 0;
  std::size_t outside_roi = 0;
  std::size_t invalid_sample = 0;
  std::size_t used = 0;
};

struct OdometryResult {
  EulerPose delta_x;
  double final_cost = 0.0;            // 0.5 * mean squared residual, radians^2
  int iterations = 0;                 // accepted iterations
  std::size_t residual_count = 0;
  bool converged = false;
  std::vector<double> per_iteration_cost;
  OdometryDiagnostics diagnostics;
  std::string stop_reason;
};

namespace detail {

struct Accum {
  double cost = 0.0;        // sum of e^2
  Vec6 jte = Vec6::Zero();  // sum of e_i * J_i
  Mat6 jtj = Mat6::Zero();
  std::size_t count = 0;
  OdometryDiagnostics diag;
};

// Evaluates cost (and optionally the gradient terms) over the cloud. Blocks
// of fixed size are reduced in index order so the sums do not depend on the
// thread count.
inline Accum evaluate(const PointCloud& cloud, const PhaseImage& target, const SensorRig& rig,
                      const Vec6& pose_vec, const Roi& roi, bool with_jacobian,
                      OdometryConfig::JacobianMode mode) {
  const EulerPose pose = EulerPose::from_vector(pose_vec);
  constexpr std::size_t kBlock = 8192;
  const std::size_t n = cloud.size();
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
  std::vector<Accum> partial(n_blocks);

  parallel_chunks(0, n_blocks, [&](std::size_t blk_lo, std::size_t blk_hi) {
    for (std::size_t b = blk_lo; b < blk_hi; ++b) {
      Accum& acc = partial[b];
      const std::size_t lo = b * kBlock;
      const std::size_t hi = std::min(n, lo + kBlock);
      for (std::size_t i = lo; i < hi; ++i) {
        const ResidualEval ev = residual(cloud.points[i], pose, rig, target, &roi);
        switch (ev.status) {
          case PointStatus::behind_projector: ++acc.diag.behind_projector; continue;
          case PointStatus::off_pattern: ++acc.diag.off_pattern; continue;
          case PointStatus::behind_camera: ++acc.diag.behind_camera; continue;
          case PointStatus::outside_roi: ++acc.diag.outside_roi; continue;
          case PointStatus::invalid_sample: ++acc.diag.invalid_sample; continue;
          case PointStatus::ok: break;
        }
        acc.cost += ev.e * ev.e;
        ++acc.count;
        ++acc.diag.used;
        if (!with_jacobian) continue;
        Vec6 row;
        if (mode == OdometryConfig::JacobianMode::analytic) {
          row = jacobian_row(ev.terms);
        } else {
          // Central differences of the full residual, h = 1e-6 per component.
          const double h = 1e-6;
          row.setZero();
          bool ok = true;
          for (int k = 0; k < 6 && ok; ++k) {
            Vec6 vp = pose_vec, vm = pose_vec;
            vp[k] += h;
            vm[k] -= h;
            const ResidualEval ep = residual(cloud.points[i], EulerPose::from_vector(vp), rig, target, &roi);
            const ResidualEval em = residual(cloud.points[i], EulerPose::from_vector(vm), rig, target, &roi);
            if (!ep.ok() || !em.ok()) {
              ok = false;
              break;
            }
            row[k] = (ep.e - em.e) / (2.0 * h);
          }
          if (!ok) continue;
        }
        acc.jte += ev.e * row;
        acc.jtj += row * row.transpose();
      }
    }
  });

  Accum total;
  for (const auto& acc : partial) {
    total.cost += acc.cost;
    total.jte += acc.jte;
    total.jtj += acc.jtj;
    total.count += acc.count;
    total.diag.behind_projector += acc.diag.behind_projector;
    total.diag.off_pattern += acc.diag.off_pattern;
    total.diag.behind_camera += acc.diag.behind_camera;
    total.diag.outside_roi += acc.diag.outside_roi;
    total.diag.invalid_sample += acc.diag.invalid_sample;
    total.diag.used += acc.diag.used;
  }
  return total;
}

}  // namespace detail

// Axis-aligned bounding box of the init-pose reprojections of the cloud's
// valid points, shrunk 5% per side and clamped to the image.
inline Roi auto_roi(const PointCloud& cloud, const PhaseImage& target, const SensorRig& rig,
                    const EulerPose& init) {
  double u0 = 1e300, u1 = -1e300, v0 = 1e300, v1 = -1e300;
  std::size_t seen = 0;
  for (const auto& p : cloud.points) {
    const ResidualEval ev = residual(p, init, rig, target);
    if (!ev.ok()) continue;
    u0 = std::min(u0, ev.mu);
    u1 = std::max(u1, ev.mu);
    v0 = std::min(v0, ev.nu);
    v1 = std::max(v1, ev.nu);
    ++seen;
  }
  if (seen < 100) {
    throw std::runtime_error("odometry: fewer than 100 residual-valid points at the initial pose");
  }
  const double du = 0.05 * (u1 - u0);
  const double dv = 0.05 * (v1 - v0);
  Roi roi(static_cast<int>(std::floor(u0 + du)), static_cast<int>(std::ceil(u1 - du)),
          static_cast<int>(std::floor(v0 + dv)), static_cast<int>(std::ceil(v1 - dv)));
  roi.u_min = std::max(roi.u_min, 0);
  roi.v_min = std::max(roi.v_min, 0);
  roi.u_max = std::min(roi.u_max, target.width);
  roi.v_max = std::min(roi.v_max, target.height);
  roi.validate(target.width, target.height);
  return roi;
}

// Minimizes the summed squared phase residual over the motion. Steepest
// descent follows the accumulated gradient with Armijo backtracking;
// Gauss-Newton solves the normal equations and backtracks on the same rule.
// Cost values are 0.5 * mean(e^2) so that points drifting in or out of
// validity do not masquerade as cost changes.
inline OdometryResult estimate_motion(const PointCloud& source_cloud, const PhaseImage& target_phase,
                                      const SensorRig& rig, const EulerPose& init,
                                      const OdometryConfig& cfg) {
  cfg.validate();
  Roi roi = cfg.roi ? *cfg.roi : auto_roi(source_cloud, target_phase, rig, init);
  roi.validate(target_phase.width, target_phase.height);

  const auto cost_of = [](const detail::Accum& a) {
    return a.count > 0 ? 0.5 * a.cost / static_cast<double>(a.count) : 0.0;
  };

  OdometryResult result;
  Vec6 cur = init.to_vector();
  detail::Accum acc = detail::evaluate(source_cloud, target_phase, rig, cur, roi, true, cfg.jacobian);
  if (acc.count < 100) {
    throw std::runtime_error("odometry: fewer than 100 residual-valid points in the ROI");
  }
  double cur_cost = cost_of(acc);
  result.per_iteration_cost.push_back(cur_cost);

  double sd_step = cfg.step_init;
  std::string stop = "max_iters";
  bool converged = false;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const double inv_n = 1.0 / static_cast<double>(acc.count);
    const Vec6 grad = acc.jte * inv_n;

    Vec6 dir;
    double alpha0;
    if (cfg.solver == OdometryConfig::Solver::gauss_newton) {
      Mat6 h = acc.jtj * inv_n;
      h.diagonal().array() += 1e-14;
      dir = h.ldlt().solve(-grad);
      alpha0 = 1.0;
    } else {
      // Cauchy step: the curvature of the local quadratic model along the
      // gradient sets the step scale the paper leaves to lambda.
      dir = -grad;
      const double curvature = grad.dot((acc.jtj * inv_n) * grad);
      alpha0 = curvature > 0.0 ? cfg.step_init * grad.squaredNorm() / curvature : sd_step;
    }
    const double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      stop = grad.norm() < 1e-15 ? "gradient_zero" : "non_descent_direction";
      converged = grad.norm() < 1e-15;
      break;
    }

    double alpha = alpha0;
    bool accepted = false;
    detail::Accum trial_acc;
    double trial_cost = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec6 trial = cur + alpha * dir;
      trial_acc = detail::evaluate(source_cloud, target_phase, rig, trial, roi, true, cfg.jacobian);
      if (trial_acc.count >= 100) {
        trial_cost = cost_of(trial_acc);
        if (trial_cost <= cur_cost + cfg.armijo_c * alpha * slope) {
          accepted = true;
          break;
        }
      }
      alpha *= cfg.armijo_shrink;
    }
    if (!accepted) {
      stop = "line_search_failed";
      break;
    }

    const double step_norm = alpha * dir.norm();
    const double prev_cost = cur_cost;
    cur += alpha * dir;
    cur_cost = trial_cost;
    acc = trial_acc;
    ++result.iterations;
    result.per_iteration_cost.push_back(cur_cost);
    if (cfg.solver == OdometryConfig::Solver::steepest_descent) {
      sd_step = alpha / cfg.armijo_shrink;  // carry the accepted scale, one growth
    }

    if (step_norm < cfg.tol_step) {
      stop = "tol_step";
      converged = true;
      break;
    }
    if (std::abs(prev_cost - cur_cost) < cfg.tol_cost * std::max(prev_cost, 1e-300)) {
      stop = "tol_cost";
      converged = true;
      break;
    }
  }

  result.delta_x = EulerPose::from_vector(cur);
  result.final_cost = cur_cost;
  result.residual_count = acc.count;
  result.converged = converged;
  result.diagnostics = acc.diag;
  result.stop_reason = stop;
  return result;
}

}  // namespace slikit
