#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slikit/dataset.hpp"
#include "slikit/parallel.hpp"
#include "slikit/pmp.hpp"
#include "slikit/rig.hpp"
#include "slikit/rng.hpp"
#include "slikit/scene.hpp"

namespace slikit {

// Desk-scale stand-in for a moving SLI rig: casts camera rays into an
// analytic scene, projects hits back into the pattern, and synthesizes
// either raw pattern images or the exact phase/cloud pair.

namespace detail {

struct PixelHit {
  bool on_pattern = false;  // hit, lit by the projector, ordinate in range
  double phi = 0.0;         // pattern phase at the hit
  Vec3 device_point = Vec3::Zero();
  int surface = -1;
};

// Shared per-pixel geometry for both render paths. device_pose maps device
// (projector) coordinates into the world frame.
inline PixelHit trace_pixel(const Scene& scene, const SensorRig& rig,
                            const RigidTransform& device_pose,
                            const RigidTransform& device_pose_inv, int row, int col) {
  PixelHit out;
  const Vec3 cam_center_dev = rig.camera_center_in_device();
  const Vec3 dir_dev = rig.extrinsic_rotation.transpose() *
                       Vec3((col - rig.cam_cx) / rig.cam_fx, (row - rig.cam_cy) / rig.cam_fy, 1.0);
  Ray ray;
  ray.origin = device_pose.apply(cam_center_dev);
  ray.dir = (device_pose.r * dir_dev).normalized();
  const auto hit = scene.intersect(ray);
  if (!hit) return out;
  const Vec3 device_point = device_pose_inv.apply(hit->point);
  if (device_point.z() <= 1e-9) return out;
  const double nu_p = rig.proj_fy * device_point.y() / device_point.z() + rig.proj_cy;
  if (nu_p < 0.0 || nu_p >= rig.proj_height) return out;
  // The projector sits at the device origin; the hit is lit only when the
  // segment back to it is clear.
  if (scene.occluded(hit->point, device_pose.t)) return out;
  out.on_pattern = true;
  out.phi = pattern_phase(nu_p, rig.proj_height);
  out.device_point = device_point;
  out.surface = hit->surface;
  return out;
}

}  // namespace detail

// Renders the N camera images of the projected patterns. Pixels that miss
// the scene, fall outside the pattern, or sit in projector shadow receive
// the ambient level only.
inline std::vector<RawImage> render_raw_patterns(const Scene& scene, const SensorRig& rig,
                                                 const RigidTransform& device_pose,
                                                 const PmpConfig& cfg) {
  cfg.validate();
  scene.validate();
  std::vector<RawImage> images(cfg.n_patterns, RawImage(rig.cam_width, rig.cam_height));
  const RigidTransform inv = device_pose.inverse();
  const std::size_t n_pixels = static_cast<std::size_t>(rig.cam_width) * rig.cam_height;
  parallel_chunks(0, n_pixels, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const int row = static_cast<int>(p) / rig.cam_width;
      const int col = static_cast<int>(p) % rig.cam_width;
      const auto px = detail::trace_pixel(scene, rig, device_pose, inv, row, col);
      if (!px.on_pattern) {
        for (auto& img : images) img.set(row, col, scene.ambient);
        continue;
      }
      const double albedo = scene.surfaces[px.surface].albedo;
      for (int n = 1; n <= cfg.n_patterns; ++n) {
        images[n - 1].set(row, col, scene.ambient + albedo * pattern_intensity(px.phi, n, cfg));
      }
    }
  });
  return images;
}

// Ground-truth oracle: the exact pattern phase and exact hit points, no PMP
// decoding involved. The cloud is expressed in the device frame of the pose.
inline std::pair<PhaseImage, PointCloud> render_phase_direct(const Scene& scene,
                                                             const SensorRig& rig,
                                                             const RigidTransform& device_pose) {
  scene.validate();
  PhaseImage phase(rig.cam_width, rig.cam_height);
  const RigidTransform inv = device_pose.inverse();
  const std::size_t n_pixels = static_cast<std::size_t>(rig.cam_width) * rig.cam_height;
  std::vector<detail::PixelHit> hits(n_pixels);
  parallel_chunks(0, n_pixels, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const int row = static_cast<int>(p) / rig.cam_width;
      const int col = static_cast<int>(p) % rig.cam_width;
      hits[p] = detail::trace_pixel(scene, rig, device_pose, inv, row, col);
    }
  });
  PointCloud cloud;
  for (std::size_t p = 0; p < n_pixels; ++p) {
    const int row = static_cast<int>(p) / rig.cam_width;
    const int col = static_cast<int>(p) % rig.cam_width;
    if (hits[p].on_pattern) {
      phase.set(row, col, hits[p].phi);
      cloud.add(hits[p].device_point, col, row);
    } else {
      phase.set_invalid(row, col);
    }
  }
  return {std::move(phase), std::move(cloud)};
}

// Trajectory generator: a closed-loop orbit around the world origin or a
// seeded random 6-DoF walk.
struct TrajectorySpec {
  enum class Kind { orbit, random_6dof };
  Kind kind = Kind::orbit;

  // orbit
  double radius_m = 1.2;
  double step_deg = 20.0;

  // random_6dof (per-step bounds)
  double translation_bound_m = 0.02;
  double rotation_bound_rad = deg_to_rad(2.0);
  std::uint64_t seed = 0;

  int count = 19;

  void validate() const {
    if (count < 2) throw std::invalid_argument("trajectory needs at least 2 poses");
    if (kind == Kind::orbit && step_deg * count > 360.0 + step_deg) {
      throw std::invalid_argument("orbit overshoots a full revolution");
    }
  }

  std::vector<RigidTransform> poses() const {
    validate();
    std::vector<RigidTransform> out;
    out.reserve(count);
    if (kind == Kind::orbit) {
      for (int k = 0; k < count; ++k) {
        const double theta = deg_to_rad(step_deg * k);
        Mat3 ry;
        ry << std::cos(theta), 0.0, std::sin(theta),
              0.0, 1.0, 0.0,
              -std::sin(theta), 0.0, std::cos(theta);
        out.emplace_back(ry, -radius_m * Vec3(std::sin(theta), 0.0, std::cos(theta)));
      }
    } else {
      Rng rng(seed);
      RigidTransform pose;  // identity start
      out.push_back(pose);
      for (int k = 1; k < count; ++k) {
        EulerPose step;
        step.dx = rng.uniform(-translation_bound_m, translation_bound_m);
        step.dy = rng.uniform(-translation_bound_m, translation_bound_m);
        step.dz = rng.uniform(-translation_bound_m, translation_bound_m);
        step.alpha = rng.uniform(-rotation_bound_rad, rotation_bound_rad);
        step.beta = rng.uniform(-rotation_bound_rad, rotation_bound_rad);
        step.gamma = rng.uniform(-rotation_bound_rad, rotation_bound_rad);
        pose = pose * RigidTransform::from_euler(step);
        out.push_back(pose);
      }
    }
    return out;
  }
};

// The motion that registers frame k's points into frame k+1's device frame:
// X_{k+1} = delta.apply(X_k) for any world-fixed point.
inline RigidTransform relative_motion(const RigidTransform& pose_k,
                                      const RigidTransform& pose_k1) {
  return pose_k1.inverse() * pose_k;
}

// Renders one frame per trajectory pose through the full PMP path (pattern
// render, decode, triangulate) and keeps the exact pose as ground truth.
// Saves to out_path unless it is empty.
inline Dataset generate_dataset(const Scene& scene, const SensorRig& rig,
                                const TrajectorySpec& traj, const PmpConfig& cfg,
                                const std::filesystem::path& out_path = {}) {
  traj.validate();
  Dataset ds;
  ds.rig = rig;
  for (const auto& pose : traj.poses()) {
    Frame frame;
    frame.phase = decode_phase(render_raw_patterns(scene, rig, pose, cfg), cfg);
    frame.cloud = triangulate(frame.phase, rig);
    frame.gt_pose = pose;
    ds.frames.push_back(std::move(frame));
  }
  if (!out_path.empty()) {
    io::save_dataset(ds, out_path);
  }
  return ds;
}

// Multiplicative per-component perturbation: component *= (1 + u*fraction),
// u uniform in [-1, 1]. A zero pose stays zero for any fraction.
inline EulerPose perturb_pose(const EulerPose& gt, double fraction, std::uint64_t seed) {
  if (fraction < 0.0) throw std::invalid_argument("perturbation fraction must be >= 0");
  Rng rng(seed);
  Vec6 v = gt.to_vector();
  for (int i = 0; i < 6; ++i) {
    v[i] *= 1.0 + rng.uniform(-1.0, 1.0) * fraction;
  }
  return EulerPose::from_vector(v);
}

}  // namespace slikit
