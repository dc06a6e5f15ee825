#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "slikit/geometry.hpp"

namespace slikit {

using Mat34 = Eigen::Matrix<double, 3, 4>;

// Calibrated camera-projector pair. The device frame is the projector frame;
// extrinsics map projector-frame points into the camera frame:
//   X_cam = extrinsic_rotation * X_proj + extrinsic_translation.
// The projector is modeled as a camera that only resolves the pattern row
// ordinate, so its intrinsics are proj_fy / proj_cy over proj_height rows.
struct SensorRig {
  double cam_fx = 0.0, cam_fy = 0.0;
  double cam_cx = 0.0, cam_cy = 0.0;
  int cam_width = 0, cam_height = 0;

  double proj_fy = 0.0;
  double proj_cy = 0.0;
  int proj_width = 0, proj_height = 0;

  Mat3 extrinsic_rotation = Mat3::Identity();
  Vec3 extrinsic_translation = Vec3::Zero();

  // Composed 3x4 camera projection matrix [K*R | K*t]; see compose_projection.
  Mat34 m = Mat34::Zero();

  Mat3 camera_intrinsics() const {
    Mat3 k;
    k << cam_fx, 0.0, cam_cx,
         0.0, cam_fy, cam_cy,
         0.0, 0.0, 1.0;
    return k;
  }

  // Camera center expressed in the device (projector) frame.
  Vec3 camera_center_in_device() const {
    return -(extrinsic_rotation.transpose() * extrinsic_translation);
  }

  void validate() const {
    if (cam_fx <= 0.0 || cam_fy <= 0.0 || proj_fy <= 0.0) {
      throw std::invalid_argument("calibration: focal lengths must be positive");
    }
    if (proj_height <= 0 || cam_width <= 0 || cam_height <= 0) {
      throw std::invalid_argument("calibration: image dimensions must be positive");
    }
    if (!is_rotation(extrinsic_rotation, 1e-9)) {
      throw std::invalid_argument(
          "calibration: extrinsic rotation is not orthonormal with det +1");
    }
    const Mat3 kr = camera_intrinsics() * extrinsic_rotation;
    if ((m.leftCols<3>() - kr).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument(
          "calibration: projection matrix inconsistent with K*R");
    }
  }
};

// M = [K*R_cp | K*t_cp]. With colocated frames (t_cp = 0) the fourth column
// vanishes and M reduces to the plain 3x3 form.
inline Mat34 compose_projection(const SensorRig& rig) {
  if (!is_rotation(rig.extrinsic_rotation, 1e-9)) {
    throw std::invalid_argument(
        "calibration: extrinsic rotation is not orthonormal with det +1");
  }
  const Mat3 k = rig.camera_intrinsics();
  Mat34 m;
  m.leftCols<3>() = k * rig.extrinsic_rotation;
  m.col(3) = k * rig.extrinsic_translation;
  return m;
}

// Convenience constructor that fills M and checks the invariants.
inline SensorRig make_rig(double cam_fx, double cam_fy, double cam_cx, double cam_cy,
                          int cam_width, int cam_height, double proj_fy, double proj_cy,
                          int proj_width, int proj_height,
                          const Mat3& extrinsic_rotation = Mat3::Identity(),
                          const Vec3& extrinsic_translation = Vec3::Zero()) {
  SensorRig rig;
  rig.cam_fx = cam_fx;
  rig.cam_fy = cam_fy;
  rig.cam_cx = cam_cx;
  rig.cam_cy = cam_cy;
  rig.cam_width = cam_width;
  rig.cam_height = cam_height;
  rig.proj_fy = proj_fy;
  rig.proj_cy = proj_cy;
  rig.proj_width = proj_width;
  rig.proj_height = proj_height;
  rig.extrinsic_rotation = extrinsic_rotation;
  rig.extrinsic_translation = extrinsic_translation;
  rig.m = compose_projection(rig);
  rig.validate();
  return rig;
}

}  // namespace slikit
