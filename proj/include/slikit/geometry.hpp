#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

namespace slikit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

// 6-DoF motion state: translation in meters, Z-Y-X intrinsic Euler angles in
// radians. The rotation realization is R = Rz(gamma) * Ry(beta) * Rx(alpha).
struct EulerPose {
  double dx = 0.0, dy = 0.0, dz = 0.0;
  double alpha = 0.0, beta = 0.0, gamma = 0.0;

  EulerPose() = default;
  EulerPose(double tx, double ty, double tz, double a, double b, double g)
      : dx(tx), dy(ty), dz(tz), alpha(a), beta(b), gamma(g) {}

  static EulerPose from_vector(const Vec6& v) {
    return EulerPose(v[0], v[1], v[2], v[3], v[4], v[5]);
  }
  Vec6 to_vector() const {
    Vec6 v;
    v << dx, dy, dz, alpha, beta, gamma;
    return v;
  }

  Mat3 rotation() const {
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double cg = std::cos(gamma), sg = std::sin(gamma);
    Mat3 r;
    r << cg * cb, cg * sb * sa - sg * ca, cg * sb * ca + sg * sa,
         sg * cb, sg * sb * sa + cg * ca, sg * sb * ca - cg * sa,
         -sb,     cb * sa,                cb * ca;
    return r;
  }
  Vec3 translation() const { return Vec3(dx, dy, dz); }

  bool is_zero(double tol = 0.0) const {
    return to_vector().cwiseAbs().maxCoeff() <= tol;
  }
};

inline void euler_to_matrix(const EulerPose& p, Mat3& r, Vec3& t) {
  r = p.rotation();
  t = p.translation();
}

// Inverse of euler_to_matrix. Valid away from the gimbal lock at |beta| =
// pi/2; angles come back in (-pi, pi].
inline EulerPose euler_from_matrix(const Mat3& r, const Vec3& t) {
  const double sb = std::clamp(-r(2, 0), -1.0, 1.0);
  EulerPose p;
  p.beta = std::asin(sb);
  p.alpha = std::atan2(r(2, 1), r(2, 2));
  p.gamma = std::atan2(r(1, 0), r(0, 0));
  p.dx = t.x();
  p.dy = t.y();
  p.dz = t.z();
  return p;
}

// Rigid transform (rotation + translation), the boundary representation for
// absolute poses and pose-graph measurements.
struct RigidTransform {
  Mat3 r = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  RigidTransform() = default;
  RigidTransform(const Mat3& rot, const Vec3& trans) : r(rot), t(trans) {}

  static RigidTransform identity() { return RigidTransform(); }
  static RigidTransform from_euler(const EulerPose& p) {
    return RigidTransform(p.rotation(), p.translation());
  }

  Vec3 apply(const Vec3& p) const { return r * p + t; }

  RigidTransform inverse() const {
    return RigidTransform(r.transpose(), -(r.transpose() * t));
  }

  // this * other: apply other first, then this.
  RigidTransform operator*(const RigidTransform& other) const {
    return RigidTransform(r * other.r, r * other.t + t);
  }

  bool is_approx(const RigidTransform& other, double tol) const {
    return (r - other.r).cwiseAbs().maxCoeff() <= tol &&
           (t - other.t).cwiseAbs().maxCoeff() <= tol;
  }
};

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

// SO(3) exponential (Rodrigues).
inline Mat3 so3_exp(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 wx = skew(w);
  if (theta < 1e-10) {
    return Mat3::Identity() + wx + 0.5 * wx * wx;
  }
  const double s = std::sin(theta) / theta;
  const double c = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + s * wx + c * wx * wx;
}

// SO(3) logarithm; returns the rotation vector with angle in [0, pi].
// Quaternion extraction keeps the axis well-conditioned near both 0 and pi.
inline Vec3 so3_log(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double vn = v.norm();
  if (vn < 1e-12) {
    return 2.0 * v;  // first-order for tiny angles
  }
  const double theta = 2.0 * std::atan2(vn, q.w());
  return (theta / vn) * v;
}

// Inverse of the SO(3) right Jacobian at rotation vector w. Satisfies
// d/dx log(Exp(w) Exp(x))|_{x=0} = Jr_inv(w).
inline Mat3 so3_right_jacobian_inv(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 wx = skew(w);
  double c;
  if (theta < 1e-5) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    c = 1.0 / (theta * theta) -
        (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Mat3::Identity() + 0.5 * wx + c * wx * wx;
}

// Inverse of the SO(3) left Jacobian: Jl_inv(w) = Jr_inv(-w) = Jr_inv(w)^T.
inline Mat3 so3_left_jacobian_inv(const Vec3& w) {
  return so3_right_jacobian_inv(w).transpose();
}

// Rotation angle of R in radians, in [0, pi]. Goes through the quaternion
// log, which stays accurate near zero where acos of the trace cannot.
inline double rotation_angle(const Mat3& r) { return so3_log(r).norm(); }

inline bool is_rotation(const Mat3& r, double tol) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         r.determinant() > 0.0;
}

}  // namespace slikit
