#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace propslam {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Minimal local coordinates of a rigid transform, ordered (vx, vy, vz, wx, wy, wz).
/// The first three are meters, the last three radians.
using Twist = Vec6;

/// Rotation plus translation. Maps a point p to rotation * p + translation.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static RigidTransform from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }
  /// Rotation about +z by `yaw` radians followed by translation `t`.
  static RigidTransform from_yaw(double yaw, const Vec3& t = Vec3::Zero());
  static RigidTransform from_quaternion(const Eigen::Quaterniond& q, const Vec3& t);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Eigen::Quaterniond quaternion() const;
  Eigen::Matrix4d matrix() const;

  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }

  /// max |RᵀR − I| entry.
  double orthonormality_defect() const;
  bool is_valid(double tol = 1e-9) const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Result applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& a);
/// inverse(x_u) ∘ x_t: pose of frame t expressed in frame u.
RigidTransform relative(const RigidTransform& x_u, const RigidTransform& x_t);
RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

/// Nearest rotation in the Frobenius sense (polar decomposition).
Mat3 orthonormalize(const Mat3& r);

RigidTransform twist_exp(const Twist& v);
/// Throws Error(kAngleSingularity) when the rotation angle is within 1e-7 rad of π.
Twist twist_log(const RigidTransform& a);

Mat3 skew(const Vec3& w);
Mat3 so3_exp(const Vec3& w);
Vec3 so3_log(const Mat3& r);
Mat3 so3_left_jacobian(const Vec3& w);
Mat3 so3_left_jacobian_inverse(const Vec3& w);

/// Adjoint in (v, w) ordering: twist_exp(adjoint(T) ξ) = T twist_exp(ξ) T⁻¹.
Mat6 adjoint(const RigidTransform& a);
Mat6 se3_left_jacobian(const Twist& xi);
Mat6 se3_left_jacobian_inverse(const Twist& xi);
Mat6 se3_right_jacobian_inverse(const Twist& xi);

double rotation_angle(const Mat3& r);

}  // namespace propslam
