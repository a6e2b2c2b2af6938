#include "propslam/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <numbers>

#include "propslam/error.hpp"

namespace propslam {
namespace {

constexpr double kOrthonormalityDrift = 1e-12;
constexpr double kSingularityMargin = 1e-7;

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

}  // namespace

RigidTransform RigidTransform::from_yaw(double yaw, const Vec3& t) {
  return {Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix(), t};
}

RigidTransform RigidTransform::from_quaternion(const Eigen::Quaterniond& q, const Vec3& t) {
  return {q.normalized().toRotationMatrix(), t};
}

Eigen::Quaterniond RigidTransform::quaternion() const {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  // Canonical hemisphere keeps serialized output stable.
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double RigidTransform::orthonormality_defect() const {
  return (rotation_.transpose() * rotation_ - Mat3::Identity()).cwiseAbs().maxCoeff();
}

bool RigidTransform::is_valid(double tol) const {
  return rotation_.allFinite() && translation_.allFinite() && orthonormality_defect() < tol &&
         std::abs(rotation_.determinant() - 1.0) < tol;
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  Mat3 r = a.rotation() * b.rotation();
  Vec3 t = a.rotation() * b.translation() + a.translation();
  RigidTransform out(r, t);
  if (out.orthonormality_defect() > kOrthonormalityDrift) {
    out = RigidTransform(orthonormalize(r), t);
  }
  return out;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) { return compose(a, b); }

RigidTransform inverse(const RigidTransform& a) {
  Mat3 rt = a.rotation().transpose();
  return {rt, -(rt * a.translation())};
}

RigidTransform relative(const RigidTransform& x_u, const RigidTransform& x_t) {
  return compose(inverse(x_u), x_t);
}

Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return s;
}

double rotation_angle(const Mat3& r) {
  double s = vee(r - r.transpose()).norm() * 0.5;
  double c = (r.trace() - 1.0) * 0.5;
  return std::atan2(s, c);
}

Mat3 so3_exp(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 k = skew(w);
  double a;
  double b;
  if (theta2 < 1e-12) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 so3_log(const Mat3& r) {
  const Vec3 s = vee(r - r.transpose()) * 0.5;  // sin(theta) * axis
  const double c = (r.trace() - 1.0) * 0.5;
  const double sin_theta = s.norm();
  const double theta = std::atan2(sin_theta, c);
  if (std::numbers::pi - theta < kSingularityMargin) {
    throw Error(ErrorCode::kAngleSingularity, "twist_log: angle at parameterization singularity");
  }
  if (theta < 1e-6) {
    return s * (1.0 + theta * theta / 6.0);
  }
  if (theta < 2.5) {
    return s * (theta / sin_theta);
  }
  // Near π the antisymmetric part loses precision; recover the axis from the
  // symmetric part (1 - cos θ) k kᵀ and take its sign from s.
  Mat3 b = (r + r.transpose()) * 0.5 - c * Mat3::Identity();
  Eigen::Index col = 0;
  b.diagonal().maxCoeff(&col);
  Vec3 axis = b.col(col).normalized();
  if (axis.dot(s) < 0.0) axis = -axis;
  return axis * theta;
}

Mat3 so3_left_jacobian(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 k = skew(w);
  double a;
  double b;
  if (theta2 < 1e-6) {
    a = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    b = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = (1.0 - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Mat3 so3_left_jacobian_inverse(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 k = skew(w);
  double b;
  if (theta2 < 1e-4) {
    b = 1.0 / 12.0 + theta2 / 720.0 + theta2 * theta2 / 30240.0;
  } else {
    const double theta = std::sqrt(theta2);
    b = 1.0 / theta2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Mat3::Identity() - 0.5 * k + b * k * k;
}

RigidTransform twist_exp(const Twist& v) {
  const Vec3 w = v.tail<3>();
  return {so3_exp(w), so3_left_jacobian(w) * v.head<3>()};
}

Twist twist_log(const RigidTransform& a) {
  const Vec3 w = so3_log(a.rotation());
  Twist out;
  out.head<3>() = so3_left_jacobian_inverse(w) * a.translation();
  out.tail<3>() = w;
  return out;
}

Mat6 adjoint(const RigidTransform& a) {
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = a.rotation();
  ad.topRightCorner<3, 3>() = skew(a.translation()) * a.rotation();
  ad.bottomRightCorner<3, 3>() = a.rotation();
  return ad;
}

namespace {

// Off-diagonal block of the SE(3) left Jacobian for twist (rho, phi).
Mat3 se3_q_block(const Vec3& rho, const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const Mat3 p = skew(phi);
  const Mat3 r = skew(rho);
  double c1;
  double c2;
  double c3;
  if (theta2 < 1e-2) {
    c1 = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
    c2 = 1.0 / 24.0 - theta2 / 720.0 + theta2 * theta2 / 40320.0;
    c3 = 1.0 / 120.0 - theta2 / 2520.0 + theta2 * theta2 / 120960.0;
  } else {
    const double theta = std::sqrt(theta2);
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    c1 = (theta - s) / (theta2 * theta);
    c2 = (theta2 + 2.0 * c - 2.0) / (2.0 * theta2 * theta2);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * theta2 * theta2 * theta);
  }
  const Mat3 pr = p * r;
  const Mat3 rp = r * p;
  const Mat3 prp = pr * p;
  return 0.5 * r + c1 * (pr + rp + prp) + c2 * (p * pr + rp * p - 3.0 * prp) +
         c3 * (prp * p + p * prp);
}

}  // namespace

Mat6 se3_left_jacobian(const Twist& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  const Mat3 j = so3_left_jacobian(phi);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = j;
  out.bottomRightCorner<3, 3>() = j;
  out.topRightCorner<3, 3>() = se3_q_block(rho, phi);
  return out;
}

Mat6 se3_left_jacobian_inverse(const Twist& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  const Mat3 jinv = so3_left_jacobian_inverse(phi);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = jinv;
  out.bottomRightCorner<3, 3>() = jinv;
  out.topRightCorner<3, 3>() = -jinv * se3_q_block(rho, phi) * jinv;
  return out;
}

Mat6 se3_right_jacobian_inverse(const Twist& xi) { return se3_left_jacobian_inverse(-xi); }

}  // namespace propslam
