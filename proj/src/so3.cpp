#include "fmsckf/so3.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fmsckf {

UnitQuaternion UnitQuaternion::from_coeffs(const Vec4& xyzw) {
  const double n = xyzw.norm();
  if (!std::isfinite(n) || n < 1e-300) {
    throw std::invalid_argument("quaternion must be finite and non-zero");
  }
  return UnitQuaternion(xyzw / n);
}

UnitQuaternion UnitQuaternion::from_rotation(const Mat3& rot) {
  // C(q) in JPL form equals the Hamilton matrix of the same coefficients,
  // transposed.
  const Eigen::Quaterniond h(Mat3(rot.transpose()));
  return from_coeffs(Vec4(h.x(), h.y(), h.z(), h.w()));
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 k = axis.normalized();
  const double s = std::sin(0.5 * angle);
  return from_coeffs(Vec4(k.x() * s, k.y() * s, k.z() * s, std::cos(0.5 * angle)));
}

UnitQuaternion UnitQuaternion::inverse() const {
  return UnitQuaternion(Vec4(-coeffs_(0), -coeffs_(1), -coeffs_(2), coeffs_(3)));
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat4 omega_matrix(const Vec3& omega) {
  Mat4 m;
  m.topLeftCorner<3, 3>() = -skew(omega);
  m.topRightCorner<3, 1>() = omega;
  m.bottomLeftCorner<1, 3>() = -omega.transpose();
  m(3, 3) = 0.0;
  return m;
}

UnitQuaternion quat_mul(const UnitQuaternion& q1, const UnitQuaternion& q2) {
  const Vec3 v1 = q1.vec();
  const Vec3 v2 = q2.vec();
  const double w1 = q1.w();
  const double w2 = q2.w();
  Vec4 out;
  out.head<3>() = w1 * v2 + w2 * v1 - v1.cross(v2);
  out(3) = w1 * w2 - v1.dot(v2);
  return UnitQuaternion::from_coeffs(out);
}

RotationMatrix quat_to_rot(const UnitQuaternion& q) {
  const Vec3 v = q.vec();
  const double w = q.w();
  return (2.0 * w * w - 1.0) * Mat3::Identity() - 2.0 * w * skew(v) + 2.0 * v * v.transpose();
}

UnitQuaternion error_quat(const Vec3& dtheta) {
  const Vec3 half = 0.5 * dtheta;
  const double sq = half.squaredNorm();
  if (sq < 1.0) {
    return UnitQuaternion::from_coeffs(Vec4(half.x(), half.y(), half.z(), std::sqrt(1.0 - sq)));
  }
  return UnitQuaternion::from_coeffs(Vec4(half.x(), half.y(), half.z(), 1.0));
}

Vec3 error_angle(const UnitQuaternion& dq) {
  const double sign = dq.w() < 0.0 ? -1.0 : 1.0;
  return 2.0 * sign * Vec3(dq.vec());
}

double rotation_angle(const UnitQuaternion& q) {
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

UnitQuaternion integrate_constant_rate(const UnitQuaternion& q, const Vec3& omega, double dt) {
  const double rate = omega.norm();
  const double half_angle = 0.5 * rate * dt;
  double c = 0.0;
  double s_over_rate = 0.0;
  if (half_angle < 1e-4) {
    // Taylor terms of cos and sin(x)/|ω| up to the order below double eps.
    const double h2 = half_angle * half_angle;
    c = 1.0 - h2 / 2.0 + h2 * h2 / 24.0;
    s_over_rate = 0.5 * dt * (1.0 - h2 / 6.0 + h2 * h2 / 120.0);
  } else {
    c = std::cos(half_angle);
    s_over_rate = std::sin(half_angle) / rate;
  }
  const Mat4 step = c * Mat4::Identity() + s_over_rate * omega_matrix(omega);
  return UnitQuaternion::from_coeffs(step * q.coeffs());
}

UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b, double t) {
  Vec4 qa = a.coeffs();
  Vec4 qb = b.coeffs();
  double d = qa.dot(qb);
  if (d < 0.0) {
    qb = -qb;
    d = -d;
  }
  if (d > 1.0 - 1e-12) {
    return UnitQuaternion::from_coeffs((1.0 - t) * qa + t * qb);
  }
  const double theta = std::acos(d);
  const double s = std::sin(theta);
  return UnitQuaternion::from_coeffs((std::sin((1.0 - t) * theta) / s) * qa +
                                     (std::sin(t * theta) / s) * qb);
}

Vec3 euler_zyx(const UnitQuaternion& q) {
  const Mat3 r = quat_to_rot(q).transpose();
  const double pitch = -std::asin(std::clamp(r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

UnitQuaternion from_euler_zyx(double roll, double pitch, double yaw) {
  const Mat3 r_gi = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                     Eigen::AngleAxisd(roll, Vec3::UnitX()))
                        .toRotationMatrix();
  return UnitQuaternion::from_rotation(r_gi.transpose());
}

}  // namespace fmsckf
