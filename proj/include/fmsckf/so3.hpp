#pragma once

#include <Eigen/Core>

namespace fmsckf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Unit quaternion in JPL convention: scalar-last storage [x y z w], and a
/// state quaternion ᴬq_B rotates vectors from frame B into frame A.
///
/// Composition follows q1 ⊗ q2 ↔ R(q1)·R(q2), so a chain such as
/// ᶜq_G = ᶜq_I ⊗ ᴵq_G reads left to right.
class UnitQuaternion {
 public:
  UnitQuaternion() : coeffs_(0.0, 0.0, 0.0, 1.0) {}

  /// Normalizes the input. Throws std::invalid_argument on a zero or
  /// non-finite vector.
  static UnitQuaternion from_coeffs(const Vec4& xyzw);
  static UnitQuaternion from_coeffs(double x, double y, double z, double w) {
    return from_coeffs(Vec4(x, y, z, w));
  }
  static UnitQuaternion identity() { return {}; }

  /// Quaternion whose rotation matrix is R (R must be a proper rotation).
  static UnitQuaternion from_rotation(const Mat3& rot);

  /// Rotation about a unit axis by angle (rad), as a frame rotation: the
  /// resulting matrix equals the transpose of the active rotation.
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);

  const Vec4& coeffs() const { return coeffs_; }
  Eigen::Ref<const Vec3> vec() const { return coeffs_.head<3>(); }
  double w() const { return coeffs_(3); }

  UnitQuaternion inverse() const;
  double norm() const { return coeffs_.norm(); }

  bool operator==(const UnitQuaternion& other) const = default;

 private:
  explicit UnitQuaternion(const Vec4& c) : coeffs_(c) {}
  Vec4 coeffs_;
};

using RotationMatrix = Mat3;

/// Cross-product matrix: skew(a) * b == a.cross(b).
Mat3 skew(const Vec3& v);

/// 4x4 rate matrix for q̇ = ½ Ω(ω) q.
Mat4 omega_matrix(const Vec3& omega);

UnitQuaternion quat_mul(const UnitQuaternion& q1, const UnitQuaternion& q2);

inline UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
  return quat_mul(a, b);
}

RotationMatrix quat_to_rot(const UnitQuaternion& q);

/// Small-angle error quaternion [δθ/2, sqrt(1 - |δθ/2|²)].
///
/// The correction is applied as q = error_quat(δθ) ⊗ q̂, which gives
/// R(q) ≈ (I - [δθ×]) R(q̂). Inputs with |δθ| ≥ 2 fall back to the
/// renormalized [δθ/2, 1].
UnitQuaternion error_quat(const Vec3& dtheta);

/// Inverse of error_quat for small rotations: 2 * vec(q), sign-fixed so
/// that w ≥ 0.
Vec3 error_angle(const UnitQuaternion& dq);

/// Total rotation angle (rad) of q, in [0, π].
double rotation_angle(const UnitQuaternion& q);

/// Closed-form solution of q̇ = ½ Ω(ω) q for constant ω over dt.
UnitQuaternion integrate_constant_rate(const UnitQuaternion& q, const Vec3& omega,
                                       double dt);

/// Spherical linear interpolation, shortest arc, t in [0, 1].
UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b, double t);

/// ZYX Euler angles (roll, pitch, yaw) in rad of the body→global rotation
/// ᴳR_I = quat_to_rot(q)ᵀ.
Vec3 euler_zyx(const UnitQuaternion& q);

/// ᴵq_G for a body whose body→global rotation is Rz(yaw)·Ry(pitch)·Rx(roll).
UnitQuaternion from_euler_zyx(double roll, double pitch, double yaw);

}  // namespace fmsckf
