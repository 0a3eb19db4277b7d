#pragma once

#include <cstdint>
#include <vector>

#include "fmsckf/so3.hpp"

namespace fmsckf {

// Error-state layout: [δθ_I, δb_g, δv, δb_a, δp_I | (δθ_C, δp_C) per clone].
inline constexpr int kImuErrorDim = 15;
inline constexpr int kCloneErrorDim = 6;
inline constexpr int kThetaIdx = 0;
inline constexpr int kBgIdx = 3;
inline constexpr int kVelIdx = 6;
inline constexpr int kBaIdx = 9;
inline constexpr int kPosIdx = 12;

using FrameId = std::int64_t;
using TimestampNs = std::int64_t;

/// Nominal IMU state. q is ᴵq_G (global→body), v and p are ᴳv_I, ᴳp_I.
struct ImuState {
  UnitQuaternion q;
  Vec3 b_g = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();
  Vec3 p = Vec3::Zero();
};

/// One cloned camera pose: q is ᶜq_G, p is ᴳp_C.
struct CameraClone {
  UnitQuaternion q;
  Vec3 p = Vec3::Zero();
  FrameId frame_id = 0;
  TimestampNs timestamp = 0;
};

struct FilterState {
  ImuState imu;
  std::vector<CameraClone> clones;
  MatX P;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  TimestampNs timestamp = 0;

  int error_dim() const { return kImuErrorDim + kCloneErrorDim * static_cast<int>(clones.size()); }

  /// Column offset of a clone's error block; -1 if the frame is not cloned.
  int clone_offset(FrameId frame_id) const;
  const CameraClone* find_clone(FrameId frame_id) const;
};

/// Initial standard deviations per error-state block (per axis).
struct InitialConditions {
  ImuState imu;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  TimestampNs timestamp = 0;
  double sigma_theta = 1e-2;  // 1e-4 rad² variance
  double sigma_bg = 1e-3;
  double sigma_v = 0.0;
  double sigma_ba = 1e-2;
  double sigma_p = 0.0;
};

/// Throws std::invalid_argument on non-finite state or negative sigmas.
FilterState new_filter_state(const InitialConditions& init);

/// state ⊕ Δx: quaternions corrected by error_quat(δθ) ⊗ q̂, everything else
/// additively. Throws std::invalid_argument on a length mismatch.
FilterState apply_correction(FilterState state, const VecX& dx);

/// (P + Pᵀ)/2.
MatX symmetrize(const MatX& P);
void symmetrize_in_place(MatX& P);

/// Records covariance health at every filter step, before symmetrization.
struct CovarianceAudit {
  std::size_t checks = 0;
  std::size_t dimension_violations = 0;
  std::size_t psd_violations = 0;
  std::size_t non_finite = 0;
  double max_asymmetry = 0.0;

  /// Minimum-eigenvalue tolerance: P + tol·I must admit a Cholesky factor.
  double eig_tolerance = 1e-10;

  void inspect(const MatX& P, int expected_dim);
  void merge(const CovarianceAudit& other);
  bool clean(double asym_tol = 1e-9) const {
    return dimension_violations == 0 && psd_violations == 0 && non_finite == 0 &&
           max_asymmetry <= asym_tol;
  }
};

}  // namespace fmsckf
