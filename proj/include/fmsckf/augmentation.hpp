#pragma once

#include <Eigen/Core>

#include "fmsckf/filter_state.hpp"

namespace fmsckf {

/// Fixed camera–IMU calibration: q_CI is ᶜq_I, p_IC is ᴵp_C.
struct Extrinsics {
  UnitQuaternion q_CI;
  Vec3 p_IC = Vec3::Zero();
};

/// Camera pose implied by the current IMU estimate.
CameraClone camera_pose(const ImuState& imu, const Extrinsics& ext, FrameId frame_id,
                        TimestampNs timestamp);

/// 6×15 Jacobian of the new clone's error with respect to the IMU error
/// block. Rows: [δθ_C; δp_C].
Eigen::Matrix<double, 6, 15> augmentation_jacobian(const ImuState& imu, const Extrinsics& ext);

/// Appends a clone for frame_id and grows P from N×N to (N+6)×(N+6) via
/// [I; J] P [I; J]ᵀ. Throws std::invalid_argument if frame_id is not newer
/// than every existing clone.
void augment(FilterState& state, const Extrinsics& ext, FrameId frame_id, TimestampNs timestamp,
             CovarianceAudit* audit = nullptr);

inline FilterState augmented(FilterState state, const Extrinsics& ext, FrameId frame_id,
                             TimestampNs timestamp) {
  augment(state, ext, frame_id, timestamp);
  return state;
}

}  // namespace fmsckf
