#include "fmsckf/augmentation.hpp"

#include <stdexcept>
#include <string>

namespace fmsckf {

CameraClone camera_pose(const ImuState& imu, const Extrinsics& ext, FrameId frame_id,
                        TimestampNs timestamp) {
  CameraClone clone;
  clone.q = quat_mul(ext.q_CI, imu.q);
  clone.p = imu.p + quat_to_rot(imu.q).transpose() * ext.p_IC;
  clone.frame_id = frame_id;
  clone.timestamp = timestamp;
  return clone;
}

Eigen::Matrix<double, 6, 15> augmentation_jacobian(const ImuState& imu, const Extrinsics& ext) {
  // With R = (I - [δθ×]) R̂ the camera position error is
  // δp_C = δp_I - ᴳR̂_I [ᴵp_C×] δθ_I.
  const Mat3 r_gi = quat_to_rot(imu.q).transpose();
  Eigen::Matrix<double, 6, 15> J = Eigen::Matrix<double, 6, 15>::Zero();
  J.block<3, 3>(0, kThetaIdx) = quat_to_rot(ext.q_CI);
  J.block<3, 3>(3, kThetaIdx) = -r_gi * skew(ext.p_IC);
  J.block<3, 3>(3, kPosIdx) = Mat3::Identity();
  return J;
}

void augment(FilterState& state, const Extrinsics& ext, FrameId frame_id, TimestampNs timestamp,
             CovarianceAudit* audit) {
  if (!state.clones.empty() && frame_id <= state.clones.back().frame_id) {
    throw std::invalid_argument("frame id " + std::to_string(frame_id) +
                                " is not newer than the newest clone");
  }
  const Eigen::Matrix<double, 6, 15> J = augmentation_jacobian(state.imu, ext);
  const Eigen::Index n = state.P.rows();

  // J is zero outside the IMU columns, so J·P only needs the IMU rows of P.
  const MatX JP = J * state.P.topRows(kImuErrorDim);
  const Eigen::Matrix<double, 6, 6> JPJt = JP.leftCols(kImuErrorDim) * J.transpose();

  state.P.conservativeResize(n + kCloneErrorDim, n + kCloneErrorDim);
  state.P.bottomLeftCorner(kCloneErrorDim, n) = JP;
  state.P.topRightCorner(n, kCloneErrorDim) = JP.transpose();
  state.P.bottomRightCorner<kCloneErrorDim, kCloneErrorDim>() = JPJt;

  state.clones.push_back(camera_pose(state.imu, ext, frame_id, timestamp));
  if (audit) audit->inspect(state.P, state.error_dim());
  state.P.bottomRightCorner<kCloneErrorDim, kCloneErrorDim>() = 0.5 * (JPJt + JPJt.transpose());
}

}  // namespace fmsckf
