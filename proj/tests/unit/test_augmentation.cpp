#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "fmsckf/augmentation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fmsckf;

namespace {

FilterState random_filter(std::mt19937_64& rng, int clones) {
  InitialConditions init;
  init.imu = test::random_imu(rng);
  FilterState s = new_filter_state(init);
  for (int i = 0; i < clones; ++i) {
    CameraClone c;
    c.q = test::random_quat(rng);
    c.p = test::random_vec3(rng);
    c.frame_id = i;
    s.clones.push_back(c);
  }
  s.P = 1e-2 * test::random_spd(rng, s.error_dim());
  return s;
}

Extrinsics random_extrinsics(std::mt19937_64& rng) {
  return {test::random_quat(rng), test::random_vec3(rng, 0.2)};
}

}  // namespace

TEST(Augment, IdentityExtrinsicsCopiesImuPose) {
  std::mt19937_64 rng(31);
  FilterState s = random_filter(rng, 0);
  s.imu.q = UnitQuaternion::identity();
  s.imu.p.setZero();
  augment(s, Extrinsics{}, 5, 100);
  ASSERT_EQ(s.clones.size(), 1u);
  EXPECT_EQ(s.clones[0].q, UnitQuaternion::identity());
  EXPECT_EQ(s.clones[0].p, Vec3::Zero());
  EXPECT_EQ(s.clones[0].frame_id, 5);
  EXPECT_EQ(s.clones[0].timestamp, 100);
  EXPECT_EQ((Mat3(s.P.block<3, 3>(15, 15))), (Mat3(s.P.block<3, 3>(kThetaIdx, kThetaIdx))));
  EXPECT_EQ((Mat3(s.P.block<3, 3>(18, 18))), (Mat3(s.P.block<3, 3>(kPosIdx, kPosIdx))));
  EXPECT_EQ((Mat3(s.P.block<3, 3>(15, 18))), (Mat3(s.P.block<3, 3>(kThetaIdx, kPosIdx))));
}

TEST(Augment, LeverArm) {
  std::mt19937_64 rng(32);
  FilterState s = random_filter(rng, 0);
  s.imu.q = UnitQuaternion::identity();
  s.imu.p = Vec3(1, 2, 3);
  augment(s, Extrinsics{UnitQuaternion::identity(), Vec3(0.1, 0, 0)}, 1, 0);
  EXPECT_LT((s.clones[0].p - Vec3(1.1, 2, 3)).norm(), 1e-15);
}

TEST(Augment, DimensionGrowth) {
  std::mt19937_64 rng(33);
  FilterState s = random_filter(rng, 2);
  EXPECT_EQ(s.P.rows(), 27);
  FilterState t = augmented(s, random_extrinsics(rng), 10, 0);
  EXPECT_EQ(t.P.rows(), 33);
  t = augmented(t, random_extrinsics(rng), 11, 0);
  EXPECT_EQ(t.P.rows(), 39);
  EXPECT_EQ(t.error_dim(), 39);
}

TEST(Augment, RejectsStaleFrameId) {
  std::mt19937_64 rng(34);
  FilterState s = random_filter(rng, 0);
  augment(s, Extrinsics{}, 3, 0);
  EXPECT_THROW(augment(s, Extrinsics{}, 3, 0), std::invalid_argument);
  EXPECT_THROW(augment(s, Extrinsics{}, 2, 0), std::invalid_argument);
}

TEST(Augment, CovarianceIsCongruence) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 50; ++trial) {
    FilterState s = random_filter(rng, trial % 4);
    const Extrinsics ext = random_extrinsics(rng);
    const MatX P0 = s.P;
    const Eigen::Index n = P0.rows();
    const auto J = augmentation_jacobian(s.imu, ext);
    MatX Jfull = MatX::Zero(6, n);
    Jfull.leftCols(15) = J;
    MatX T(n + 6, n);
    T << MatX::Identity(n, n), Jfull;
    const MatX expected = T * P0 * T.transpose();

    augment(s, ext, 100, 0);
    EXPECT_LT(test::rel_diff(s.P, expected), 1e-14);
    EXPECT_EQ(MatX(s.P.topLeftCorner(n, n)), P0);
    // Cross-covariance with the IMU block is J·P_{I,:} exactly.
    EXPECT_EQ(MatX(s.P.block(n, 0, 6, n)), MatX(J * P0.topRows(15)));
    EXPECT_EQ((s.P - s.P.transpose()).cwiseAbs().maxCoeff(), 0.0);
    const Eigen::SelfAdjointEigenSolver<MatX> eig(s.P);
    EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(AugmentationJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 100; ++trial) {
    const ImuState imu = test::random_imu(rng);
    const Extrinsics ext = random_extrinsics(rng);
    const auto J = augmentation_jacobian(imu, ext);
    const auto Jn = oracle::numeric_augmentation_J(imu, ext);
    EXPECT_LT((J - Jn).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
  }
}

TEST(AugmentationJacobian, LinearPredictionOfPerturbedPose) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const ImuState imu = test::random_imu(rng);
    const Extrinsics ext = random_extrinsics(rng);
    const auto J = augmentation_jacobian(imu, ext);
    FilterState s;
    s.imu = imu;
    s.P = MatX::Zero(15, 15);
    Eigen::Matrix<double, 15, 1> dx;
    for (int i = 0; i < 15; ++i) dx(i) = 1e-6 * test::random_vec3(rng).x();
    const FilterState t = apply_correction(s, dx);
    const CameraClone c0 = camera_pose(imu, ext, 0, 0);
    const CameraClone c1 = camera_pose(t.imu, ext, 0, 0);
    Eigen::Matrix<double, 6, 1> actual;
    actual.head<3>() = oracle::small_angle(oracle::qmul(c1.q.coeffs(), oracle::qconj(c0.q.coeffs())));
    actual.tail<3>() = c1.p - c0.p;
    EXPECT_LT((actual - J * dx).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(CameraPose, ComposesExtrinsics) {
  std::mt19937_64 rng(38);
  const ImuState imu = test::random_imu(rng);
  const Extrinsics ext = random_extrinsics(rng);
  const CameraClone c = camera_pose(imu, ext, 7, 9);
  EXPECT_LT((quat_to_rot(c.q) - quat_to_rot(ext.q_CI) * quat_to_rot(imu.q)).norm(), 1e-14);
  EXPECT_LT((c.p - (imu.p + quat_to_rot(imu.q).transpose() * ext.p_IC)).norm(), 1e-14);
}
