#include "fmsckf/imu_propagation.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "fmsckf/errors.hpp"

namespace fmsckf {

void NoiseConfig::validate() const {
  for (double s : {sigma_g, sigma_wg, sigma_a, sigma_wa, sigma_im}) {
    if (!std::isfinite(s) || s < 0.0) {
      throw std::invalid_argument("noise densities must be finite and >= 0");
    }
  }
}

BiasCorrected bias_corrected(const ImuSample& sample, const ImuState& state) {
  return {sample.gyro - state.b_g, sample.accel - state.b_a};
}

namespace {

void require_positive_dt(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integration interval must be positive");
}

// Attitude at the three RK4 abscissae 0, dt/2, dt.
std::array<UnitQuaternion, 3> stage_attitudes(const UnitQuaternion& q, const Vec3& omega_hat,
                                              double dt) {
  return {q, integrate_constant_rate(q, omega_hat, 0.5 * dt),
          integrate_constant_rate(q, omega_hat, dt)};
}

Mat15 dynamics(const Mat3& r_gi, const Vec3& omega_hat, const Vec3& accel_hat) {
  Mat15 F = Mat15::Zero();
  F.block<3, 3>(kThetaIdx, kThetaIdx) = -skew(omega_hat);
  F.block<3, 3>(kThetaIdx, kBgIdx) = -Mat3::Identity();
  F.block<3, 3>(kVelIdx, kThetaIdx) = -r_gi * skew(accel_hat);
  F.block<3, 3>(kVelIdx, kBaIdx) = -r_gi;
  F.block<3, 3>(kPosIdx, kVelIdx) = Mat3::Identity();
  return F;
}

Mat15x12 noise_input(const Mat3& r_gi) {
  Mat15x12 G = Mat15x12::Zero();
  G.block<3, 3>(kThetaIdx, 0) = -Mat3::Identity();
  G.block<3, 3>(kBgIdx, 3) = Mat3::Identity();
  G.block<3, 3>(kVelIdx, 6) = -r_gi;
  G.block<3, 3>(kBaIdx, 9) = Mat3::Identity();
  return G;
}

}  // namespace

ImuState integrate_nominal(const ImuState& state, const Vec3& omega_hat, const Vec3& accel_hat,
                           double dt, const Vec3& gravity) {
  require_positive_dt(dt);
  const auto q = stage_attitudes(state.q, omega_hat, dt);
  std::array<Vec3, 3> acc;
  for (int i = 0; i < 3; ++i) acc[i] = quat_to_rot(q[i]).transpose() * accel_hat + gravity;

  const Vec3 k1v = acc[0];
  const Vec3 k2v = acc[1];
  const Vec3 k3v = acc[1];
  const Vec3 k4v = acc[2];
  const Vec3 k1p = state.v;
  const Vec3 k2p = state.v + 0.5 * dt * k1v;
  const Vec3 k3p = state.v + 0.5 * dt * k2v;
  const Vec3 k4p = state.v + dt * k3v;

  ImuState out = state;
  out.q = q[2];
  out.v = state.v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  out.p = state.p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  return out;
}

Mat15 compute_F(const ImuState& state, const Vec3& omega_hat, const Vec3& accel_hat) {
  return dynamics(quat_to_rot(state.q).transpose(), omega_hat, accel_hat);
}

Mat15x12 compute_G(const ImuState& state) {
  return noise_input(quat_to_rot(state.q).transpose());
}

Mat12 continuous_noise(const NoiseConfig& noise) {
  Eigen::Matrix<double, 12, 1> d;
  d << Vec3::Constant(noise.sigma_g * noise.sigma_g), Vec3::Constant(noise.sigma_wg * noise.sigma_wg),
      Vec3::Constant(noise.sigma_a * noise.sigma_a), Vec3::Constant(noise.sigma_wa * noise.sigma_wa);
  return d.asDiagonal();
}

Mat15 transition_matrix(const ImuState& state, const Vec3& omega_hat, const Vec3& accel_hat,
                        double dt) {
  if (dt == 0.0) return Mat15::Identity();
  require_positive_dt(dt);
  const auto q = stage_attitudes(state.q, omega_hat, dt);
  std::array<Mat15, 3> F;
  for (int i = 0; i < 3; ++i) F[i] = dynamics(quat_to_rot(q[i]).transpose(), omega_hat, accel_hat);
  const Mat15 I = Mat15::Identity();
  const Mat15 k1 = F[0];
  const Mat15 k2 = F[1] * (I + 0.5 * dt * k1);
  const Mat15 k3 = F[1] * (I + 0.5 * dt * k2);
  const Mat15 k4 = F[2] * (I + dt * k3);
  return I + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void propagate(FilterState& state, const ImuSample& held, double dt, const NoiseConfig& noise,
               CovarianceAudit* audit) {
  require_positive_dt(dt);
  if (dt > kMaxImuDt) {
    throw ImuGap(state.timestamp, state.timestamp + static_cast<TimestampNs>(std::llround(dt * 1e9)));
  }
  const auto [omega_hat, accel_hat] = bias_corrected(held, state.imu);
  const auto q = stage_attitudes(state.imu.q, omega_hat, dt);
  std::array<Mat15, 3> F;
  std::array<Mat15, 3> GQGt;
  const Mat12 Qc = continuous_noise(noise);
  for (int i = 0; i < 3; ++i) {
    const Mat3 r_gi = quat_to_rot(q[i]).transpose();
    F[i] = dynamics(r_gi, omega_hat, accel_hat);
    const Mat15x12 G = noise_input(r_gi);
    GQGt[i] = G * Qc * G.transpose();
  }

  // Φ̇ = FΦ and Ṗ = FP + PFᵀ + GQGᵀ share the RK4 stages.
  const Mat15 I = Mat15::Identity();
  const Mat15 phi_k1 = F[0];
  const Mat15 phi_k2 = F[1] * (I + 0.5 * dt * phi_k1);
  const Mat15 phi_k3 = F[1] * (I + 0.5 * dt * phi_k2);
  const Mat15 phi_k4 = F[2] * (I + dt * phi_k3);
  const Mat15 phi = I + dt / 6.0 * (phi_k1 + 2.0 * phi_k2 + 2.0 * phi_k3 + phi_k4);

  const Mat15 P0 = state.P.topLeftCorner<kImuErrorDim, kImuErrorDim>();
  auto lyap = [&](int i, const Mat15& P) -> Mat15 {
    return F[i] * P + P * F[i].transpose() + GQGt[i];
  };
  const Mat15 p_k1 = lyap(0, P0);
  const Mat15 p_k2 = lyap(1, P0 + 0.5 * dt * p_k1);
  const Mat15 p_k3 = lyap(1, P0 + 0.5 * dt * p_k2);
  const Mat15 p_k4 = lyap(2, P0 + dt * p_k3);
  const Mat15 P_II = P0 + dt / 6.0 * (p_k1 + 2.0 * p_k2 + 2.0 * p_k3 + p_k4);

  state.imu = integrate_nominal(state.imu, omega_hat, accel_hat, dt, state.gravity);
  state.P.topLeftCorner<kImuErrorDim, kImuErrorDim>() = P_II;
  const Eigen::Index nc = state.P.cols() - kImuErrorDim;
  if (nc > 0) {
    const MatX P_IC = phi * state.P.topRightCorner(kImuErrorDim, nc);
    state.P.topRightCorner(kImuErrorDim, nc) = P_IC;
    state.P.bottomLeftCorner(nc, kImuErrorDim) = P_IC.transpose();
  }
  state.timestamp += static_cast<TimestampNs>(std::llround(dt * 1e9));

  if (!P_II.allFinite() || !state.imu.v.allFinite() || !state.imu.p.allFinite()) {
    throw FilterDivergence("non-finite covariance or state after propagation at t=" +
                           std::to_string(state.timestamp) + " ns");
  }
  if (audit) audit->inspect(state.P, state.error_dim());
  state.P.topLeftCorner<kImuErrorDim, kImuErrorDim>() =
      0.5 * (P_II + P_II.transpose());
}

}  // namespace fmsckf
