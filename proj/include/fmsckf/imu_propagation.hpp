#pragma once

#include <Eigen/Core>

#include "fmsckf/filter_state.hpp"

namespace fmsckf {

struct ImuSample {
  TimestampNs timestamp = 0;
  Vec3 gyro = Vec3::Zero();   // ω_m, rad/s
  Vec3 accel = Vec3::Zero();  // a_m, m/s²
};

/// Continuous-time noise densities and the image-plane measurement std.
struct NoiseConfig {
  double sigma_g = 1.7e-4;    // rad/s/√Hz
  double sigma_wg = 1.9393e-5;  // rad/s²/√Hz
  double sigma_a = 2.0e-3;    // m/s²/√Hz
  double sigma_wa = 3.0e-3;   // m/s³/√Hz
  double sigma_im = 2.0e-3;   // normalized image units

  /// Throws std::invalid_argument unless every entry is finite and >= 0.
  void validate() const;
};

using Mat15 = Eigen::Matrix<double, 15, 15>;
using Mat15x12 = Eigen::Matrix<double, 15, 12>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

/// Largest IMU interval that is integrated; longer gaps raise ImuGap.
inline constexpr double kMaxImuDt = 0.1;

struct BiasCorrected {
  Vec3 omega;
  Vec3 accel;
};

BiasCorrected bias_corrected(const ImuSample& sample, const ImuState& state);

/// Nominal-state integration over dt with ω̂, â held constant. Attitude uses
/// the closed-form solution of q̇ = ½Ω(ω̂)q; velocity and position use RK4
/// driven by that attitude. Throws std::invalid_argument when dt <= 0.
ImuState integrate_nominal(const ImuState& state, const Vec3& omega_hat, const Vec3& accel_hat,
                           double dt, const Vec3& gravity);

/// Continuous error-state dynamics matrix.
Mat15 compute_F(const ImuState& state, const Vec3& omega_hat, const Vec3& accel_hat);

/// Noise input matrix for n_I = [n_g, n_wg, n_a, n_wa].
Mat15x12 compute_G(const ImuState& state);

/// diag(σ_g², σ_wg², σ_a², σ_wa²) ⊗ I₃.
Mat12 continuous_noise(const NoiseConfig& noise);

/// Advances the nominal IMU state by dt using the held sample, integrates
/// Φ and P_II jointly with RK4, applies P_IC ← Φ·P_IC and leaves P_CC
/// untouched. Throws std::invalid_argument for dt <= 0, ImuGap for
/// dt > kMaxImuDt, and FilterDivergence if P becomes non-finite.
void propagate(FilterState& state, const ImuSample& held, double dt, const NoiseConfig& noise,
               CovarianceAudit* audit = nullptr);

/// Value-returning form of propagate.
inline FilterState propagated(FilterState state, const ImuSample& held, double dt,
                              const NoiseConfig& noise) {
  propagate(state, held, dt, noise);
  return state;
}

/// Transition matrix Φ(t+dt, t) obtained with the same RK4 stages used by
/// propagate. Identity for dt = 0; throws std::invalid_argument for dt < 0.
Mat15 transition_matrix(const ImuState& state, const Vec3& omega_hat, const Vec3& accel_hat,
                        double dt);

}  // namespace fmsckf
