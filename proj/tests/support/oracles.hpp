#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. Quaternion algebra here is written out on raw [x y z w] vectors so
// it does not go through the library's so3 code.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fmsckf/augmentation.hpp"
#include "fmsckf/feature_track.hpp"
#include "fmsckf/filter_state.hpp"
#include "fmsckf/msckf_update.hpp"

namespace fmsckf::oracle {

using Mat15 = Eigen::Matrix<double, 15, 15>;
using Vec15 = Eigen::Matrix<double, 15, 1>;

inline Mat3 cross_mat(const Vec3& v) {
  Mat3 m;
  m << 0, -v(2), v(1), v(2), 0, -v(0), -v(1), v(0), 0;
  return m;
}

// JPL product: [q4 p + p4 q − q × p ; q4 p4 − q·p]
inline Vec4 qmul(const Vec4& q, const Vec4& p) {
  const Vec3 qv = q.head<3>(), pv = p.head<3>();
  Vec4 out;
  out.head<3>() = q(3) * pv + p(3) * qv - qv.cross(pv);
  out(3) = q(3) * p(3) - qv.dot(pv);
  return out;
}

inline Vec4 qconj(const Vec4& q) { return Vec4(-q(0), -q(1), -q(2), q(3)); }

inline Mat3 rot(const Vec4& q) {
  const Vec3 v = q.head<3>();
  const double w = q(3);
  return (2 * w * w - 1) * Mat3::Identity() - 2 * w * cross_mat(v) + 2 * v * v.transpose();
}

inline Vec4 small_quat(const Vec3& dtheta) {
  Vec4 q;
  q.head<3>() = 0.5 * dtheta;
  q(3) = std::sqrt(1.0 - q.head<3>().squaredNorm());
  return q;
}

// Inverse of small_quat on the w > 0 chart.
inline Vec3 small_angle(const Vec4& dq) { return 2.0 * (dq(3) < 0 ? -dq : dq).head<3>(); }

// q̇ = ½ Ω(ω) q written as ½ (ω, 0) ⊗ q.
inline Vec4 qdot(const Vec4& q, const Vec3& omega) {
  return 0.5 * qmul(Vec4(omega(0), omega(1), omega(2), 0.0), q);
}

struct RawImu {
  Vec4 q;
  Vec3 bg, v, ba, p;
};

inline RawImu raw(const ImuState& s) { return {s.q.coeffs(), s.b_g, s.v, s.b_a, s.p}; }

inline RawImu perturb(const RawImu& s, const Vec15& dx) {
  RawImu out = s;
  out.q = qmul(small_quat(dx.segment<3>(kThetaIdx)), s.q);
  out.bg += dx.segment<3>(kBgIdx);
  out.v += dx.segment<3>(kVelIdx);
  out.ba += dx.segment<3>(kBaIdx);
  out.p += dx.segment<3>(kPosIdx);
  return out;
}

// Time derivative of the error state for true state x̂ ⊕ δx and estimate x̂
// driven by the same raw measurements.
inline Vec15 error_rate(const RawImu& est, const Vec15& dx, const Vec3& omega_m, const Vec3& accel_m,
                        const Vec3& gravity) {
  const RawImu tru = perturb(est, dx);
  const Vec4 qd = qdot(tru.q, omega_m - tru.bg);
  const Vec4 qd_hat = qdot(est.q, omega_m - est.bg);
  const Vec4 dq_dot = qmul(qd, qconj(est.q)) + qmul(tru.q, qconj(qd_hat));
  Vec15 out = Vec15::Zero();
  out.segment<3>(kThetaIdx) = 2.0 * dq_dot.head<3>();
  const Vec3 a_true = rot(tru.q).transpose() * (accel_m - tru.ba) + gravity;
  const Vec3 a_hat = rot(est.q).transpose() * (accel_m - est.ba) + gravity;
  out.segment<3>(kVelIdx) = a_true - a_hat;
  out.segment<3>(kPosIdx) = tru.v - est.v;
  return out;
}

/// Central-difference Jacobian of the continuous error dynamics.
inline Mat15 numeric_F(const ImuState& state, const Vec3& omega_hat, const Vec3& accel_hat,
                       const Vec3& gravity, double h = 1e-5) {
  const RawImu est = raw(state);
  const Vec3 omega_m = omega_hat + state.b_g;
  const Vec3 accel_m = accel_hat + state.b_a;
  Mat15 F;
  for (int k = 0; k < 15; ++k) {
    Vec15 e = Vec15::Zero();
    e(k) = h;
    F.col(k) = (error_rate(est, e, omega_m, accel_m, gravity) -
                error_rate(est, -e, omega_m, accel_m, gravity)) /
               (2 * h);
  }
  return F;
}

/// Central-difference Jacobian of the camera pose error w.r.t. the IMU error.
inline Eigen::Matrix<double, 6, 15> numeric_augmentation_J(const ImuState& state, const Extrinsics& ext,
                                                           double h = 1e-6) {
  const RawImu est = raw(state);
  const Vec4 qci = ext.q_CI.coeffs();
  auto cam = [&](const RawImu& s) {
    return std::make_pair(qmul(qci, s.q), Vec3(s.p + rot(s.q).transpose() * ext.p_IC));
  };
  const auto [qc_hat, pc_hat] = cam(est);
  auto err = [&](const Vec15& dx) {
    const auto [qc, pc] = cam(perturb(est, dx));
    Eigen::Matrix<double, 6, 1> e;
    e.head<3>() = small_angle(qmul(qc, qconj(qc_hat)));
    e.tail<3>() = pc - pc_hat;
    return e;
  };
  Eigen::Matrix<double, 6, 15> J;
  for (int k = 0; k < 15; ++k) {
    Vec15 e = Vec15::Zero();
    e(k) = h;
    J.col(k) = (err(e) - err(-e)) / (2 * h);
  }
  return J;
}

inline Vec2 project(const Vec4& q_cg, const Vec3& p_c, const Vec3& p_f) {
  const Vec3 pc = rot(q_cg) * (p_f - p_c);
  return pc.head<2>() / pc.z();
}

/// Stacked predicted measurements for the state perturbed by dx (error-state
/// layout) and the point perturbed by dpf.
inline VecX predicted_measurements(const FeatureTrack& track, const FilterState& state, const VecX& dx,
                                   const Vec3& p_f) {
  VecX out(2 * static_cast<Eigen::Index>(track.size()));
  for (std::size_t i = 0; i < track.size(); ++i) {
    const int off = state.clone_offset(track.observations[i].frame_id);
    const CameraClone& c = *state.find_clone(track.observations[i].frame_id);
    const Vec4 q = qmul(small_quat(dx.segment<3>(off)), c.q.coeffs());
    const Vec3 p = c.p + dx.segment<3>(off + 3);
    out.segment<2>(2 * static_cast<Eigen::Index>(i)) = project(q, p, p_f);
  }
  return out;
}

struct NumericMeasurementJacobians {
  MatX H_X;
  MatX H_f;
};

/// ∂ẑ/∂δx and ∂ẑ/∂p_f by central differences (the residual is z − ẑ).
inline NumericMeasurementJacobians numeric_measurement_jacobians(const FeatureTrack& track,
                                                                 const FilterState& state,
                                                                 const Vec3& p_f, double h = 1e-6) {
  const int n = state.error_dim();
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(track.size());
  NumericMeasurementJacobians out{MatX::Zero(rows, n), MatX::Zero(rows, 3)};
  for (int k = 0; k < n; ++k) {
    VecX e = VecX::Zero(n);
    e(k) = h;
    out.H_X.col(k) = (predicted_measurements(track, state, e, p_f) -
                      predicted_measurements(track, state, -e, p_f)) /
                     (2 * h);
  }
  const VecX zero = VecX::Zero(n);
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e(k) = h;
    out.H_f.col(k) = (predicted_measurements(track, state, zero, p_f + e) -
                      predicted_measurements(track, state, zero, p_f - e)) /
                     (2 * h);
  }
  return out;
}

/// Error-state difference a ⊖ b (same clone set).
inline VecX state_difference(const FilterState& a, const FilterState& b) {
  VecX d(a.error_dim());
  d.segment<3>(kThetaIdx) = small_angle(qmul(a.imu.q.coeffs(), qconj(b.imu.q.coeffs())));
  d.segment<3>(kBgIdx) = a.imu.b_g - b.imu.b_g;
  d.segment<3>(kVelIdx) = a.imu.v - b.imu.v;
  d.segment<3>(kBaIdx) = a.imu.b_a - b.imu.b_a;
  d.segment<3>(kPosIdx) = a.imu.p - b.imu.p;
  for (std::size_t i = 0; i < a.clones.size(); ++i) {
    const Eigen::Index off = kImuErrorDim + kCloneErrorDim * static_cast<Eigen::Index>(i);
    d.segment<3>(off) = small_angle(qmul(a.clones[i].q.coeffs(), qconj(b.clones[i].q.coeffs())));
    d.segment<3>(off + 3) = a.clones[i].p - b.clones[i].p;
  }
  return d;
}

/// One linearized feature: its Jacobians and residual.
struct LinearFeature {
  MatX H_X;
  MatX H_f;
  VecX r;
};

struct MarginalizedUpdate {
  VecX dx;
  MatX P;
};

/// EKF update of a filter that carries every feature position as a state
/// with an uninformative prior, followed by marginalizing the features out.
/// Computed in information form: the joint information is
///   [P⁻¹ + Σ H_XᵀH_X/σ², H_XᵀH_f/σ²; H_fᵀH_X/σ², H_fᵀH_f/σ²]
/// and the Schur complement on the feature blocks gives the posterior.
inline MarginalizedUpdate marginalized_update(const MatX& P, const std::vector<LinearFeature>& feats,
                                              double sigma) {
  const Eigen::Index n = P.rows();
  const Eigen::Index m = 3 * static_cast<Eigen::Index>(feats.size());
  const double w = 1.0 / (sigma * sigma);
  MatX L = MatX::Zero(n + m, n + m);
  VecX eta = VecX::Zero(n + m);
  L.topLeftCorner(n, n) = P.inverse();
  for (std::size_t j = 0; j < feats.size(); ++j) {
    const Eigen::Index f = n + 3 * static_cast<Eigen::Index>(j);
    MatX H = MatX::Zero(feats[j].r.size(), n + m);
    H.leftCols(n) = feats[j].H_X;
    H.middleCols(f, 3) = feats[j].H_f;
    L += w * H.transpose() * H;
    eta += w * H.transpose() * feats[j].r;
  }
  const MatX Lxx = L.topLeftCorner(n, n);
  const MatX Lxf = L.topRightCorner(n, m);
  const MatX Lff = L.bottomRightCorner(m, m);
  const Eigen::LDLT<MatX> ff(Lff);
  const MatX schur = Lxx - Lxf * ff.solve(Lxf.transpose());
  MarginalizedUpdate out;
  out.P = schur.inverse();
  out.P = 0.5 * (out.P + out.P.transpose()).eval();
  out.dx = L.ldlt().solve(eta).head(n);
  return out;
}

/// P − KHP in Joseph form.
inline MatX joseph_posterior(const MatX& P, const MatX& H, const MatX& R) {
  const MatX S = H * P * H.transpose() + R;
  const MatX K = P * H.transpose() * S.inverse();
  const MatX IKH = MatX::Identity(P.rows(), P.cols()) - K * H;
  return IKH * P * IKH.transpose() + K * R * K.transpose();
}

inline double rel_frobenius(const MatX& a, const MatX& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

/// Random MSCKF problem: l clones looking roughly along +z from near the
/// origin, features 4–9 m ahead, each seen in n_j distinct clones.
struct Instance {
  FilterState state;
  std::vector<FeatureTrack> tracks;
  std::vector<Vec3> truth;      // true feature positions
  std::vector<Vec3> estimated;  // perturbed, as if triangulated
};

inline Instance random_instance(std::mt19937_64& rng, int clones, int features, int nj_min, int nj_max,
                                double sigma_im, double prior_scale = 1e-3) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rv = [&](double s) { return Vec3(s * g(rng), s * g(rng), s * g(rng)); };
  Instance inst;
  FilterState& st = inst.state;
  st.imu.q = UnitQuaternion::from_coeffs(Vec4(0.1 * g(rng), 0.1 * g(rng), 0.1 * g(rng), 1.0));
  st.imu.b_g = rv(1e-3);
  st.imu.v = rv(0.5);
  st.imu.b_a = rv(1e-2);
  st.imu.p = rv(0.5);
  for (int i = 0; i < clones; ++i) {
    CameraClone c;
    c.q = UnitQuaternion::from_coeffs(Vec4(0.05 * g(rng), 0.05 * g(rng), 0.05 * g(rng), 1.0));
    c.p = Vec3(0.4 * i, 0.0, 0.0) + rv(0.2);
    c.frame_id = 10 + i;
    c.timestamp = (10 + i) * 100000000LL;
    st.clones.push_back(c);
  }
  // Random SPD prior.
  const int n = st.error_dim();
  MatX A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  st.P = prior_scale * (A * A.transpose() / n + 0.1 * MatX::Identity(n, n));

  std::uniform_int_distribution<int> nj_dist(nj_min, std::min(nj_max, clones));
  for (int f = 0; f < features; ++f) {
    const Vec3 pf(2.0 * u(rng), 1.5 * u(rng), 6.5 + 2.5 * u(rng));
    const int nj = nj_dist(rng);
    std::vector<int> idx(clones);
    for (int i = 0; i < clones; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(nj);
    std::sort(idx.begin(), idx.end());
    FeatureTrack t;
    t.feature_id = f;
    for (int i : idx) {
      const auto& c = st.clones[static_cast<std::size_t>(i)];
      FeatureObservation o;
      o.frame_id = c.frame_id;
      o.z = project(c.q.coeffs(), c.p, pf) + Vec2(sigma_im * g(rng), sigma_im * g(rng));
      t.observations.push_back(o);
    }
    inst.tracks.push_back(t);
    inst.truth.push_back(pf);
    inst.estimated.push_back(pf + rv(0.02));
  }
  return inst;
}

}  // namespace fmsckf::oracle
