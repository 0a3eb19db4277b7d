#include "fmsckf/filter_state.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fmsckf {

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

int FilterState::clone_offset(FrameId frame_id) const {
  for (std::size_t i = 0; i < clones.size(); ++i) {
    if (clones[i].frame_id == frame_id) {
      return kImuErrorDim + kCloneErrorDim * static_cast<int>(i);
    }
  }
  return -1;
}

const CameraClone* FilterState::find_clone(FrameId frame_id) const {
  for (const auto& c : clones) {
    if (c.frame_id == frame_id) return &c;
  }
  return nullptr;
}

FilterState new_filter_state(const InitialConditions& init) {
  const auto& s = init.imu;
  if (!s.q.coeffs().allFinite() || !finite(s.b_g) || !finite(s.v) || !finite(s.b_a) ||
      !finite(s.p) || !finite(init.gravity)) {
    throw std::invalid_argument("initial state must be finite");
  }
  for (double sigma : {init.sigma_theta, init.sigma_bg, init.sigma_v, init.sigma_ba, init.sigma_p}) {
    if (!std::isfinite(sigma) || sigma < 0.0) {
      throw std::invalid_argument("initial standard deviations must be finite and >= 0");
    }
  }
  FilterState state;
  state.imu = init.imu;
  state.gravity = init.gravity;
  state.timestamp = init.timestamp;
  VecX diag(kImuErrorDim);
  diag << Vec3::Constant(init.sigma_theta * init.sigma_theta),
      Vec3::Constant(init.sigma_bg * init.sigma_bg), Vec3::Constant(init.sigma_v * init.sigma_v),
      Vec3::Constant(init.sigma_ba * init.sigma_ba), Vec3::Constant(init.sigma_p * init.sigma_p);
  state.P = diag.asDiagonal();
  return state;
}

FilterState apply_correction(FilterState state, const VecX& dx) {
  if (dx.size() != state.error_dim()) {
    throw std::invalid_argument("correction length " + std::to_string(dx.size()) +
                                " does not match error dimension " +
                                std::to_string(state.error_dim()));
  }
  auto& imu = state.imu;
  imu.q = quat_mul(error_quat(dx.segment<3>(kThetaIdx)), imu.q);
  imu.b_g += dx.segment<3>(kBgIdx);
  imu.v += dx.segment<3>(kVelIdx);
  imu.b_a += dx.segment<3>(kBaIdx);
  imu.p += dx.segment<3>(kPosIdx);
  for (std::size_t i = 0; i < state.clones.size(); ++i) {
    const int off = kImuErrorDim + kCloneErrorDim * static_cast<int>(i);
    auto& c = state.clones[i];
    c.q = quat_mul(error_quat(dx.segment<3>(off)), c.q);
    c.p += dx.segment<3>(off + 3);
  }
  return state;
}

MatX symmetrize(const MatX& P) { return 0.5 * (P + P.transpose()); }

void symmetrize_in_place(MatX& P) {
  const Eigen::Index n = P.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double m = 0.5 * (P(i, j) + P(j, i));
      P(i, j) = m;
      P(j, i) = m;
    }
  }
}

void CovarianceAudit::inspect(const MatX& P, int expected_dim) {
  ++checks;
  if (P.rows() != expected_dim || P.cols() != expected_dim) {
    ++dimension_violations;
    return;
  }
  if (!P.allFinite()) {
    ++non_finite;
    return;
  }
  const double asym = (P - P.transpose()).cwiseAbs().maxCoeff();
  max_asymmetry = std::max(max_asymmetry, asym);
  MatX shifted = symmetrize(P);
  shifted.diagonal().array() += eig_tolerance;
  Eigen::LLT<MatX> llt(shifted);
  if (llt.info() != Eigen::Success) ++psd_violations;
}

void CovarianceAudit::merge(const CovarianceAudit& other) {
  checks += other.checks;
  dimension_violations += other.dimension_violations;
  psd_violations += other.psd_violations;
  non_finite += other.non_finite;
  max_asymmetry = std::max(max_asymmetry, other.max_asymmetry);
}

}  // namespace fmsckf
