#include "fmsckf/msckf_update.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fmsckf {

std::optional<Projection> predict_observation(const CameraClone& clone, const Vec3& p_f_global) {
  const Vec3 p_cam = quat_to_rot(clone.q) * (p_f_global - clone.p);
  if (p_cam.z() <= kMinDepth) return std::nullopt;
  return Projection{p_cam.head<2>() / p_cam.z(), p_cam};
}

std::optional<FeatureJacobians> feature_jacobians(const FeatureTrack& track,
                                                  const FilterState& state,
                                                  const Vec3& p_f_global) {
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(track.size());
  FeatureJacobians out;
  out.r_f = VecX::Zero(rows);
  out.H_X = MatX::Zero(rows, state.error_dim());
  out.H_f = MatX::Zero(rows, 3);

  for (std::size_t i = 0; i < track.size(); ++i) {
    const auto& obs = track.observations[i];
    const int off = state.clone_offset(obs.frame_id);
    if (off < 0) {
      throw std::invalid_argument("observation of frame " + std::to_string(obs.frame_id) +
                                  " has no clone in the state");
    }
    const CameraClone& clone = state.clones[static_cast<std::size_t>(off - kImuErrorDim) /
                                            kCloneErrorDim];
    const auto proj = predict_observation(clone, p_f_global);
    if (!proj) return std::nullopt;
    const Vec3& pc = proj->p_cam;
    const double iz = 1.0 / pc.z();
    Eigen::Matrix<double, 2, 3> J_f;
    J_f << iz, 0.0, -pc.x() * iz * iz,
           0.0, iz, -pc.y() * iz * iz;
    const Mat3 C = quat_to_rot(clone.q);
    const Eigen::Index r0 = 2 * static_cast<Eigen::Index>(i);
    out.r_f.segment<2>(r0) = obs.z - proj->z;
    out.H_f.block<2, 3>(r0, 0) = J_f * C;
    // Camera attitude error enters as ᶜp_f ≈ ᶜp̂_f + [ᶜp̂_f×] δθ_C.
    out.H_X.block<2, 3>(r0, off) = J_f * skew(pc);
    out.H_X.block<2, 3>(r0, off + 3) = -J_f * C;
  }
  return out;
}

std::optional<MatX> left_nullspace(const MatX& H_f) {
  const Eigen::Index rows = H_f.rows();
  if (rows <= 3) return std::nullopt;
  Eigen::HouseholderQR<MatX> qr(H_f);
  const MatX R = qr.matrixQR().topRows(3).triangularView<Eigen::Upper>();
  const double scale = std::max(H_f.cwiseAbs().maxCoeff(), 1e-300);
  for (int k = 0; k < 3; ++k) {
    if (std::abs(R(k, k)) < 1e-10 * scale) return std::nullopt;
  }
  MatX Q = qr.householderQ();
  return MatX(Q.rightCols(rows - 3));
}

std::optional<FeatureUpdateBlock> nullspace_project(const FeatureJacobians& jac, double sigma_im,
                                                    FeatureId feature_id) {
  const auto A = left_nullspace(jac.H_f);
  if (!A) return std::nullopt;
  FeatureUpdateBlock block;
  block.feature_id = feature_id;
  block.H_o = A->transpose() * jac.H_X;
  block.r_o = A->transpose() * jac.r_f;
  block.noise_variance = sigma_im * sigma_im;
  // AᵀA = I for an orthonormal basis.
  block.R_o = block.noise_variance * MatX::Identity(block.r_o.size(), block.r_o.size());
  return block;
}

double chi_square_quantile(double confidence, int dof) {
  static std::mutex mu;
  static std::map<std::pair<double, int>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(confidence, dof);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const boost::math::chi_squared dist(static_cast<double>(dof));
  const double q = boost::math::quantile(dist, confidence);
  cache.emplace(key, q);
  return q;
}

GateResult mahalanobis_gate(const FeatureUpdateBlock& block, const MatX& P, double confidence) {
  GateResult out;
  const int dof = static_cast<int>(block.r_o.size());
  out.threshold = chi_square_quantile(confidence, dof);
  const MatX S = block.H_o * P * block.H_o.transpose() + block.R_o;
  Eigen::LLT<MatX> llt(S);
  if (llt.info() != Eigen::Success) {
    out.singular = true;
    return out;
  }
  out.gamma = block.r_o.dot(llt.solve(block.r_o));
  if (!std::isfinite(out.gamma)) {
    out.singular = true;
    return out;
  }
  out.accepted = out.gamma <= out.threshold;
  return out;
}

StackedUpdate stack_blocks(const std::vector<FeatureUpdateBlock>& blocks) {
  StackedUpdate out;
  if (blocks.empty()) return out;
  Eigen::Index rows = 0;
  const Eigen::Index cols = blocks.front().H_o.cols();
  for (const auto& b : blocks) {
    if (b.H_o.cols() != cols) throw std::invalid_argument("blocks disagree on state dimension");
    rows += b.r_o.size();
  }
  out.H.resize(rows, cols);
  out.r.resize(rows);
  out.R = MatX::Zero(rows, rows);
  Eigen::Index r0 = 0;
  for (const auto& b : blocks) {
    const Eigen::Index n = b.r_o.size();
    out.H.middleRows(r0, n) = b.H_o;
    out.r.segment(r0, n) = b.r_o;
    out.R.block(r0, r0, n, n) = b.R_o;
    r0 += n;
  }
  return out;
}

StackedUpdate stack_and_compress(const std::vector<FeatureUpdateBlock>& blocks, int state_dim) {
  StackedUpdate stacked = stack_blocks(blocks);
  if (stacked.H.rows() <= state_dim) return stacked;

  bool isotropic = true;
  const double var = blocks.front().noise_variance;
  for (const auto& b : blocks) {
    if (b.noise_variance != var ||
        !b.R_o.isApprox(var * MatX::Identity(b.R_o.rows(), b.R_o.cols()), 0.0)) {
      isotropic = false;
      break;
    }
  }

  Eigen::HouseholderQR<MatX> qr(stacked.H);
  const Eigen::Index n = std::min<Eigen::Index>(state_dim, stacked.H.cols());
  StackedUpdate out;
  out.compressed = true;
  out.H = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const VecX qtr = qr.householderQ().transpose() * stacked.r;
  out.r = qtr.head(n);
  if (isotropic) {
    out.R = var * MatX::Identity(n, n);
  } else {
    const MatX Q1 = qr.householderQ() * MatX::Identity(stacked.H.rows(), n);
    out.R = Q1.transpose() * stacked.R * Q1;
  }
  return out;
}

UpdateOutcome ekf_update(FilterState& state, const StackedUpdate& upd, CovarianceAudit* audit) {
  UpdateOutcome out;
  const int n = state.error_dim();
  if (upd.H.cols() != n || upd.H.rows() != upd.r.size() || upd.R.rows() != upd.r.size()) {
    throw std::invalid_argument("update dimensions inconsistent with the state");
  }
  if (upd.r.size() == 0) {
    out.diagnostic = "empty update";
    return out;
  }
  const MatX PHt = state.P * upd.H.transpose();
  MatX S = upd.H * PHt + upd.R;
  S = 0.5 * (S + S.transpose());
  Eigen::LLT<MatX> llt(S);
  if (llt.info() != Eigen::Success) {
    out.diagnostic = "innovation covariance is not positive definite; update skipped";
    return out;
  }
  const MatX K = llt.solve(PHt.transpose()).transpose();
  if (!K.allFinite()) {
    out.diagnostic = "non-finite Kalman gain; update skipped";
    return out;
  }
  const VecX dx = K * upd.r;
  state.P.noalias() -= K * PHt.transpose();
  if (audit) audit->inspect(state.P, n);
  symmetrize_in_place(state.P);
  state = apply_correction(std::move(state), dx);
  out.applied = true;
  return out;
}

}  // namespace fmsckf
