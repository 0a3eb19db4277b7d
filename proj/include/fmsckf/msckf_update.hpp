#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fmsckf/feature_track.hpp"

namespace fmsckf {

/// Minimum camera-frame depth for a valid projection (m).
inline constexpr double kMinDepth = 1e-6;

struct Projection {
  Vec2 z;      // ẑ = (X/Z, Y/Z)
  Vec3 p_cam;  // ᶜp_f
};

/// ᶜp_f = ᶜR_G (ᴳp_f − ᴳp_C) and its normalized projection. std::nullopt
/// when the depth is below kMinDepth (behind the camera).
std::optional<Projection> predict_observation(const CameraClone& clone, const Vec3& p_f_global);

struct FeatureJacobians {
  VecX r_f;  // 2n_j
  MatX H_X;  // 2n_j × (15 + 6l)
  MatX H_f;  // 2n_j × 3
};

/// Stacked residuals and Jacobians of one track. std::nullopt if the point
/// is behind any observing camera. Throws std::invalid_argument when an
/// observation's clone is not in the state.
std::optional<FeatureJacobians> feature_jacobians(const FeatureTrack& track,
                                                  const FilterState& state,
                                                  const Vec3& p_f_global);

/// Orthonormal basis of the left null-space of H_f (2n × (2n−3)), or
/// std::nullopt if H_f does not have full column rank.
std::optional<MatX> left_nullspace(const MatX& H_f);

struct FeatureUpdateBlock {
  FeatureId feature_id = 0;
  VecX r_o;
  MatX H_o;
  MatX R_o;
  /// σ_im², kept so stacked noise can stay a scaled identity.
  double noise_variance = 0.0;
};

/// Projects residual and state Jacobian onto the left null-space of H_f.
/// std::nullopt for a rank-deficient H_f (degenerate feature).
std::optional<FeatureUpdateBlock> nullspace_project(const FeatureJacobians& jac, double sigma_im,
                                                    FeatureId feature_id = 0);

struct GateResult {
  bool accepted = false;
  bool singular = false;
  double gamma = 0.0;
  double threshold = 0.0;
};

/// χ² quantile for the given confidence and degrees of freedom.
double chi_square_quantile(double confidence, int dof);

/// γ = r_oᵀ (H_o P H_oᵀ + R_o)⁻¹ r_o compared with χ²_conf(dof).
GateResult mahalanobis_gate(const FeatureUpdateBlock& block, const MatX& P,
                            double confidence = 0.95);

struct StackedUpdate {
  MatX H;
  VecX r;
  MatX R;
  bool compressed = false;
};

/// Vertically stacks the blocks (R block-diagonal) and, when the stacked
/// row count exceeds state_dim, compresses with a thin QR so H becomes
/// upper triangular with state_dim rows.
StackedUpdate stack_and_compress(const std::vector<FeatureUpdateBlock>& blocks, int state_dim);

/// Stacking only; used to compare against the compressed path.
StackedUpdate stack_blocks(const std::vector<FeatureUpdateBlock>& blocks);

struct UpdateOutcome {
  bool applied = false;
  std::string diagnostic;
};

/// S = HPHᵀ + R, K = PHᵀS⁻¹, P ← P − KSKᵀ, x ← x ⊕ K r. A numerically
/// singular S leaves the state untouched and reports a diagnostic.
UpdateOutcome ekf_update(FilterState& state, const StackedUpdate& upd,
                         CovarianceAudit* audit = nullptr);

}  // namespace fmsckf
