#include "fmsckf/triangulation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fmsckf {

const char* to_string(TriangulationFailure f) {
  switch (f) {
    case TriangulationFailure::None: return "none";
    case TriangulationFailure::TooFewObservations: return "too_few_observations";
    case TriangulationFailure::NotTriangulatable: return "not_triangulatable";
    case TriangulationFailure::NegativeDepth: return "negative_depth";
    case TriangulationFailure::Diverged: return "diverged";
    case TriangulationFailure::HighReprojection: return "high_reprojection";
    case TriangulationFailure::SmallBaseline: return "small_baseline";
  }
  return "unknown";
}

namespace {

const CameraClone& clone_for(const std::vector<CameraClone>& clones, FrameId id) {
  for (const auto& c : clones) {
    if (c.frame_id == id) return c;
  }
  throw std::invalid_argument("no clone for frame " + std::to_string(id));
}

// Per-view geometry relative to the anchor: h = C_ia·[α β 1]ᵀ + ρ·t_i.
struct View {
  Mat3 C_ia;
  Vec3 t_i;
  Vec2 z;
};

std::vector<View> anchored_views(const FeatureTrack& track, const std::vector<CameraClone>& clones,
                                 const Mat3& C_a, const Vec3& p_a) {
  std::vector<View> views;
  views.reserve(track.size());
  for (const auto& obs : track.observations) {
    const CameraClone& c = clone_for(clones, obs.frame_id);
    const Mat3 C_i = quat_to_rot(c.q);
    views.push_back({C_i * C_a.transpose(), C_i * (p_a - c.p), obs.z});
  }
  return views;
}

// Sum of squared reprojection residuals; +inf if any view has h_z <= 0.
double cost_of(const std::vector<View>& views, const Vec3& x) {
  const Vec3 bearing(x(0), x(1), 1.0);
  double cost = 0.0;
  for (const auto& v : views) {
    const Vec3 h = v.C_ia * bearing + x(2) * v.t_i;
    if (h.z() <= 0.0) return std::numeric_limits<double>::infinity();
    cost += (v.z - h.head<2>() / h.z()).squaredNorm();
  }
  return cost;
}

}  // namespace

std::optional<InitialEstimate> linear_init(const FeatureTrack& track,
                                           const std::vector<CameraClone>& clones) {
  if (track.size() < 2) throw std::invalid_argument("triangulation needs two observations");
  const auto& first = track.observations.front();
  const auto& last = track.observations.back();
  const CameraClone& c1 = clone_for(clones, first.frame_id);
  const CameraClone& c2 = clone_for(clones, last.frame_id);

  const Vec3 d1 = quat_to_rot(c1.q).transpose() * Vec3(first.z.x(), first.z.y(), 1.0);
  const Vec3 d2 = quat_to_rot(c2.q).transpose() * Vec3(last.z.x(), last.z.y(), 1.0);
  const Vec3 baseline = c2.p - c1.p;
  if (baseline.norm() < 1e-9) return std::nullopt;

  Eigen::Matrix<double, 3, 2> A;
  A.col(0) = d1;
  A.col(1) = -d2;
  const Eigen::Matrix2d AtA = A.transpose() * A;
  if (AtA.determinant() < 1e-12 * d1.squaredNorm() * d2.squaredNorm()) return std::nullopt;
  const Eigen::Vector2d depth = AtA.ldlt().solve(A.transpose() * baseline);

  InitialEstimate out;
  out.p_global = 0.5 * ((c1.p + depth(0) * d1) + (c2.p + depth(1) * d2));
  out.behind_camera = depth(0) <= 0.0 || depth(1) <= 0.0;
  return out;
}

TriangulationResult refine(const FeatureTrack& track, const std::vector<CameraClone>& clones,
                           const InitialEstimate& init, const TriangulationConfig& cfg) {
  TriangulationResult result;
  result.p_global = init.p_global;
  if (track.size() < std::max<std::size_t>(cfg.min_observations, 2)) {
    result.failure = TriangulationFailure::TooFewObservations;
    return result;
  }
  const CameraClone& anchor = clone_for(clones, track.observations.front().frame_id);
  const Mat3 C_a = quat_to_rot(anchor.q);
  const Vec3 p_in_anchor = C_a * (init.p_global - anchor.p);
  if (init.behind_camera || p_in_anchor.z() <= 0.0) {
    result.failure = TriangulationFailure::NegativeDepth;
    return result;
  }

  const std::vector<View> views = anchored_views(track, clones, C_a, anchor.p);
  Vec3 x(p_in_anchor.x() / p_in_anchor.z(), p_in_anchor.y() / p_in_anchor.z(),
         1.0 / p_in_anchor.z());
  double cost = cost_of(views, x);
  if (!std::isfinite(cost)) {
    result.failure = TriangulationFailure::NegativeDepth;
    return result;
  }

  int consecutive_increases = 0;
  bool diverged = false;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    result.iterations = it + 1;
    Eigen::Matrix3d JtJ = Eigen::Matrix3d::Zero();
    Vec3 Jtr = Vec3::Zero();
    const Vec3 bearing(x(0), x(1), 1.0);
    for (const auto& v : views) {
      const Vec3 h = v.C_ia * bearing + x(2) * v.t_i;
      const double iz = 1.0 / h.z();
      Eigen::Matrix<double, 2, 3> dz_dh;
      dz_dh << iz, 0.0, -h.x() * iz * iz,
               0.0, iz, -h.y() * iz * iz;
      Eigen::Matrix3d dh_dx;
      dh_dx << v.C_ia.col(0), v.C_ia.col(1), v.t_i;
      const Eigen::Matrix<double, 2, 3> J = dz_dh * dh_dx;
      const Vec2 r = v.z - h.head<2>() * iz;
      JtJ += J.transpose() * J;
      Jtr += J.transpose() * r;
    }
    Eigen::LDLT<Eigen::Matrix3d> ldlt(JtJ);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      diverged = true;
      break;
    }
    const Vec3 step = ldlt.solve(Jtr);
    if (!step.allFinite()) {
      diverged = true;
      break;
    }
    result.last_step_norm = step.norm();
    if (step.norm() < cfg.step_tolerance) break;

    bool accepted = false;
    double scale = 1.0;
    for (int h = 0; h <= cfg.max_halvings; ++h, scale *= 0.5) {
      const Vec3 candidate = x + scale * step;
      const double c = cost_of(views, candidate);
      if (c <= cost) {
        x = candidate;
        cost = c;
        accepted = true;
        break;
      }
    }
    if (accepted) {
      consecutive_increases = 0;
    } else if (++consecutive_increases >= cfg.max_cost_increases) {
      diverged = true;
      break;
    }
  }

  result.p_global = anchor.p + C_a.transpose() * (Vec3(x(0), x(1), 1.0) / x(2));
  result.rms_reprojection = std::sqrt(cost / (2.0 * static_cast<double>(views.size())));
  if (diverged) {
    result.failure = TriangulationFailure::Diverged;
    return result;
  }
  if (x(2) <= 0.0 || !std::isfinite(cost)) {
    result.failure = TriangulationFailure::NegativeDepth;
    return result;
  }
  for (const auto& obs : track.observations) {
    const CameraClone& c = clone_for(clones, obs.frame_id);
    if ((quat_to_rot(c.q) * (result.p_global - c.p)).z() <= 0.0) {
      result.failure = TriangulationFailure::NegativeDepth;
      return result;
    }
  }
  if (result.rms_reprojection > cfg.max_rms_reprojection) {
    result.failure = TriangulationFailure::HighReprojection;
    return result;
  }
  double baseline = 0.0;
  for (const auto& obs : track.observations) {
    baseline = std::max(baseline, (clone_for(clones, obs.frame_id).p - anchor.p).norm());
  }
  if (baseline * x(2) < cfg.min_baseline_ratio) {
    result.failure = TriangulationFailure::SmallBaseline;
    return result;
  }
  result.converged = true;
  return result;
}

TriangulationResult triangulate(const FeatureTrack& track, const std::vector<CameraClone>& clones,
                                const TriangulationConfig& cfg) {
  if (track.size() < std::max<std::size_t>(cfg.min_observations, 2)) {
    TriangulationResult r;
    r.failure = TriangulationFailure::TooFewObservations;
    return r;
  }
  const auto init = linear_init(track, clones);
  if (!init) {
    TriangulationResult r;
    r.failure = TriangulationFailure::NotTriangulatable;
    return r;
  }
  return refine(track, clones, *init, cfg);
}

}  // namespace fmsckf
