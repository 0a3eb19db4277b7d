#pragma once

#include <optional>
#include <vector>

#include "fmsckf/feature_track.hpp"

namespace fmsckf {

enum class TriangulationFailure {
  None,
  TooFewObservations,
  NotTriangulatable,
  NegativeDepth,
  Diverged,
  HighReprojection,
  SmallBaseline,
};

const char* to_string(TriangulationFailure f);

struct TriangulationConfig {
  std::size_t min_observations = 3;
  int max_iterations = 10;
  double step_tolerance = 1e-8;
  int max_halvings = 5;
  int max_cost_increases = 3;
  /// Reject when per-axis RMS reprojection exceeds this (3·σ_im by default).
  double max_rms_reprojection = 3.0 * 2.0e-3;
  double min_baseline_ratio = 0.02;
};

struct TriangulationResult {
  Vec3 p_global = Vec3::Zero();
  bool converged = false;
  double rms_reprojection = 0.0;
  int iterations = 0;
  double last_step_norm = 0.0;
  TriangulationFailure failure = TriangulationFailure::None;
};

struct InitialEstimate {
  Vec3 p_global = Vec3::Zero();
  /// Set when the point lies behind the first or last observing camera.
  bool behind_camera = false;
};

/// Midpoint of the closest approach between the rays of the first and last
/// observation. std::nullopt when the rays are parallel or the baseline is
/// zero. Throws std::invalid_argument if a clone is missing or the track
/// has fewer than two observations.
std::optional<InitialEstimate> linear_init(const FeatureTrack& track,
                                           const std::vector<CameraClone>& clones);

/// Gauss–Newton on the reprojection error in inverse-depth coordinates
/// anchored at the first observing camera, with step halving.
TriangulationResult refine(const FeatureTrack& track, const std::vector<CameraClone>& clones,
                           const InitialEstimate& init, const TriangulationConfig& cfg = {});

/// linear_init followed by refine.
TriangulationResult triangulate(const FeatureTrack& track, const std::vector<CameraClone>& clones,
                                const TriangulationConfig& cfg = {});

}  // namespace fmsckf
