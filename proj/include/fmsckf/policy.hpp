#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fmsckf/feature_track.hpp"

namespace fmsckf {

enum class PolicyMode { Msckf, Fmsckf };

const char* to_string(PolicyMode mode);
/// Accepts "msckf" / "fmsckf" (case-insensitive). Throws std::invalid_argument.
PolicyMode parse_policy_mode(const std::string& text);

struct PolicyConfig {
  PolicyMode mode = PolicyMode::Fmsckf;
  int max_poses = 20;         // N_p,max
  int min_features = 8;       // N_f,min
  int max_corners = 350;
  double gate_confidence = 0.95;
  std::size_t min_track_length = 3;

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

/// Per-run bookkeeping of the feature manager. Counters only increase.
struct TrackerLedger {
  std::map<FeatureId, FeatureTrack> active;
  std::vector<std::size_t> live_counts;  // tracked features per frame
  std::uint64_t extraction_events = 0;
  std::uint64_t features_extracted = 0;
  std::uint64_t update_events = 0;
  std::uint64_t prune_events = 0;
  std::uint64_t clones_pruned = 0;
  std::uint64_t keyframes = 0;
  std::uint64_t tracks_discarded_short = 0;
  std::uint64_t feature_lost_triggers = 0;
  std::uint64_t min_feature_triggers = 0;
  std::uint64_t pose_limit_triggers = 0;
};

enum class Trigger { None, FeatureLost, MinFeatures, PoseLimit };

const char* to_string(Trigger t);

struct UpdateDecision {
  Trigger trigger = Trigger::None;
  std::vector<FeatureTrack> tracks_to_use;  // sorted by feature id
  std::vector<FrameId> clones_to_prune;
  bool request_extraction = false;
  /// The newest frame became the only clone and the extraction keyframe.
  bool new_keyframe = false;
  bool pose_limit = false;
  std::size_t lost_tracks = 0;
};

/// Evenly spaced ranks among the oldest clones (the newest is never
/// chosen): rank_i = ⌊(i + ½)·m / k⌋ with m = clones − 1.
std::vector<FrameId> select_prune_set_poselimit(const std::vector<CameraClone>& clones,
                                                std::size_t k);

/// Decides the update and pruning for the newest frame. The frame must
/// already be cloned as clones.back(). Observations of features that are
/// not active in the ledger are ignored here; see admit_new_features.
///
/// Tracks consumed by the update are removed from the ledger, and for a
/// pose-limit prune the observations made in the victim clones are split
/// off the still-active tracks and used as separate update tracks.
UpdateDecision on_frame(TrackerLedger& ledger, const FrameObservations& frame,
                        const std::vector<CameraClone>& clones, const PolicyConfig& cfg);

/// Feature extraction at the boundary to the tracker: starts a track for
/// every observation of this frame whose id is not active, until the active
/// set reaches max_corners. Returns the number of new tracks.
std::size_t admit_new_features(TrackerLedger& ledger, const FrameObservations& frame,
                               const PolicyConfig& cfg);

/// Removes the listed clones and their 6 rows/columns of P. Surviving
/// entries are copied bit for bit. Throws std::invalid_argument for an
/// unknown frame id.
void prune_clones(FilterState& state, const std::vector<FrameId>& frame_ids);

inline FilterState pruned(FilterState state, const std::vector<FrameId>& frame_ids) {
  prune_clones(state, frame_ids);
  return state;
}

}  // namespace fmsckf
