#include "fmsckf/policy.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

namespace fmsckf {

const char* to_string(PolicyMode mode) {
  return mode == PolicyMode::Msckf ? "msckf" : "fmsckf";
}

PolicyMode parse_policy_mode(const std::string& text) {
  std::string lower;
  std::transform(text.begin(), text.end(), std::back_inserter(lower),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "msckf") return PolicyMode::Msckf;
  if (lower == "fmsckf") return PolicyMode::Fmsckf;
  throw std::invalid_argument("unknown policy mode '" + text + "' (expected msckf or fmsckf)");
}

void PolicyConfig::validate() const {
  if (max_poses < 3) throw std::invalid_argument("max_poses must be >= 3");
  if (min_features < 1 || min_features >= max_corners) {
    throw std::invalid_argument("min_features must satisfy 1 <= min_features < max_corners");
  }
  if (!(gate_confidence > 0.0 && gate_confidence < 1.0)) {
    throw std::invalid_argument("gate_confidence must lie in (0, 1)");
  }
  if (min_track_length < 2) throw std::invalid_argument("min_track_length must be >= 2");
}

const char* to_string(Trigger t) {
  switch (t) {
    case Trigger::None: return "none";
    case Trigger::FeatureLost: return "feature_lost";
    case Trigger::MinFeatures: return "min_features";
    case Trigger::PoseLimit: return "pose_limit";
  }
  return "unknown";
}

std::vector<FrameId> select_prune_set_poselimit(const std::vector<CameraClone>& clones,
                                                std::size_t k) {
  std::vector<FrameId> out;
  if (k == 0 || clones.size() < 2) return out;
  const std::size_t m = clones.size() - 1;
  k = std::min(k, m);
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    // ⌊(2i + 1)·m / 2k⌋ in integer arithmetic.
    const std::size_t rank = ((2 * i + 1) * m) / (2 * k);
    out.push_back(clones[rank].frame_id);
  }
  return out;
}

UpdateDecision on_frame(TrackerLedger& ledger, const FrameObservations& frame,
                        const std::vector<CameraClone>& clones, const PolicyConfig& cfg) {
  if (clones.empty() || clones.back().frame_id != frame.frame_id) {
    throw std::invalid_argument("frame must be augmented as the newest clone before on_frame");
  }
  const FrameId newest = frame.frame_id;
  UpdateDecision d;

  std::set<FeatureId> seen;
  for (const auto& f : frame.features) {
    if (!seen.insert(f.feature_id).second) {
      throw std::invalid_argument("duplicate feature id " + std::to_string(f.feature_id) +
                                  " in frame " + std::to_string(newest));
    }
    auto it = ledger.active.find(f.feature_id);
    if (it != ledger.active.end()) it->second.observations.push_back({newest, f.z});
  }

  std::vector<FeatureTrack> used;
  for (auto it = ledger.active.begin(); it != ledger.active.end();) {
    if (!seen.count(it->first)) {
      used.push_back(std::move(it->second));
      it = ledger.active.erase(it);
      ++d.lost_tracks;
    } else {
      ++it;
    }
  }
  const std::size_t live = ledger.active.size();
  ledger.live_counts.push_back(live);

  std::set<FrameId> prune;
  bool min_features_fired = false;
  if (cfg.mode == PolicyMode::Fmsckf && live < static_cast<std::size_t>(cfg.min_features)) {
    min_features_fired = true;
    for (auto& [id, track] : ledger.active) {
      // The newest observation seeds the track re-extracted at this keyframe,
      // so it is not spent in this update.
      if (!track.observations.empty() && track.observations.back().frame_id == newest) {
        track.observations.pop_back();
      }
      used.push_back(std::move(track));
    }
    ledger.active.clear();
    for (std::size_t i = 0; i + 1 < clones.size(); ++i) prune.insert(clones[i].frame_id);
    d.request_extraction = true;
    d.new_keyframe = true;
  } else {
    std::set<FrameId> referenced;
    for (const auto& [id, track] : ledger.active) {
      for (const auto& obs : track.observations) referenced.insert(obs.frame_id);
    }
    std::vector<CameraClone> remaining;
    for (std::size_t i = 0; i < clones.size(); ++i) {
      const bool is_newest = i + 1 == clones.size();
      if (!is_newest && !referenced.count(clones[i].frame_id)) {
        prune.insert(clones[i].frame_id);
      } else {
        remaining.push_back(clones[i]);
      }
    }
    if (remaining.size() >= static_cast<std::size_t>(cfg.max_poses)) {
      d.pose_limit = true;
      const auto victims = select_prune_set_poselimit(
          remaining, static_cast<std::size_t>(cfg.max_poses / 3));
      const std::set<FrameId> victim_set(victims.begin(), victims.end());
      for (auto& [id, track] : ledger.active) {
        FeatureTrack part;
        part.feature_id = id;
        auto& obs = track.observations;
        auto split = std::stable_partition(obs.begin(), obs.end(), [&](const FeatureObservation& o) {
          return !victim_set.count(o.frame_id);
        });
        part.observations.assign(split, obs.end());
        obs.erase(split, obs.end());
        if (!part.empty()) used.push_back(std::move(part));
      }
      prune.insert(victims.begin(), victims.end());
    }
    d.request_extraction = cfg.mode == PolicyMode::Msckf;
  }

  for (auto& t : used) {
    if (t.size() >= cfg.min_track_length) {
      d.tracks_to_use.push_back(std::move(t));
    } else {
      ++ledger.tracks_discarded_short;
    }
  }
  std::sort(d.tracks_to_use.begin(), d.tracks_to_use.end(),
            [](const FeatureTrack& a, const FeatureTrack& b) { return a.feature_id < b.feature_id; });
  d.clones_to_prune.assign(prune.begin(), prune.end());

  if (!d.tracks_to_use.empty()) {
    if (d.pose_limit) {
      d.trigger = Trigger::PoseLimit;
    } else if (min_features_fired) {
      d.trigger = Trigger::MinFeatures;
    } else {
      d.trigger = Trigger::FeatureLost;
    }
  }
  if (d.lost_tracks > 0) ++ledger.feature_lost_triggers;
  if (min_features_fired) {
    ++ledger.min_feature_triggers;
    ++ledger.keyframes;
  }
  if (d.pose_limit) ++ledger.pose_limit_triggers;
  if (d.trigger != Trigger::None) ++ledger.update_events;
  if (!d.clones_to_prune.empty()) {
    ++ledger.prune_events;
    ledger.clones_pruned += d.clones_to_prune.size();
  }
  return d;
}

std::size_t admit_new_features(TrackerLedger& ledger, const FrameObservations& frame,
                               const PolicyConfig& cfg) {
  ++ledger.extraction_events;
  std::size_t admitted = 0;
  for (const auto& f : frame.features) {
    if (ledger.active.size() >= static_cast<std::size_t>(cfg.max_corners)) break;
    if (ledger.active.count(f.feature_id)) continue;
    FeatureTrack track;
    track.feature_id = f.feature_id;
    track.observations.push_back({frame.frame_id, f.z});
    ledger.active.emplace(f.feature_id, std::move(track));
    ++admitted;
  }
  ledger.features_extracted += admitted;
  return admitted;
}

void prune_clones(FilterState& state, const std::vector<FrameId>& frame_ids) {
  if (frame_ids.empty()) return;
  const std::set<FrameId> drop(frame_ids.begin(), frame_ids.end());
  for (FrameId id : drop) {
    if (state.clone_offset(id) < 0) {
      throw std::invalid_argument("cannot prune unknown frame " + std::to_string(id));
    }
  }
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(state.error_dim()));
  for (int i = 0; i < kImuErrorDim; ++i) keep.push_back(i);
  std::vector<CameraClone> kept_clones;
  for (std::size_t c = 0; c < state.clones.size(); ++c) {
    if (drop.count(state.clones[c].frame_id)) continue;
    const int off = kImuErrorDim + kCloneErrorDim * static_cast<int>(c);
    for (int k = 0; k < kCloneErrorDim; ++k) keep.push_back(off + k);
    kept_clones.push_back(state.clones[c]);
  }
  MatX P = state.P(keep, keep);
  state.P = std::move(P);
  state.clones = std::move(kept_clones);
}

}  // namespace fmsckf
