#pragma once

#include <cstdint>
#include <vector>

#include "fmsckf/filter_state.hpp"

namespace fmsckf {

using FeatureId = std::int64_t;

struct FeatureObservation {
  FrameId frame_id = 0;
  Vec2 z = Vec2::Zero();  // normalized image coordinates (X/Z, Y/Z)
};

/// Observations of one landmark ordered by strictly increasing frame id.
struct FeatureTrack {
  FeatureId feature_id = 0;
  std::vector<FeatureObservation> observations;

  std::size_t size() const { return observations.size(); }
  bool empty() const { return observations.empty(); }
};

/// Everything the tracker reports for one image.
struct FrameObservations {
  TimestampNs timestamp = 0;
  FrameId frame_id = 0;
  struct Entry {
    FeatureId feature_id = 0;
    Vec2 z = Vec2::Zero();
  };
  std::vector<Entry> features;
};

}  // namespace fmsckf
