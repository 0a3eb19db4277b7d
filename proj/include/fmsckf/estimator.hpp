#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "fmsckf/config.hpp"
#include "fmsckf/dataset_io.hpp"
#include "fmsckf/msckf_update.hpp"

namespace fmsckf {

/// What happened to one camera frame.
struct FrameReport {
  TimestampNs timestamp = 0;
  FrameId frame_id = 0;
  Trigger trigger = Trigger::None;
  std::size_t tracks_offered = 0;
  std::size_t tracks_accepted = 0;
  std::size_t residual_rows = 0;
  bool update_applied = false;
  bool compressed = false;
  std::size_t clones_after = 0;
  int error_dim = 0;
  double frame_time_us = 0.0;
};

struct RunStats {
  std::size_t frames = 0;
  std::size_t imu_samples = 0;
  std::size_t updates_applied = 0;
  std::size_t updates_skipped = 0;
  std::size_t tracks_accepted = 0;
  std::size_t gate_rejections = 0;
  std::size_t jacobian_rejections = 0;
  std::size_t nullspace_rejections = 0;
  std::map<TriangulationFailure, std::size_t> triangulation_failures;
  std::size_t max_clones = 0;
  std::size_t clone_limit_violations = 0;
  std::vector<std::string> diagnostics;
};

/// Initial state from ground truth, with the covariance from cfg.
InitialConditions initial_conditions(const GroundTruthRecord& gt, const FilterConfig& cfg);

/// Static start: roll and pitch from the mean specific force of the samples
/// up to t_end, zero yaw, position and velocity. Throws std::invalid_argument
/// if there are no samples in range.
InitialConditions static_initialization(const std::vector<ImuSample>& imu, TimestampNs t_end,
                                        const FilterConfig& cfg);

/// Ground truth at t, linearly interpolated (slerp for attitude). Throws
/// std::out_of_range outside the covered interval.
GroundTruthRecord interpolate_groundtruth(const std::vector<GroundTruthRecord>& gt, TimestampNs t);

/// Offline MSCKF / Fast-MSCKF estimator fed with a timestamp-ordered
/// stream of IMU samples and tracker frames.
class Estimator {
 public:
  Estimator(const FilterConfig& cfg, const InitialConditions& init);

  /// Samples must arrive with strictly increasing timestamps.
  void add_imu(const ImuSample& sample);

  /// Propagates to the frame time, clones, updates and prunes. Needs IMU
  /// data up to the frame time; a short tail (≤ kMaxImuDt) past the last
  /// sample holds that sample.
  EstimateRecord process_frame(const FrameObservations& frame);

  /// Propagation only (no camera), used for dead reckoning.
  void propagate_to(TimestampNs t);

  EstimateRecord estimate(double frame_time_us = 0.0) const;

  const FilterState& state() const { return state_; }
  const TrackerLedger& ledger() const { return ledger_; }
  const CovarianceAudit& audit() const { return audit_; }
  const RunStats& stats() const { return stats_; }
  const std::vector<FrameReport>& reports() const { return reports_; }
  const FilterConfig& config() const { return cfg_; }

 private:
  ImuSample sample_at(TimestampNs t) const;

  FilterConfig cfg_;
  FilterState state_;
  TrackerLedger ledger_;
  CovarianceAudit audit_;
  RunStats stats_;
  std::vector<FrameReport> reports_;
  std::deque<ImuSample> imu_;
  std::int64_t imu_received_ = 0;
};

struct RunResult {
  std::vector<EstimateRecord> estimates;
  std::vector<FrameReport> reports;
  TrackerLedger ledger;
  CovarianceAudit audit;
  RunStats stats;
};

/// Replays the merged stream: IMU samples are fed up to each frame time,
/// then the frame is processed. Frames before the initial time are skipped.
RunResult run_estimator(const FilterConfig& cfg, const InitialConditions& init,
                        const std::vector<ImuSample>& imu,
                        const std::vector<FrameObservations>& frames);

/// IMU-only propagation from init, recording a state every `every_ns`.
std::vector<EstimateRecord> dead_reckoning(const FilterConfig& cfg, const InitialConditions& init,
                                           const std::vector<ImuSample>& imu, TimestampNs every_ns);

}  // namespace fmsckf
