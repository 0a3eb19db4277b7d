#pragma once

#include <string>
#include <vector>

#include "fmsckf/dataset_io.hpp"
#include "fmsckf/estimator.hpp"

namespace fmsckf {

struct PairedSample {
  TimestampNs timestamp = 0;
  Vec3 p_est = Vec3::Zero();
  Vec3 p_gt = Vec3::Zero();
  UnitQuaternion q_est;
  UnitQuaternion q_gt;
};

struct PairedSeries {
  std::vector<PairedSample> pairs;
};

/// Ground truth interpolated (slerp for attitude) to every estimate inside
/// its time range, then moved by the one rigid transform that makes the
/// first pair coincide. Throws std::invalid_argument without overlap.
PairedSeries align_and_interpolate(const std::vector<EstimateRecord>& estimates,
                                   const std::vector<GroundTruthRecord>& groundtruth);

/// Arc length of the ground truth between t0 and t1 (clamped to its range).
double path_length(const std::vector<GroundTruthRecord>& groundtruth, TimestampNs t0, TimestampNs t1);

double position_error(const PairedSample& s);
/// Rotation angle of q_est⁻¹ ⊗ q_gt, degrees.
double orientation_error_deg(const PairedSample& s);

/// Throw std::invalid_argument on an empty series.
double rmse_position(const PairedSeries& paired);
double rmse_orientation(const PairedSeries& paired);

/// 100·‖p_est(T) − p_gt(T)‖ / path_length. Throws unless path_length > 0.
double final_point_error_pct(const PairedSeries& paired, double path_length);

/// Frame-time statistics; the update rate is 1 / mean frame time.
struct TimingStats {
  double mean_us = 0.0;
  double median_us = 0.0;
  double p95_us = 0.0;
  double update_rate_hz = 0.0;
};
TimingStats timing_stats(const std::vector<double>& frame_times_us);
TimingStats timing_stats(const std::vector<EstimateRecord>& log);

/// Accuracy metrics and final-pose values (positions in m, Euler ZYX of
/// the body→global rotation in degrees) for an estimate log.
Summary accuracy_summary(const std::vector<EstimateRecord>& estimates,
                         const std::vector<GroundTruthRecord>& groundtruth);

/// Adds timing and the estimator's event counters to s.
void add_run_metrics(Summary& s, const std::vector<EstimateRecord>& estimates, const RunResult& run,
                     PolicyMode mode);

/// accuracy_summary plus add_run_metrics.
Summary run_summary(const std::vector<EstimateRecord>& estimates,
                    const std::vector<GroundTruthRecord>& groundtruth, const RunResult& run,
                    PolicyMode mode);

/// Ground truth of a simulated scenario in the file layout.
std::vector<GroundTruthRecord> groundtruth_records(const GroundTruth& truth);

/// Estimator run on a simulated scenario, initialized from the true state at
/// the first frame.
struct Experiment {
  RunResult run;
  Summary summary;
};
Experiment run_experiment(const Scenario& scenario, const FilterConfig& cfg);

/// Side-by-side rows of the metrics both summaries share, for the keys in
/// comparison_keys(). Throws std::invalid_argument when a key is missing.
struct ComparisonRow {
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // b − a
};
const std::vector<std::string>& comparison_keys();
std::vector<ComparisonRow> compare_summaries(const Summary& a, const Summary& b);
void write_comparison(const std::string& path, const std::vector<ComparisonRow>& rows,
                      const std::string& label_a, const std::string& label_b);

struct SweepPoint {
  int min_features = 0;
  double final_error_m = 0.0;
  double final_error_pct = 0.0;
  double mean_frame_time_us = 0.0;
  double update_rate_hz = 0.0;
  /// final position error (m) / update rate (Hz)
  double error_to_rate = 0.0;
  std::uint64_t extraction_events = 0;
  CovarianceAudit audit;  // merged over the repeats
  std::size_t clone_limit_violations = 0;
};

/// One FMSCKF run of the same scenario per N_f,min value. The frame time of
/// each point is the median over `timing_repeats` identical runs. Throws
/// std::invalid_argument for fewer than two values.
std::vector<SweepPoint> nfmin_sweep(const Scenario& scenario, const FilterConfig& cfg,
                                    const std::vector<int>& values, int timing_repeats = 1);

/// Spearman rank correlation with average ranks for ties; NaN when either
/// series is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Plot-ready tables.
void write_sweep_table(const std::string& path, const std::vector<SweepPoint>& points);
void write_trajectory_table(const std::string& path, const PairedSeries& paired);
void write_error_table(const std::string& path, const PairedSeries& paired);
void write_frame_time_table(const std::string& path, const std::vector<FrameReport>& reports);

}  // namespace fmsckf
