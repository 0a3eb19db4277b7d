#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fmsckf/augmentation.hpp"
#include "fmsckf/feature_track.hpp"
#include "fmsckf/imu_propagation.hpp"

namespace fmsckf {

enum class TrajectoryKind { Circle, Lissajous, StraightWithTurns };

const char* to_string(TrajectoryKind kind);
TrajectoryKind parse_trajectory_kind(const std::string& text);

/// Camera looking out of the body's right-hand side (−y_b), the outward
/// direction for the counter-clockwise circle.
Extrinsics default_extrinsics();

struct ScenarioConfig {
  TrajectoryKind kind = TrajectoryKind::Circle;
  double duration_s = 60.0;
  double imu_rate_hz = 200.0;
  double cam_rate_hz = 10.0;
  TimestampNs start_time_ns = 0;

  // Circle and lissajous: horizontal radius and period. Straight: forward
  // speed, lateral weave amplitude and period.
  double radius_m = 5.0;
  double period_s = 20.0;
  double speed_mps = 1.5;
  double turn_amplitude_m = 1.0;
  double turn_period_s = 10.0;
  double vertical_amplitude_m = 0.5;
  double attitude_wobble_rad = 0.05;

  // Landmarks on a cylindrical shell around the origin (circle, lissajous)
  // or on a wall to the right of the path (straight).
  int landmark_count = 300;
  double landmark_inner_m = 9.0;
  double landmark_outer_m = 12.0;
  double landmark_min_z = -2.0;
  double landmark_max_z = 2.0;
  double fov_half_angle_rad = 0.7853981633974483;
  double min_depth_m = 0.1;

  NoiseConfig noise{0.0, 0.0, 0.0, 0.0, 0.0};
  double initial_bias_g_std = 0.0;  // rad/s
  double initial_bias_a_std = 0.0;  // m/s²

  Extrinsics extrinsics = default_extrinsics();
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Kinematics at one instant; q is ᴵq_G, omega is in the body frame and
/// accel is ᴳa (without gravity).
struct TrajectoryPoint {
  TimestampNs timestamp = 0;
  UnitQuaternion q;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  Vec3 b_g = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();
};

struct GroundTruth {
  std::vector<TrajectoryPoint> samples;  // at IMU rate
  std::vector<Vec3> landmarks;

  /// Integrated arc length of the sampled positions.
  double path_length() const;
};

/// Analytic trajectory evaluated at an arbitrary time.
TrajectoryPoint trajectory_at(const ScenarioConfig& cfg, TimestampNs t);

/// Samples the trajectory at the IMU rate and draws the landmark field.
GroundTruth generate_trajectory(const ScenarioConfig& cfg);

/// ω_m = ω + b_g + n_g, a_m = ᴵR_G(ᴳa − ᴳg) + b_a + n_a with white noise of
/// std σ/√dt and bias random walks of std σ_w·√dt per step. The bias
/// trajectory is written back into gt.
std::vector<ImuSample> synthesize_imu(GroundTruth& gt, const NoiseConfig& noise,
                                      const Vec3& initial_b_g, const Vec3& initial_b_a,
                                      const Vec3& gravity, std::uint64_t seed);

/// Camera frame timestamps in [start, start + duration].
std::vector<TimestampNs> camera_timestamps(const ScenarioConfig& cfg);

/// Whether a landmark is inside the symmetric viewing cone.
bool in_field_of_view(const Vec3& p_cam, double fov_half_angle, double min_depth);

/// Everything a pinhole tracker would report: every landmark in view with a
/// persistent id while continuously visible (re-entry gets a new id) and
/// σ_im pixel noise. Which ids are actually used is decided downstream by
/// feature extraction (see admit_new_features).
std::vector<FrameObservations> synthesize_tracks(const GroundTruth& gt, const ScenarioConfig& cfg,
                                                 const Extrinsics& ext, const NoiseConfig& noise,
                                                 std::uint64_t seed);

struct Scenario {
  ScenarioConfig config;
  GroundTruth truth;
  std::vector<ImuSample> imu;
  std::vector<FrameObservations> frames;
};

/// Full scenario: trajectory, IMU and tracks from one seed.
Scenario simulate(const ScenarioConfig& cfg);

}  // namespace fmsckf
