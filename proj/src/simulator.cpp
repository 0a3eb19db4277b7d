#include "fmsckf/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fmsckf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Periods of the roll/pitch excitation.
constexpr double kRollPeriod = 7.0;
constexpr double kPitchPeriod = 5.0;

double seconds_since_start(const ScenarioConfig& cfg, TimestampNs t) {
  return static_cast<double>(t - cfg.start_time_ns) * 1e-9;
}

struct Translational {
  Vec3 p, v, a;
};

Translational translation(const ScenarioConfig& cfg, double t) {
  const double A = cfg.vertical_amplitude_m;
  switch (cfg.kind) {
    case TrajectoryKind::Circle: {
      const double R = cfg.radius_m;
      const double w = kTwoPi / cfg.period_s;
      const double c = std::cos(w * t), s = std::sin(w * t);
      const double c2 = std::cos(2 * w * t), s2 = std::sin(2 * w * t);
      return {Vec3(R * c, R * s, A * s2), Vec3(-R * w * s, R * w * c, 2 * A * w * c2),
              Vec3(-R * w * w * c, -R * w * w * s, -4 * A * w * w * s2)};
    }
    case TrajectoryKind::Lissajous: {
      const double R = cfg.radius_m;
      const double Ry = 0.6 * R;
      const double w = kTwoPi / cfg.period_s;
      const double c = std::cos(w * t), s = std::sin(w * t);
      const double c2 = std::cos(2 * w * t), s2 = std::sin(2 * w * t);
      return {Vec3(R * s, Ry * s2, A * s), Vec3(R * w * c, 2 * Ry * w * c2, A * w * c),
              Vec3(-R * w * w * s, -4 * Ry * w * w * s2, -A * w * w * s)};
    }
    case TrajectoryKind::StraightWithTurns: {
      const double u = cfg.speed_mps;
      const double L = cfg.turn_amplitude_m;
      const double W = kTwoPi / cfg.turn_period_s;
      const double x0 = -0.5 * u * cfg.duration_s;
      const double s = std::sin(W * t), c = std::cos(W * t);
      const double sh = std::sin(0.5 * W * t), ch = std::cos(0.5 * W * t);
      return {Vec3(x0 + u * t, L * s, A * sh), Vec3(u, L * W * c, 0.5 * A * W * ch),
              Vec3(0.0, -L * W * W * s, -0.25 * A * W * W * sh)};
    }
  }
  throw std::logic_error("unhandled trajectory kind");
}

template <class Dist, class Rng>
Vec3 draw3(Dist& dist, Rng& rng) {
  const double x = dist(rng);
  const double y = dist(rng);
  const double z = dist(rng);
  return {x, y, z};
}

}  // namespace

const char* to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::Circle: return "circle";
    case TrajectoryKind::Lissajous: return "lissajous";
    case TrajectoryKind::StraightWithTurns: return "straight_with_turns";
  }
  return "unknown";
}

TrajectoryKind parse_trajectory_kind(const std::string& text) {
  std::string k;
  std::transform(text.begin(), text.end(), std::back_inserter(k), [](unsigned char c) {
    return c == '-' ? '_' : static_cast<char>(std::tolower(c));
  });
  if (k == "circle") return TrajectoryKind::Circle;
  if (k == "lissajous") return TrajectoryKind::Lissajous;
  if (k == "straight_with_turns" || k == "straight") return TrajectoryKind::StraightWithTurns;
  throw std::invalid_argument("unknown trajectory kind '" + text + "'");
}

Extrinsics default_extrinsics() {
  Mat3 c_r_i;
  c_r_i << -1.0, 0.0, 0.0,
            0.0, 0.0, -1.0,
            0.0, -1.0, 0.0;
  Extrinsics ext;
  ext.q_CI = UnitQuaternion::from_rotation(c_r_i);
  ext.p_IC = Vec3(0.05, 0.0, 0.02);
  return ext;
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(std::isfinite(duration_s) && duration_s > 0.0, "duration_s must be positive");
  require(cam_rate_hz > 0.0, "cam_rate_hz must be positive");
  require(imu_rate_hz >= 2.0 * cam_rate_hz, "imu_rate_hz must be at least twice cam_rate_hz");
  require(1.0 / imu_rate_hz <= kMaxImuDt, "imu_rate_hz too low");
  require(radius_m > 0.0 && period_s > 0.0, "radius_m and period_s must be positive");
  require(speed_mps > 0.0 && turn_period_s > 0.0, "speed_mps and turn_period_s must be positive");
  require(turn_amplitude_m >= 0.0 && vertical_amplitude_m >= 0.0 && attitude_wobble_rad >= 0.0,
          "amplitudes must be >= 0");
  require(landmark_count >= 0, "landmark_count must be >= 0");
  require(landmark_inner_m > 0.0 && landmark_inner_m < landmark_outer_m,
          "landmark shell needs 0 < inner < outer");
  require(landmark_min_z < landmark_max_z, "landmark_min_z must be below landmark_max_z");
  require(fov_half_angle_rad > 0.0 && fov_half_angle_rad < 0.5 * std::numbers::pi,
          "fov_half_angle_rad must lie in (0, pi/2)");
  require(min_depth_m > 0.0, "min_depth_m must be positive");
  require(initial_bias_g_std >= 0.0 && initial_bias_a_std >= 0.0, "bias stds must be >= 0");
  noise.validate();
}

double GroundTruth::path_length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    len += (samples[i].p - samples[i - 1].p).norm();
  }
  return len;
}

TrajectoryPoint trajectory_at(const ScenarioConfig& cfg, TimestampNs ts) {
  const double t = seconds_since_start(cfg, ts);
  const Translational tr = translation(cfg, t);

  const double vxy2 = tr.v.x() * tr.v.x() + tr.v.y() * tr.v.y();
  const double yaw = std::atan2(tr.v.y(), tr.v.x());
  const double yaw_rate = (tr.v.x() * tr.a.y() - tr.v.y() * tr.a.x()) / vxy2;

  const double w = cfg.attitude_wobble_rad;
  const double wr = kTwoPi / kRollPeriod;
  const double wp = kTwoPi / kPitchPeriod;
  const double roll = w * std::sin(wr * t);
  const double roll_rate = w * wr * std::cos(wr * t);
  const double pitch = w * std::sin(wp * t + 0.5);
  const double pitch_rate = w * wp * std::cos(wp * t + 0.5);

  const double sr = std::sin(roll), cr = std::cos(roll);
  const double sp = std::sin(pitch), cp = std::cos(pitch);

  TrajectoryPoint pt;
  pt.timestamp = ts;
  pt.q = from_euler_zyx(roll, pitch, yaw);
  pt.p = tr.p;
  pt.v = tr.v;
  pt.accel = tr.a;
  pt.omega = Vec3(roll_rate - yaw_rate * sp, pitch_rate * cr + yaw_rate * sr * cp,
                  -pitch_rate * sr + yaw_rate * cr * cp);
  return pt;
}

GroundTruth generate_trajectory(const ScenarioConfig& cfg) {
  cfg.validate();
  GroundTruth gt;
  const double dt_ns = 1e9 / cfg.imu_rate_hz;
  const auto count = static_cast<std::int64_t>(std::floor(cfg.duration_s * cfg.imu_rate_hz + 1e-9));
  gt.samples.reserve(static_cast<std::size_t>(count + 1));
  for (std::int64_t k = 0; k <= count; ++k) {
    const TimestampNs t = cfg.start_time_ns + static_cast<TimestampNs>(std::llround(k * dt_ns));
    gt.samples.push_back(trajectory_at(cfg, t));
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  gt.landmarks.reserve(static_cast<std::size_t>(cfg.landmark_count));
  for (int i = 0; i < cfg.landmark_count; ++i) {
    const double depth = cfg.landmark_inner_m + (cfg.landmark_outer_m - cfg.landmark_inner_m) * unit(rng);
    const double z = cfg.landmark_min_z + (cfg.landmark_max_z - cfg.landmark_min_z) * unit(rng);
    const double s = unit(rng);
    if (cfg.kind == TrajectoryKind::StraightWithTurns) {
      const double half = 0.5 * cfg.speed_mps * cfg.duration_s + 10.0;
      gt.landmarks.emplace_back(-half + 2.0 * half * s, -depth, z);
    } else {
      const double theta = kTwoPi * s;
      gt.landmarks.emplace_back(depth * std::cos(theta), depth * std::sin(theta), z);
    }
  }
  return gt;
}

std::vector<ImuSample> synthesize_imu(GroundTruth& gt, const NoiseConfig& noise,
                                      const Vec3& initial_b_g, const Vec3& initial_b_a,
                                      const Vec3& gravity, std::uint64_t seed) {
  noise.validate();
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ImuSample> out;
  out.reserve(gt.samples.size());
  Vec3 b_g = initial_b_g;
  Vec3 b_a = initial_b_a;
  for (std::size_t k = 0; k < gt.samples.size(); ++k) {
    auto& s = gt.samples[k];
    double dt = 0.0;
    if (k + 1 < gt.samples.size()) {
      dt = static_cast<double>(gt.samples[k + 1].timestamp - s.timestamp) * 1e-9;
    } else if (k > 0) {
      dt = static_cast<double>(s.timestamp - gt.samples[k - 1].timestamp) * 1e-9;
    }
    s.b_g = b_g;
    s.b_a = b_a;
    ImuSample m;
    m.timestamp = s.timestamp;
    const double white = dt > 0.0 ? 1.0 / std::sqrt(dt) : 0.0;
    const Vec3 n_g = draw3(normal, rng) * (noise.sigma_g * white);
    const Vec3 n_a = draw3(normal, rng) * (noise.sigma_a * white);
    m.gyro = s.omega + b_g + n_g;
    m.accel = quat_to_rot(s.q) * (s.accel - gravity) + b_a + n_a;
    out.push_back(m);
    const double walk = std::sqrt(dt);
    b_g += draw3(normal, rng) * (noise.sigma_wg * walk);
    b_a += draw3(normal, rng) * (noise.sigma_wa * walk);
  }
  return out;
}

std::vector<TimestampNs> camera_timestamps(const ScenarioConfig& cfg) {
  std::vector<TimestampNs> out;
  const double dt_ns = 1e9 / cfg.cam_rate_hz;
  const auto count = static_cast<std::int64_t>(std::floor(cfg.duration_s * cfg.cam_rate_hz + 1e-9));
  for (std::int64_t k = 0; k <= count; ++k) {
    out.push_back(cfg.start_time_ns + static_cast<TimestampNs>(std::llround(k * dt_ns)));
  }
  return out;
}

bool in_field_of_view(const Vec3& p_cam, double fov_half_angle, double min_depth) {
  if (p_cam.z() < min_depth) return false;
  return std::atan2(p_cam.head<2>().norm(), p_cam.z()) <= fov_half_angle;
}

std::vector<FrameObservations> synthesize_tracks(const GroundTruth& gt, const ScenarioConfig& cfg,
                                                 const Extrinsics& ext, const NoiseConfig& noise,
                                                 std::uint64_t seed) {
  noise.validate();
  std::mt19937_64 rng(seed ^ 0xbf58476d1ce4e5b9ULL);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<FeatureId> current_id(gt.landmarks.size(), -1);
  FeatureId next_id = 0;
  std::vector<FrameObservations> frames;
  FrameId frame_id = 0;
  for (TimestampNs t : camera_timestamps(cfg)) {
    const TrajectoryPoint pt = trajectory_at(cfg, t);
    const CameraClone cam = camera_pose(ImuState{pt.q, Vec3::Zero(), pt.v, Vec3::Zero(), pt.p},
                                        ext, frame_id, t);
    const Mat3 C = quat_to_rot(cam.q);
    FrameObservations frame;
    frame.timestamp = t;
    frame.frame_id = frame_id++;
    for (std::size_t i = 0; i < gt.landmarks.size(); ++i) {
      const Vec3 p_cam = C * (gt.landmarks[i] - cam.p);
      if (!in_field_of_view(p_cam, cfg.fov_half_angle_rad, cfg.min_depth_m)) {
        current_id[i] = -1;
        continue;
      }
      if (current_id[i] < 0) current_id[i] = next_id++;
      Vec2 z = p_cam.head<2>() / p_cam.z();
      const double nx = normal(rng);
      const double ny = normal(rng);
      z += noise.sigma_im * Vec2(nx, ny);
      frame.features.push_back({current_id[i], z});
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

Scenario simulate(const ScenarioConfig& cfg) {
  cfg.validate();
  Scenario sc;
  sc.config = cfg;
  sc.truth = generate_trajectory(cfg);
  std::mt19937_64 rng(cfg.seed ^ 0x94d049bb133111ebULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec3 b_g0 = draw3(normal, rng) * cfg.initial_bias_g_std;
  const Vec3 b_a0 = draw3(normal, rng) * cfg.initial_bias_a_std;
  sc.imu = synthesize_imu(sc.truth, cfg.noise, b_g0, b_a0, cfg.gravity, cfg.seed);
  sc.frames = synthesize_tracks(sc.truth, cfg, cfg.extrinsics, cfg.noise, cfg.seed);
  return sc;
}

}  // namespace fmsckf
