#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "fmsckf/estimator.hpp"
#include "fmsckf/evaluation.hpp"
#include "fmsckf/simulator.hpp"
#include "fmsckf/triangulation.hpp"

using namespace fmsckf;

namespace {

ScenarioConfig short_circle(double duration = 5.0) {
  ScenarioConfig cfg;
  cfg.duration_s = duration;
  return cfg;
}

}  // namespace

TEST(Trajectory, StraightHasConstantVelocityWithoutWeave) {
  ScenarioConfig cfg;
  cfg.kind = TrajectoryKind::StraightWithTurns;
  cfg.turn_amplitude_m = 0.0;
  cfg.vertical_amplitude_m = 0.0;
  cfg.attitude_wobble_rad = 0.0;
  cfg.duration_s = 10.0;
  const GroundTruth gt = generate_trajectory(cfg);
  for (const auto& s : gt.samples) {
    EXPECT_LT(s.omega.norm(), 1e-12);
    EXPECT_LT((s.v - Vec3(cfg.speed_mps, 0, 0)).norm(), 1e-12);
    EXPECT_LT(s.accel.norm(), 1e-12);
  }
}

TEST(Trajectory, CircleSpeed) {
  ScenarioConfig cfg = short_circle(20.0);
  cfg.vertical_amplitude_m = 0.0;
  const GroundTruth gt = generate_trajectory(cfg);
  const double speed = 2.0 * std::numbers::pi * 5.0 / 20.0;
  for (const auto& s : gt.samples) {
    EXPECT_NEAR(s.v.norm(), speed, 1e-12);
    EXPECT_NEAR(s.p.head<2>().norm(), 5.0, 1e-12);
  }
  EXPECT_NEAR(gt.path_length(), 2.0 * std::numbers::pi * 5.0, 1e-3);
}

TEST(Trajectory, VelocityMatchesFiniteDifference) {
  for (auto kind : {TrajectoryKind::Circle, TrajectoryKind::Lissajous, TrajectoryKind::StraightWithTurns}) {
    ScenarioConfig cfg = short_circle(20.0);
    cfg.kind = kind;
    const TimestampNs h = 1000;  // 1 µs
    for (TimestampNs t = 1'000'000'000; t < 19'000'000'000; t += 1'700'000'000) {
      const auto a = trajectory_at(cfg, t - h), b = trajectory_at(cfg, t + h), c = trajectory_at(cfg, t);
      const Vec3 v_fd = (b.p - a.p) / 2e-6;
      const Vec3 a_fd = (b.v - a.v) / 2e-6;
      EXPECT_LT((v_fd - c.v).norm(), 1e-6) << to_string(kind);
      EXPECT_LT((a_fd - c.accel).norm(), 1e-6) << to_string(kind);
      // ᴵq̇_G = ½Ω(ω)q, checked through the body-frame angular velocity
      // recovered from C(t+h)C(t−h)ᵀ ≈ I − 2h[ω×].
      const Mat3 dR = quat_to_rot(b.q) * quat_to_rot(a.q).transpose();
      const Vec3 w_fd = Vec3(dR(1, 2) - dR(2, 1), dR(2, 0) - dR(0, 2), dR(0, 1) - dR(1, 0)) / (2.0 * 2e-6);
      EXPECT_LT((w_fd - c.omega).norm(), 1e-5) << to_string(kind);
    }
  }
}

TEST(Simulate, Deterministic) {
  ScenarioConfig cfg = short_circle();
  cfg.noise = NoiseConfig{};
  cfg.initial_bias_a_std = 0.05;
  const Scenario a = simulate(cfg);
  const Scenario b = simulate(cfg);
  ASSERT_EQ(a.imu.size(), b.imu.size());
  for (std::size_t i = 0; i < a.imu.size(); ++i) {
    EXPECT_EQ(a.imu[i].gyro, b.imu[i].gyro);
    EXPECT_EQ(a.imu[i].accel, b.imu[i].accel);
  }
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    ASSERT_EQ(a.frames[i].features.size(), b.frames[i].features.size());
    for (std::size_t j = 0; j < a.frames[i].features.size(); ++j) {
      EXPECT_EQ(a.frames[i].features[j].feature_id, b.frames[i].features[j].feature_id);
      EXPECT_EQ(a.frames[i].features[j].z, b.frames[i].features[j].z);
    }
  }
  cfg.seed = 2;
  const Scenario c = simulate(cfg);
  EXPECT_NE(a.imu[10].accel, c.imu[10].accel);
}

TEST(Simulate, RatesAndCounts) {
  const Scenario sc = simulate(short_circle(5.0));
  EXPECT_EQ(sc.imu.size(), 1001u);
  EXPECT_EQ(sc.frames.size(), 51u);
  EXPECT_EQ(sc.imu[1].timestamp - sc.imu[0].timestamp, 5'000'000);
  EXPECT_EQ(sc.frames[1].timestamp, 100'000'000);
  EXPECT_EQ(sc.truth.landmarks.size(), 300u);
}

TEST(SynthesizeImu, HoverZeroNoise) {
  GroundTruth gt;
  const UnitQuaternion q = from_euler_zyx(0.1, -0.2, 0.3);
  for (int k = 0; k < 10; ++k) {
    TrajectoryPoint p;
    p.timestamp = k * 5'000'000;
    p.q = q;
    gt.samples.push_back(p);
  }
  const Vec3 g(0, 0, -9.81);
  const auto imu = synthesize_imu(gt, NoiseConfig{0, 0, 0, 0, 0}, Vec3::Zero(), Vec3::Zero(), g, 1);
  for (const auto& m : imu) {
    EXPECT_EQ(m.gyro, Vec3::Zero());
    EXPECT_LT((m.accel - quat_to_rot(q) * (-g)).norm(), 1e-14);
  }
}

TEST(SynthesizeImu, ConstantAccelBias) {
  ScenarioConfig cfg = short_circle(2.0);
  GroundTruth gt = generate_trajectory(cfg);
  GroundTruth gt_b = gt;
  const NoiseConfig none{0, 0, 0, 0, 0};
  const auto clean = synthesize_imu(gt, none, Vec3::Zero(), Vec3::Zero(), cfg.gravity, 3);
  const auto biased = synthesize_imu(gt_b, none, Vec3::Zero(), Vec3(0.1, 0, 0), cfg.gravity, 3);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    EXPECT_NEAR(biased[i].accel.x() - clean[i].accel.x(), 0.1, 1e-14);
    EXPECT_EQ(biased[i].accel.y(), clean[i].accel.y());
    EXPECT_EQ(gt_b.samples[i].b_a, Vec3(0.1, 0, 0));
  }
}

TEST(SynthesizeImu, WhiteNoiseStd) {
  GroundTruth gt;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    TrajectoryPoint p;
    p.timestamp = static_cast<TimestampNs>(k) * 5'000'000;
    gt.samples.push_back(p);
  }
  NoiseConfig noise{1.7e-4, 0, 2e-3, 0, 0};
  const auto imu = synthesize_imu(gt, noise, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 11);
  double sg = 0.0, sa = 0.0;
  for (const auto& m : imu) {
    sg += m.gyro.x() * m.gyro.x();
    sa += m.accel.z() * m.accel.z();
  }
  const double expected_g = 1.7e-4 / std::sqrt(0.005);
  const double expected_a = 2e-3 / std::sqrt(0.005);
  EXPECT_NEAR(std::sqrt(sg / n), expected_g, 0.02 * expected_g);
  EXPECT_NEAR(std::sqrt(sa / n), expected_a, 0.02 * expected_a);
}

TEST(SynthesizeImu, BiasRandomWalkStd) {
  GroundTruth gt;
  for (int k = 0; k <= 2000; ++k) {
    TrajectoryPoint p;
    p.timestamp = static_cast<TimestampNs>(k) * 5'000'000;
    gt.samples.push_back(p);
  }
  NoiseConfig noise{0, 1e-3, 0, 0, 0};
  // After T seconds the walk has std σ_w·√T; 10 s here, checked over many seeds.
  double sum2 = 0.0;
  const int seeds = 400;
  for (int s = 0; s < seeds; ++s) {
    GroundTruth copy = gt;
    synthesize_imu(copy, noise, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), static_cast<std::uint64_t>(s));
    sum2 += copy.samples.back().b_g.squaredNorm() / 3.0;
  }
  EXPECT_NEAR(std::sqrt(sum2 / seeds), 1e-3 * std::sqrt(10.0), 0.1 * 1e-3 * std::sqrt(10.0));
}

TEST(FieldOfView, Predicate) {
  EXPECT_TRUE(in_field_of_view(Vec3(0, 0, 1), 0.78, 0.1));
  EXPECT_FALSE(in_field_of_view(Vec3(0, 0, -1), 0.78, 0.1));
  EXPECT_FALSE(in_field_of_view(Vec3(0, 0, 0.05), 0.78, 0.1));
  EXPECT_TRUE(in_field_of_view(Vec3(0.9, 0, 1), std::numbers::pi / 4, 0.1));
  EXPECT_FALSE(in_field_of_view(Vec3(1.1, 0, 1), std::numbers::pi / 4, 0.1));
}

TEST(SynthesizeTracks, OpticalAxisAndBehind) {
  ScenarioConfig cfg = short_circle(1.0);
  cfg.landmark_count = 0;
  GroundTruth gt = generate_trajectory(cfg);
  const Extrinsics ext = default_extrinsics();
  const TrajectoryPoint p0 = trajectory_at(cfg, 0);
  const CameraClone cam = camera_pose(ImuState{p0.q, Vec3::Zero(), p0.v, Vec3::Zero(), p0.p}, ext, 0, 0);
  const Mat3 C = quat_to_rot(cam.q);
  // One landmark 5 m down the optical axis of the first frame, one 5 m behind.
  gt.landmarks.push_back(cam.p + C.transpose() * Vec3(0, 0, 5));
  gt.landmarks.push_back(cam.p + C.transpose() * Vec3(0, 0, -5));
  const auto frames = synthesize_tracks(gt, cfg, ext, NoiseConfig{0, 0, 0, 0, 0}, 1);
  ASSERT_EQ(frames[0].features.size(), 1u);
  EXPECT_LT(frames[0].features[0].z.norm(), 1e-12);
  for (const auto& f : frames) {
    for (const auto& e : f.features) EXPECT_EQ(e.feature_id, 0);
  }
}

TEST(SynthesizeTracks, ObservationsSatisfyFieldOfView) {
  const ScenarioConfig cfg = short_circle(10.0);
  const Scenario sc = simulate(cfg);
  std::size_t total = 0;
  for (const auto& f : sc.frames) {
    std::set<FeatureId> ids;
    for (const auto& e : f.features) {
      EXPECT_TRUE(ids.insert(e.feature_id).second);
      EXPECT_LE(std::atan(e.z.norm()), cfg.fov_half_angle_rad + 1e-12);
    }
    total += f.features.size();
  }
  EXPECT_GT(total / sc.frames.size(), 20u);
}

TEST(SynthesizeTracks, ZeroNoiseTriangulatesToLandmarks) {
  const ScenarioConfig cfg = short_circle(3.0);
  const Scenario sc = simulate(cfg);
  std::vector<CameraClone> clones;
  for (const auto& f : sc.frames) {
    const TrajectoryPoint p = trajectory_at(cfg, f.timestamp);
    clones.push_back(camera_pose(ImuState{p.q, Vec3::Zero(), p.v, Vec3::Zero(), p.p}, cfg.extrinsics,
                                 f.frame_id, f.timestamp));
  }
  // Recover which landmark each id belongs to from its first observation.
  std::map<FeatureId, FeatureTrack> tracks;
  for (const auto& f : sc.frames) {
    for (const auto& e : f.features) {
      auto& t = tracks[e.feature_id];
      t.feature_id = e.feature_id;
      t.observations.push_back({f.frame_id, e.z});
    }
  }
  int checked = 0;
  for (const auto& [id, t] : tracks) {
    if (t.size() < 10) continue;
    const auto r = triangulate(t, clones);
    ASSERT_TRUE(r.converged) << to_string(r.failure);
    double best = 1e9;
    for (const auto& l : sc.truth.landmarks) best = std::min(best, (l - r.p_global).norm());
    EXPECT_LT(best, 1e-6);
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(Simulate, ZeroNoiseDeadReckoning) {
  ScenarioConfig cfg = short_circle(10.0);
  const Scenario sc = simulate(cfg);
  const auto gt = groundtruth_records(sc.truth);
  FilterConfig fc;
  fc.gravity = cfg.gravity;
  const auto est = dead_reckoning(fc, initial_conditions(gt.front(), fc), sc.imu, 100'000'000);
  ASSERT_GT(est.size(), 90u);
  for (const auto& e : est) {
    const GroundTruthRecord g = interpolate_groundtruth(gt, e.timestamp);
    EXPECT_LT((e.p - g.p).norm(), 1e-4);
  }
}

TEST(ScenarioConfig, Validation) {
  ScenarioConfig cfg;
  cfg.duration_s = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = ScenarioConfig{};
  cfg.imu_rate_hz = 15.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = ScenarioConfig{};
  cfg.noise.sigma_a = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(parse_trajectory_kind("Straight-With-Turns"), TrajectoryKind::StraightWithTurns);
  EXPECT_THROW(parse_trajectory_kind("spiral"), std::invalid_argument);
}
