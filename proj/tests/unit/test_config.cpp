#include <gtest/gtest.h>

#include "fmsckf/config.hpp"
#include "fmsckf/errors.hpp"

using namespace fmsckf;

TEST(ScenarioConfigText, ParsesKeysAndComments) {
  const auto cfg = parse_scenario_config(
      "# header comment\n"
      "kind = lissajous\n"
      "duration_s = 12.5   # trailing comment\n"
      "\n"
      "  seed=99\n"
      "gravity = 0 0 -9.8\n"
      "q_CI = 0 0 0 1\n");
  EXPECT_EQ(cfg.kind, TrajectoryKind::Lissajous);
  EXPECT_EQ(cfg.duration_s, 12.5);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.gravity, Vec3(0, 0, -9.8));
  EXPECT_EQ(cfg.extrinsics.q_CI, UnitQuaternion::identity());
  EXPECT_EQ(cfg.radius_m, ScenarioConfig{}.radius_m);
}

TEST(ScenarioConfigText, Errors) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_scenario_config(text);
    } catch (const ParseError& e) {
      return e.line;
    }
    return 999;
  };
  EXPECT_EQ(line_of("duration_s = 5\nbogus = 1\n"), 2u);
  EXPECT_EQ(line_of("seed = 1\nseed = 2\n"), 2u);
  EXPECT_EQ(line_of("duration_s = five\n"), 1u);
  EXPECT_EQ(line_of("just words\n"), 1u);
  EXPECT_EQ(line_of("gravity = 0 0\n"), 1u);
  EXPECT_EQ(line_of("q_CI = 0 0 0 2\n"), 1u);
  EXPECT_EQ(line_of("kind = spiral\n"), 1u);
  // Range errors are reported after parsing, without a line.
  EXPECT_EQ(line_of("duration_s = 0\n"), 0u);
  EXPECT_EQ(line_of("sigma_a = -1\n"), 0u);
}

TEST(ScenarioConfigText, RoundTrip) {
  ScenarioConfig cfg;
  cfg.kind = TrajectoryKind::StraightWithTurns;
  cfg.duration_s = 1.0 / 3.0;
  cfg.noise.sigma_im = 1.234e-3;
  cfg.extrinsics.p_IC = Vec3(0.1, -0.2, 0.3);
  cfg.start_time_ns = 1403636579758555392;
  const auto back = parse_scenario_config(to_text(cfg));
  EXPECT_EQ(to_text(back), to_text(cfg));
  EXPECT_EQ(back.duration_s, cfg.duration_s);
  EXPECT_EQ(back.start_time_ns, cfg.start_time_ns);
  EXPECT_EQ(back.extrinsics.p_IC, cfg.extrinsics.p_IC);
}

TEST(FilterConfigText, DefaultsAndDerivedThreshold) {
  const auto cfg = parse_filter_config("sigma_im = 1e-3\nmode = msckf\nmin_features = 16\n");
  EXPECT_EQ(cfg.policy.mode, PolicyMode::Msckf);
  EXPECT_EQ(cfg.policy.min_features, 16);
  EXPECT_EQ(cfg.policy.max_poses, 20);
  EXPECT_DOUBLE_EQ(cfg.triangulation.max_rms_reprojection, 3e-3);
  const auto explicit_thr = parse_filter_config("sigma_im = 1e-3\ntri_max_rms_reprojection = 0.01\n");
  EXPECT_EQ(explicit_thr.triangulation.max_rms_reprojection, 0.01);
}

TEST(FilterConfigText, Errors) {
  EXPECT_THROW(parse_filter_config("sigma_im = 0\n"), ParseError);
  EXPECT_THROW(parse_filter_config("mode = ekf\n"), ParseError);
  EXPECT_THROW(parse_filter_config("max_poses = 1\n"), ParseError);
  EXPECT_THROW(parse_filter_config("gate_confidence = 1.5\n"), ParseError);
  EXPECT_THROW(parse_filter_config("radius_m = 5\n"), ParseError);
  EXPECT_THROW(load_filter_config("/nonexistent/filter.cfg"), std::runtime_error);
}

TEST(FilterConfigText, RoundTrip) {
  FilterConfig cfg;
  cfg.policy.mode = PolicyMode::Msckf;
  cfg.policy.gate_confidence = 0.99;
  cfg.init_sigma_p = 0.25;
  cfg.gravity = Vec3(0.01, 0, -9.80665);
  const auto back = parse_filter_config(to_text(cfg));
  EXPECT_EQ(to_text(back), to_text(cfg));
  EXPECT_EQ(back.policy.gate_confidence, 0.99);
  EXPECT_EQ(back.gravity, cfg.gravity);
}

TEST(ShippedConfigs, Load) {
  const std::string dir = FMSCKF_CONFIG_DIR;
  const auto zero = load_scenario_config(dir + "/circle_zero_noise.cfg");
  EXPECT_EQ(zero.noise.sigma_im, 0.0);
  EXPECT_EQ(zero.duration_s, 60.0);
  const auto noisy = load_scenario_config(dir + "/circle_noisy.cfg");
  EXPECT_GT(noisy.noise.sigma_im, 0.0);
  const auto filter = load_filter_config(dir + "/filter_default.cfg");
  EXPECT_EQ(filter.policy.mode, PolicyMode::Fmsckf);
  EXPECT_EQ(filter.policy.min_features, 8);
}
