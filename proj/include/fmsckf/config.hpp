#pragma once

#include <string>

#include "fmsckf/augmentation.hpp"
#include "fmsckf/policy.hpp"
#include "fmsckf/simulator.hpp"
#include "fmsckf/triangulation.hpp"

namespace fmsckf {

/// Everything the estimator needs besides the data streams.
struct FilterConfig {
  NoiseConfig noise;
  PolicyConfig policy;
  TriangulationConfig triangulation;
  Extrinsics extrinsics = default_extrinsics();
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);

  // Initial per-axis standard deviations.
  double init_sigma_theta = 1e-2;
  double init_sigma_bg = 1e-3;
  double init_sigma_v = 0.0;
  double init_sigma_ba = 1e-2;
  double init_sigma_p = 0.0;

  /// Throws std::invalid_argument. Unlike the simulator, the filter needs
  /// sigma_im > 0.
  void validate() const;
};

// Config files are flat "key = value" lines; '#' starts a comment, vectors
// are whitespace separated ("gravity = 0 0 -9.81"), quaternions are x y z w.
// Unknown or repeated keys and unparsable values raise ParseError.

ScenarioConfig parse_scenario_config(const std::string& text, const std::string& source = "<string>");
FilterConfig parse_filter_config(const std::string& text, const std::string& source = "<string>");
ScenarioConfig load_scenario_config(const std::string& path);
FilterConfig load_filter_config(const std::string& path);

/// Full key listing with current values; parses back to the same config.
std::string to_text(const ScenarioConfig& cfg);
std::string to_text(const FilterConfig& cfg);

}  // namespace fmsckf
