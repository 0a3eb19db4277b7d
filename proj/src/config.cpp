#include "fmsckf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fmsckf/dataset_io.hpp"
#include "fmsckf/errors.hpp"

namespace fmsckf {

namespace {

struct Field {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::vector<std::string> words(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> out;
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("not a number: " + s);
  return v;
}

template <class Int>
Int to_int(const std::string& s) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("not an integer: " + s);
  return v;
}

std::vector<double> numbers(const std::string& s, std::size_t n) {
  const auto w = words(s);
  if (w.size() != n) {
    throw std::invalid_argument("expected " + std::to_string(n) + " numbers, got " + std::to_string(w.size()));
  }
  std::vector<double> out;
  for (const auto& x : w) out.push_back(to_double(x));
  return out;
}

Field real(const std::string& key, double& ref) {
  return {key, [&ref](const std::string& s) { ref = to_double(s); },
          [&ref] { return format_double(ref); }};
}

template <class Int>
Field integer(const std::string& key, Int& ref) {
  return {key, [&ref](const std::string& s) { ref = to_int<Int>(s); },
          [&ref] { return std::to_string(ref); }};
}

Field vec3(const std::string& key, Vec3& ref) {
  return {key,
          [&ref](const std::string& s) {
            const auto v = numbers(s, 3);
            ref = Vec3(v[0], v[1], v[2]);
          },
          [&ref] {
            return format_double(ref.x()) + " " + format_double(ref.y()) + " " + format_double(ref.z());
          }};
}

Field quat(const std::string& key, UnitQuaternion& ref) {
  return {key,
          [&ref](const std::string& s) {
            const auto v = numbers(s, 4);
            const Vec4 c(v[0], v[1], v[2], v[3]);
            if (std::abs(c.norm() - 1.0) > 1e-6) throw std::invalid_argument("quaternion is not unit");
            ref = UnitQuaternion::from_coeffs(c);
          },
          [&ref] {
            const Vec4& c = ref.coeffs();
            return format_double(c(0)) + " " + format_double(c(1)) + " " + format_double(c(2)) + " " +
                   format_double(c(3));
          }};
}

void noise_fields(std::vector<Field>& f, NoiseConfig& n) {
  f.push_back(real("sigma_g", n.sigma_g));
  f.push_back(real("sigma_wg", n.sigma_wg));
  f.push_back(real("sigma_a", n.sigma_a));
  f.push_back(real("sigma_wa", n.sigma_wa));
  f.push_back(real("sigma_im", n.sigma_im));
}

std::vector<Field> scenario_fields(ScenarioConfig& c) {
  std::vector<Field> f;
  f.push_back({"kind", [&c](const std::string& s) { c.kind = parse_trajectory_kind(s); },
               [&c] { return std::string(to_string(c.kind)); }});
  f.push_back(real("duration_s", c.duration_s));
  f.push_back(real("imu_rate_hz", c.imu_rate_hz));
  f.push_back(real("cam_rate_hz", c.cam_rate_hz));
  f.push_back(integer("start_time_ns", c.start_time_ns));
  f.push_back(real("radius_m", c.radius_m));
  f.push_back(real("period_s", c.period_s));
  f.push_back(real("speed_mps", c.speed_mps));
  f.push_back(real("turn_amplitude_m", c.turn_amplitude_m));
  f.push_back(real("turn_period_s", c.turn_period_s));
  f.push_back(real("vertical_amplitude_m", c.vertical_amplitude_m));
  f.push_back(real("attitude_wobble_rad", c.attitude_wobble_rad));
  f.push_back(integer("landmark_count", c.landmark_count));
  f.push_back(real("landmark_inner_m", c.landmark_inner_m));
  f.push_back(real("landmark_outer_m", c.landmark_outer_m));
  f.push_back(real("landmark_min_z", c.landmark_min_z));
  f.push_back(real("landmark_max_z", c.landmark_max_z));
  f.push_back(real("fov_half_angle_rad", c.fov_half_angle_rad));
  f.push_back(real("min_depth_m", c.min_depth_m));
  noise_fields(f, c.noise);
  f.push_back(real("initial_bias_g_std", c.initial_bias_g_std));
  f.push_back(real("initial_bias_a_std", c.initial_bias_a_std));
  f.push_back(quat("q_CI", c.extrinsics.q_CI));
  f.push_back(vec3("p_IC", c.extrinsics.p_IC));
  f.push_back(vec3("gravity", c.gravity));
  f.push_back(integer("seed", c.seed));
  return f;
}

std::vector<Field> filter_fields(FilterConfig& c) {
  std::vector<Field> f;
  f.push_back({"mode", [&c](const std::string& s) { c.policy.mode = parse_policy_mode(s); },
               [&c] { return std::string(to_string(c.policy.mode)); }});
  f.push_back(integer("max_poses", c.policy.max_poses));
  f.push_back(integer("min_features", c.policy.min_features));
  f.push_back(integer("max_corners", c.policy.max_corners));
  f.push_back(real("gate_confidence", c.policy.gate_confidence));
  f.push_back(integer("min_track_length", c.policy.min_track_length));
  noise_fields(f, c.noise);
  f.push_back(integer("tri_max_iterations", c.triangulation.max_iterations));
  f.push_back(real("tri_step_tolerance", c.triangulation.step_tolerance));
  f.push_back(real("tri_max_rms_reprojection", c.triangulation.max_rms_reprojection));
  f.push_back(real("tri_min_baseline_ratio", c.triangulation.min_baseline_ratio));
  f.push_back(quat("q_CI", c.extrinsics.q_CI));
  f.push_back(vec3("p_IC", c.extrinsics.p_IC));
  f.push_back(vec3("gravity", c.gravity));
  f.push_back(real("init_sigma_theta", c.init_sigma_theta));
  f.push_back(real("init_sigma_bg", c.init_sigma_bg));
  f.push_back(real("init_sigma_v", c.init_sigma_v));
  f.push_back(real("init_sigma_ba", c.init_sigma_ba));
  f.push_back(real("init_sigma_p", c.init_sigma_p));
  return f;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Returns the set of keys that appeared.
std::set<std::string> apply(const std::string& text, const std::string& source, std::vector<Field>& fields) {
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string body = trim(raw.substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(source, line, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; });
    if (it == fields.end()) throw ParseError(source, line, "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ParseError(source, line, "repeated key '" + key + "'");
    try {
      it->set(value);
    } catch (const std::exception& e) {
      throw ParseError(source, line, key + ": " + e.what());
    }
  }
  return seen;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string listing(std::vector<Field> fields) {
  std::string out;
  for (const auto& f : fields) out += f.key + " = " + f.get() + "\n";
  return out;
}

}  // namespace

void FilterConfig::validate() const {
  noise.validate();
  if (!(noise.sigma_im > 0.0)) throw std::invalid_argument("sigma_im must be positive");
  policy.validate();
  if (triangulation.max_iterations < 1) throw std::invalid_argument("tri_max_iterations must be >= 1");
  if (!(triangulation.max_rms_reprojection > 0.0)) {
    throw std::invalid_argument("tri_max_rms_reprojection must be positive");
  }
  if (!(triangulation.min_baseline_ratio >= 0.0)) {
    throw std::invalid_argument("tri_min_baseline_ratio must be >= 0");
  }
  for (double s : {init_sigma_theta, init_sigma_bg, init_sigma_v, init_sigma_ba, init_sigma_p}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("initial sigmas must be finite and >= 0");
  }
  if (!gravity.allFinite()) throw std::invalid_argument("gravity must be finite");
}

ScenarioConfig parse_scenario_config(const std::string& text, const std::string& source) {
  ScenarioConfig cfg;
  auto fields = scenario_fields(cfg);
  apply(text, source, fields);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 0, e.what());
  }
  return cfg;
}

FilterConfig parse_filter_config(const std::string& text, const std::string& source) {
  FilterConfig cfg;
  auto fields = filter_fields(cfg);
  const auto seen = apply(text, source, fields);
  if (!seen.count("tri_max_rms_reprojection")) {
    cfg.triangulation.max_rms_reprojection = 3.0 * cfg.noise.sigma_im;
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 0, e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario_config(const std::string& path) {
  return parse_scenario_config(read_file(path), path);
}

FilterConfig load_filter_config(const std::string& path) {
  return parse_filter_config(read_file(path), path);
}

std::string to_text(const ScenarioConfig& cfg) {
  ScenarioConfig copy = cfg;
  return listing(scenario_fields(copy));
}

std::string to_text(const FilterConfig& cfg) {
  FilterConfig copy = cfg;
  return listing(filter_fields(copy));
}

}  // namespace fmsckf
