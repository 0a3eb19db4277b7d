// Batch entry points: simulate, run, evaluate, compare, sweep, deadreckon.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fmsckf/errors.hpp"
#include "fmsckf/evaluation.hpp"

namespace fs = std::filesystem;
using namespace fmsckf;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir + "'");
}

std::string join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw std::runtime_error("no such file: '" + path + "'");
}

int cmd_simulate(const std::string& config, const std::string& out) {
  require_file(config);
  const ScenarioConfig cfg = load_scenario_config(config);
  const Scenario sc = simulate(cfg);
  ensure_dir(out);
  write_imu(join(out, "imu.csv"), sc.imu);
  write_tracks(join(out, "tracks.csv"), sc.frames);
  write_groundtruth(join(out, "groundtruth.csv"), groundtruth_records(sc.truth));
  std::printf("wrote %zu IMU samples, %zu frames, %zu ground-truth records to %s\n", sc.imu.size(),
              sc.frames.size(), sc.truth.samples.size(), out.c_str());
  return 0;
}

struct RunArgs {
  std::string imu, tracks, config, mode, groundtruth, out;
  double static_init_s = 1.0;
};

int cmd_run(const RunArgs& a) {
  require_file(a.imu);
  require_file(a.tracks);
  FilterConfig cfg = a.config.empty() ? FilterConfig{} : load_filter_config(a.config);
  if (!a.mode.empty()) cfg.policy.mode = parse_policy_mode(a.mode);
  cfg.validate();

  const auto imu = read_imu(a.imu);
  const auto frames = read_tracks(a.tracks);
  if (imu.empty()) throw std::runtime_error("IMU file '" + a.imu + "' has no samples");
  if (frames.empty()) throw std::runtime_error("track file '" + a.tracks + "' has no frames");

  std::vector<GroundTruthRecord> gt;
  InitialConditions init;
  if (!a.groundtruth.empty()) {
    require_file(a.groundtruth);
    std::vector<std::string> warnings;
    gt = read_groundtruth(a.groundtruth, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    if (gt.empty()) throw std::runtime_error("ground truth file is empty");
    auto first = std::find_if(frames.begin(), frames.end(), [&](const FrameObservations& f) {
      return f.timestamp >= gt.front().timestamp && f.timestamp >= imu.front().timestamp;
    });
    if (first == frames.end() || first->timestamp > gt.back().timestamp) {
      throw std::runtime_error("no camera frame inside the ground-truth time range");
    }
    init = initial_conditions(interpolate_groundtruth(gt, first->timestamp), cfg);
  } else {
    const auto t_end = imu.front().timestamp + static_cast<TimestampNs>(a.static_init_s * 1e9);
    init = static_initialization(imu, t_end, cfg);
  }

  const RunResult run = run_estimator(cfg, init, imu, frames);
  ensure_dir(a.out);
  write_estimates(join(a.out, "estimates.csv"), run.estimates);
  write_frame_time_table(join(a.out, "frame_times.csv"), run.reports);
  Summary summary;
  if (!gt.empty() && !run.estimates.empty()) {
    summary = accuracy_summary(run.estimates, gt);
    const PairedSeries paired = align_and_interpolate(run.estimates, gt);
    write_trajectory_table(join(a.out, "trajectory.csv"), paired);
    write_error_table(join(a.out, "errors.csv"), paired);
  }
  if (!run.estimates.empty()) add_run_metrics(summary, run.estimates, run, cfg.policy.mode);
  write_summary(join(a.out, "summary.json"), summary);
  for (const auto& d : run.stats.diagnostics) std::cerr << "diagnostic: " << d << '\n';
  std::printf("%s: %zu frames, %llu updates, %llu extractions\n", to_string(cfg.policy.mode),
              run.stats.frames, static_cast<unsigned long long>(run.ledger.update_events),
              static_cast<unsigned long long>(run.ledger.extraction_events));
  if (!run.audit.clean()) {
    std::cerr << "covariance audit failed: " << run.audit.psd_violations << " PSD, "
              << run.audit.dimension_violations << " dimension violations, max asymmetry "
              << run.audit.max_asymmetry << '\n';
    return 1;
  }
  return 0;
}

int cmd_evaluate(const std::string& estimates, const std::string& groundtruth, const std::string& out) {
  require_file(estimates);
  require_file(groundtruth);
  const auto est = read_estimates(estimates);
  const auto gt = read_groundtruth(groundtruth);
  Summary s = accuracy_summary(est, gt);
  const TimingStats t = timing_stats(est);
  s.values["mean_frame_time_us"] = t.mean_us;
  s.values["median_frame_time_us"] = t.median_us;
  s.values["p95_frame_time_us"] = t.p95_us;
  s.values["update_rate_hz"] = t.update_rate_hz;
  ensure_dir(out);
  const PairedSeries paired = align_and_interpolate(est, gt);
  write_summary(join(out, "summary.json"), s);
  write_trajectory_table(join(out, "trajectory.csv"), paired);
  write_error_table(join(out, "errors.csv"), paired);
  std::printf("final point error %.4f %%, position RMSE %.4f m, orientation RMSE %.4f deg\n",
              s.at("final_point_error_pct"), s.at("rmse_pos_m"), s.at("rmse_att_deg"));
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
  require_file(a);
  require_file(b);
  const Summary sa = read_summary(a);
  const Summary sb = read_summary(b);
  auto label = [](const Summary& s, const std::string& fallback) {
    auto it = s.labels.find("mode");
    return it == s.labels.end() ? fallback : it->second;
  };
  std::string la = label(sa, "a"), lb = label(sb, "b");
  if (la == lb) {
    la += "_a";
    lb += "_b";
  }
  const auto rows = compare_summaries(sa, sb);
  if (fs::path(out).has_parent_path()) ensure_dir(fs::path(out).parent_path().string());
  write_comparison(out, rows, la, lb);
  for (const auto& r : rows) std::printf("%-24s %14.6g %14.6g %14.6g\n", r.metric.c_str(), r.a, r.b, r.delta);
  return 0;
}

int cmd_sweep(const std::string& scenario, const std::string& filter, const std::vector<int>& values,
              int repeats, const std::string& out) {
  require_file(scenario);
  const ScenarioConfig sc = load_scenario_config(scenario);
  FilterConfig cfg;
  if (!filter.empty()) {
    require_file(filter);
    cfg = load_filter_config(filter);
  }
  const auto points = nfmin_sweep(simulate(sc), cfg, values, repeats);
  std::vector<double> x, y;
  for (const auto& p : points) {
    x.push_back(p.min_features);
    y.push_back(p.error_to_rate);
  }
  const double rho = spearman(x, y);
  ensure_dir(out);
  write_sweep_table(join(out, "sweep.csv"), points);
  Summary s;
  s.values["spearman_nfmin_vs_error_to_rate"] = rho;
  s.values["points"] = static_cast<double>(points.size());
  write_summary(join(out, "sweep_summary.json"), s);
  for (const auto& p : points) {
    std::printf("N_f,min=%3d  error %.4f m  rate %.1f Hz  ratio %.6g\n", p.min_features, p.final_error_m,
                p.update_rate_hz, p.error_to_rate);
  }
  std::printf("spearman %.3f\n", rho);
  return 0;
}

int cmd_deadreckon(const std::string& imu_path, const std::string& groundtruth, const std::string& config,
                   const std::string& out, double every_s) {
  require_file(imu_path);
  require_file(groundtruth);
  const FilterConfig cfg = config.empty() ? FilterConfig{} : load_filter_config(config);
  const auto imu = read_imu(imu_path);
  std::vector<std::string> warnings;
  const auto gt = read_groundtruth(groundtruth, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (imu.empty() || gt.empty()) throw std::runtime_error("empty IMU or ground-truth file");
  const TimestampNs t0 = std::max(imu.front().timestamp, gt.front().timestamp);
  const auto init = initial_conditions(interpolate_groundtruth(gt, t0), cfg);
  std::vector<ImuSample> tail;
  for (const auto& s : imu) {
    if (s.timestamp >= t0 - static_cast<TimestampNs>(kMaxImuDt * 1e9)) tail.push_back(s);
  }
  const auto est = dead_reckoning(cfg, init, tail, static_cast<TimestampNs>(every_s * 1e9));
  ensure_dir(out);
  write_estimates(join(out, "estimates.csv"), est);
  Summary s = accuracy_summary(est, gt);
  s.values["imu_samples"] = static_cast<double>(imu.size());
  s.values["groundtruth_records"] = static_cast<double>(gt.size());
  s.values["duration_s"] = static_cast<double>(est.back().timestamp - est.front().timestamp) * 1e-9;
  write_summary(join(out, "summary.json"), s);
  std::printf("dead reckoning over %.1f s: final position error %.3f m (%.2f %% of %.2f m)\n",
              s.at("duration_s"), s.at("final_point_error_m"), s.at("final_point_error_pct"),
              s.at("path_length_m"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MSCKF / Fast-MSCKF visual-inertial odometry toolkit"};
  app.require_subcommand(1);

  std::string sim_config, sim_out;
  auto* sim = app.add_subcommand("simulate", "Write IMU, track and ground-truth files for a scenario");
  sim->add_option("--config", sim_config, "Scenario config file")->required();
  sim->add_option("--out", sim_out, "Output directory")->required();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Replay IMU and tracks through the estimator");
  run->add_option("--imu", run_args.imu, "IMU csv (EuRoC layout)")->required();
  run->add_option("--tracks", run_args.tracks, "Track file")->required();
  run->add_option("--config", run_args.config, "Filter config file");
  run->add_option("--mode", run_args.mode, "msckf or fmsckf (overrides the config)")
      ->check(CLI::IsMember({"msckf", "fmsckf"}));
  run->add_option("--groundtruth", run_args.groundtruth, "Ground truth for initialization and metrics");
  run->add_option("--static-init-s", run_args.static_init_s,
                  "Seconds of IMU averaged for a static start when no ground truth is given");
  run->add_option("--out", run_args.out, "Output directory")->required();

  std::string ev_est, ev_gt, ev_out;
  auto* evaluate = app.add_subcommand("evaluate", "Metrics of an estimate log against ground truth");
  evaluate->add_option("--estimates", ev_est, "Estimate log")->required();
  evaluate->add_option("--groundtruth", ev_gt, "Ground truth")->required();
  evaluate->add_option("--out", ev_out, "Output directory")->required();

  std::string cmp_a, cmp_b, cmp_out;
  auto* compare = app.add_subcommand("compare", "Side-by-side table of two run summaries");
  compare->add_option("--a", cmp_a, "First summary")->required();
  compare->add_option("--b", cmp_b, "Second summary")->required();
  compare->add_option("--out", cmp_out, "Output csv")->required();

  std::string sw_scenario, sw_filter, sw_out;
  std::vector<int> sw_values{4, 8, 16, 32};
  int sw_repeats = 3;
  auto* sweep = app.add_subcommand("sweep", "N_f,min sweep of the error-to-rate ratio");
  sweep->add_option("--scenario", sw_scenario, "Scenario config file")->required();
  sweep->add_option("--config", sw_filter, "Filter config file");
  sweep->add_option("--values", sw_values, "N_f,min values")->delimiter(',');
  sweep->add_option("--repeats", sw_repeats, "Timing repeats per value")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sw_out, "Output directory")->required();

  std::string dr_imu, dr_gt, dr_config, dr_out;
  double dr_every = 0.05;
  auto* dr = app.add_subcommand("deadreckon", "IMU-only propagation from the ground-truth start");
  dr->add_option("--imu", dr_imu, "IMU csv")->required();
  dr->add_option("--groundtruth", dr_gt, "Ground truth")->required();
  dr->add_option("--config", dr_config, "Filter config file");
  dr->add_option("--every-s", dr_every, "Output interval")->check(CLI::PositiveNumber);
  dr->add_option("--out", dr_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(sim_config, sim_out);
    if (*run) return cmd_run(run_args);
    if (*evaluate) return cmd_evaluate(ev_est, ev_gt, ev_out);
    if (*compare) return cmd_compare(cmp_a, cmp_b, cmp_out);
    if (*sweep) return cmd_sweep(sw_scenario, sw_filter, sw_values, sw_repeats, sw_out);
    if (*dr) return cmd_deadreckon(dr_imu, dr_gt, dr_config, dr_out, dr_every);
  } catch (const ImuGap& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
