#include "fmsckf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace fmsckf {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void require_nonempty(const PairedSeries& p) {
  if (p.pairs.empty()) throw std::invalid_argument("empty paired series");
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

PairedSeries align_and_interpolate(const std::vector<EstimateRecord>& estimates,
                                   const std::vector<GroundTruthRecord>& groundtruth) {
  PairedSeries out;
  if (groundtruth.empty()) throw std::invalid_argument("empty ground truth");
  const TimestampNs t0 = groundtruth.front().timestamp;
  const TimestampNs t1 = groundtruth.back().timestamp;
  for (const auto& e : estimates) {
    if (e.timestamp < t0 || e.timestamp > t1) continue;
    const GroundTruthRecord g = interpolate_groundtruth(groundtruth, e.timestamp);
    out.pairs.push_back({e.timestamp, e.p, g.p, e.q, g.q});
  }
  if (out.pairs.empty()) {
    throw std::invalid_argument("estimates and ground truth have no temporal overlap");
  }

  // A maps the ground-truth world into the estimate world (body→global
  // rotations: A·M_gt(t0) = M_est(t0)).
  const PairedSample first = out.pairs.front();
  const Mat3 A = quat_to_rot(first.q_est).transpose() * quat_to_rot(first.q_gt);
  const UnitQuaternion q_a = UnitQuaternion::from_rotation(A.transpose());
  for (auto& s : out.pairs) {
    s.p_gt = A * (s.p_gt - first.p_gt) + first.p_est;
    s.q_gt = s.q_gt * q_a;
  }
  return out;
}

double path_length(const std::vector<GroundTruthRecord>& gt, TimestampNs t0, TimestampNs t1) {
  if (gt.size() < 2) return 0.0;
  t0 = std::max(t0, gt.front().timestamp);
  t1 = std::min(t1, gt.back().timestamp);
  if (t1 <= t0) return 0.0;
  Vec3 prev = interpolate_groundtruth(gt, t0).p;
  double len = 0.0;
  for (const auto& r : gt) {
    if (r.timestamp <= t0) continue;
    if (r.timestamp >= t1) break;
    len += (r.p - prev).norm();
    prev = r.p;
  }
  return len + (interpolate_groundtruth(gt, t1).p - prev).norm();
}

double position_error(const PairedSample& s) { return (s.p_est - s.p_gt).norm(); }

double orientation_error_deg(const PairedSample& s) {
  return rotation_angle(s.q_est.inverse() * s.q_gt) * kRadToDeg;
}

double rmse_position(const PairedSeries& paired) {
  require_nonempty(paired);
  double sum = 0.0;
  for (const auto& s : paired.pairs) sum += (s.p_est - s.p_gt).squaredNorm();
  return std::sqrt(sum / static_cast<double>(paired.pairs.size()));
}

double rmse_orientation(const PairedSeries& paired) {
  require_nonempty(paired);
  double sum = 0.0;
  for (const auto& s : paired.pairs) {
    const double e = orientation_error_deg(s);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(paired.pairs.size()));
}

double final_point_error_pct(const PairedSeries& paired, double length) {
  require_nonempty(paired);
  if (!(length > 0.0)) throw std::invalid_argument("path length must be positive");
  return 100.0 * position_error(paired.pairs.back()) / length;
}

TimingStats timing_stats(const std::vector<double>& t) {
  if (t.empty()) throw std::invalid_argument("empty frame-time log");
  TimingStats s;
  s.mean_us = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
  s.median_us = percentile(t, 0.5);
  s.p95_us = percentile(t, 0.95);
  s.update_rate_hz = s.mean_us > 0.0 ? 1e6 / s.mean_us : std::numeric_limits<double>::infinity();
  return s;
}

TimingStats timing_stats(const std::vector<EstimateRecord>& log) {
  std::vector<double> t;
  t.reserve(log.size());
  for (const auto& r : log) t.push_back(r.frame_time_us);
  return timing_stats(t);
}

Summary accuracy_summary(const std::vector<EstimateRecord>& estimates,
                         const std::vector<GroundTruthRecord>& groundtruth) {
  const PairedSeries paired = align_and_interpolate(estimates, groundtruth);
  const double length =
      path_length(groundtruth, paired.pairs.front().timestamp, paired.pairs.back().timestamp);
  const PairedSample& last = paired.pairs.back();
  Summary s;
  auto& v = s.values;
  v["rmse_pos_m"] = rmse_position(paired);
  v["rmse_att_deg"] = rmse_orientation(paired);
  v["path_length_m"] = length;
  v["final_point_error_m"] = position_error(last);
  v["final_point_error_pct"] =
      length > 0.0 ? final_point_error_pct(paired, length) : std::numeric_limits<double>::quiet_NaN();
  v["final_orientation_error_deg"] = orientation_error_deg(last);
  v["final_x_m"] = last.p_est.x();
  v["final_y_m"] = last.p_est.y();
  v["final_z_m"] = last.p_est.z();
  v["gt_final_x_m"] = last.p_gt.x();
  v["gt_final_y_m"] = last.p_gt.y();
  v["gt_final_z_m"] = last.p_gt.z();
  const Vec3 e = euler_zyx(last.q_est) * kRadToDeg;
  const Vec3 g = euler_zyx(last.q_gt) * kRadToDeg;
  v["final_roll_deg"] = e.x();
  v["final_pitch_deg"] = e.y();
  v["final_yaw_deg"] = e.z();
  v["gt_final_roll_deg"] = g.x();
  v["gt_final_pitch_deg"] = g.y();
  v["gt_final_yaw_deg"] = g.z();
  v["paired_samples"] = static_cast<double>(paired.pairs.size());
  return s;
}

void add_run_metrics(Summary& s, const std::vector<EstimateRecord>& estimates, const RunResult& run,
                     PolicyMode mode) {
  const TimingStats t = timing_stats(estimates);
  auto& v = s.values;
  v["mean_frame_time_us"] = t.mean_us;
  v["median_frame_time_us"] = t.median_us;
  v["p95_frame_time_us"] = t.p95_us;
  v["update_rate_hz"] = t.update_rate_hz;
  v["frames"] = static_cast<double>(run.stats.frames);
  v["update_events"] = static_cast<double>(run.ledger.update_events);
  v["updates_applied"] = static_cast<double>(run.stats.updates_applied);
  v["extraction_events"] = static_cast<double>(run.ledger.extraction_events);
  v["features_extracted"] = static_cast<double>(run.ledger.features_extracted);
  v["prune_events"] = static_cast<double>(run.ledger.prune_events);
  v["clones_pruned"] = static_cast<double>(run.ledger.clones_pruned);
  v["keyframes"] = static_cast<double>(run.ledger.keyframes);
  v["tracks_accepted"] = static_cast<double>(run.stats.tracks_accepted);
  v["gate_rejections"] = static_cast<double>(run.stats.gate_rejections);
  v["max_clones"] = static_cast<double>(run.stats.max_clones);
  v["covariance_psd_violations"] = static_cast<double>(run.audit.psd_violations);
  v["covariance_max_asymmetry"] = run.audit.max_asymmetry;
  s.labels["mode"] = to_string(mode);
}

Summary run_summary(const std::vector<EstimateRecord>& estimates,
                    const std::vector<GroundTruthRecord>& groundtruth, const RunResult& run,
                    PolicyMode mode) {
  Summary s = accuracy_summary(estimates, groundtruth);
  add_run_metrics(s, estimates, run, mode);
  return s;
}

std::vector<GroundTruthRecord> groundtruth_records(const GroundTruth& truth) {
  std::vector<GroundTruthRecord> out;
  out.reserve(truth.samples.size());
  for (const auto& s : truth.samples) out.push_back({s.timestamp, s.p, s.q, s.v, s.b_g, s.b_a});
  return out;
}

Experiment run_experiment(const Scenario& scenario, const FilterConfig& cfg) {
  if (scenario.frames.empty()) throw std::invalid_argument("scenario has no camera frames");
  const auto gt = groundtruth_records(scenario.truth);
  const InitialConditions init =
      initial_conditions(interpolate_groundtruth(gt, scenario.frames.front().timestamp), cfg);
  Experiment ex;
  ex.run = run_estimator(cfg, init, scenario.imu, scenario.frames);
  ex.summary = run_summary(ex.run.estimates, gt, ex.run, cfg.policy.mode);
  return ex;
}

const std::vector<std::string>& comparison_keys() {
  static const std::vector<std::string> keys = {
      "final_x_m",          "final_y_m",          "final_z_m",          "final_roll_deg",
      "final_pitch_deg",    "final_yaw_deg",      "final_point_error_pct", "rmse_pos_m",
      "rmse_att_deg",       "update_rate_hz",     "mean_frame_time_us", "update_events",
      "extraction_events"};
  return keys;
}

std::vector<ComparisonRow> compare_summaries(const Summary& a, const Summary& b) {
  std::vector<ComparisonRow> rows;
  for (const auto& k : comparison_keys()) {
    if (!a.values.count(k) || !b.values.count(k)) {
      throw std::invalid_argument("summary key '" + k + "' missing from " +
                                  (a.values.count(k) ? "the second" : "the first") + " summary");
    }
    const double x = a.values.at(k);
    const double y = b.values.at(k);
    rows.push_back({k, x, y, y - x});
  }
  return rows;
}

void write_comparison(const std::string& path, const std::vector<ComparisonRow>& rows,
                      const std::string& label_a, const std::string& label_b) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "metric," << label_a << ',' << label_b << ",delta\n";
  for (const auto& r : rows) {
    out << r.metric << ',' << format_double(r.a) << ',' << format_double(r.b) << ','
        << format_double(r.delta) << '\n';
  }
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

std::vector<SweepPoint> nfmin_sweep(const Scenario& scenario, const FilterConfig& cfg,
                                    const std::vector<int>& values, int timing_repeats) {
  if (values.size() < 2) throw std::invalid_argument("a sweep needs at least two values");
  if (timing_repeats < 1) throw std::invalid_argument("timing_repeats must be >= 1");
  std::vector<SweepPoint> out;
  for (int n : values) {
    FilterConfig c = cfg;
    c.policy.mode = PolicyMode::Fmsckf;
    c.policy.min_features = n;
    c.validate();
    std::vector<double> times;
    Experiment ex;
    SweepPoint p;
    for (int r = 0; r < timing_repeats; ++r) {
      ex = run_experiment(scenario, c);
      times.push_back(ex.summary.at("mean_frame_time_us"));
      p.audit.merge(ex.run.audit);
      p.clone_limit_violations += ex.run.stats.clone_limit_violations;
    }
    p.min_features = n;
    p.final_error_m = ex.summary.at("final_point_error_m");
    p.final_error_pct = ex.summary.at("final_point_error_pct");
    p.mean_frame_time_us = percentile(times, 0.5);
    p.update_rate_hz = 1e6 / p.mean_frame_time_us;
    p.error_to_rate = p.final_error_m / p.update_rate_hz;
    p.extraction_events = ex.run.ledger.extraction_events;
    out.push_back(p);
  }
  return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

void write_sweep_table(const std::string& path, const std::vector<SweepPoint>& points) {
  std::vector<std::vector<double>> rows;
  for (const auto& p : points) {
    rows.push_back({static_cast<double>(p.min_features), p.final_error_m, p.final_error_pct,
                    p.mean_frame_time_us, p.update_rate_hz, p.error_to_rate,
                    static_cast<double>(p.extraction_events)});
  }
  write_table(path,
              {"n_f_min", "final_error_m", "final_error_pct", "mean_frame_time_us", "update_rate_hz",
               "error_to_rate", "extraction_events"},
              rows);
}

void write_trajectory_table(const std::string& path, const PairedSeries& paired) {
  std::vector<std::vector<double>> rows;
  for (const auto& s : paired.pairs) {
    rows.push_back({static_cast<double>(s.timestamp) * 1e-9, s.p_est.x(), s.p_est.y(), s.p_est.z(),
                    s.p_gt.x(), s.p_gt.y(), s.p_gt.z()});
  }
  write_table(path, {"t_s", "est_x", "est_y", "est_z", "gt_x", "gt_y", "gt_z"}, rows);
}

void write_error_table(const std::string& path, const PairedSeries& paired) {
  std::vector<std::vector<double>> rows;
  for (const auto& s : paired.pairs) {
    rows.push_back({static_cast<double>(s.timestamp) * 1e-9, position_error(s), orientation_error_deg(s)});
  }
  write_table(path, {"t_s", "position_error_m", "orientation_error_deg"}, rows);
}

void write_frame_time_table(const std::string& path, const std::vector<FrameReport>& reports) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : reports) {
    rows.push_back({static_cast<double>(r.timestamp) * 1e-9, r.frame_time_us,
                    static_cast<double>(r.error_dim), static_cast<double>(r.clones_after),
                    static_cast<double>(r.tracks_accepted)});
  }
  write_table(path, {"t_s", "frame_time_us", "error_dim", "clones", "tracks_used"}, rows);
}

}  // namespace fmsckf
