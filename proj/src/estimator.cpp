#include "fmsckf/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "fmsckf/errors.hpp"

namespace fmsckf {

namespace {

constexpr TimestampNs kMaxGapNs = static_cast<TimestampNs>(kMaxImuDt * 1e9);

ImuSample lerp(const ImuSample& a, const ImuSample& b, TimestampNs t) {
  const double s = static_cast<double>(t - a.timestamp) / static_cast<double>(b.timestamp - a.timestamp);
  ImuSample out;
  out.timestamp = t;
  out.gyro = a.gyro + s * (b.gyro - a.gyro);
  out.accel = a.accel + s * (b.accel - a.accel);
  return out;
}

}  // namespace

InitialConditions initial_conditions(const GroundTruthRecord& gt, const FilterConfig& cfg) {
  InitialConditions init;
  init.imu.q = gt.q;
  init.imu.b_g = gt.b_g;
  init.imu.v = gt.v;
  init.imu.b_a = gt.b_a;
  init.imu.p = gt.p;
  init.gravity = cfg.gravity;
  init.timestamp = gt.timestamp;
  init.sigma_theta = cfg.init_sigma_theta;
  init.sigma_bg = cfg.init_sigma_bg;
  init.sigma_v = cfg.init_sigma_v;
  init.sigma_ba = cfg.init_sigma_ba;
  init.sigma_p = cfg.init_sigma_p;
  return init;
}

InitialConditions static_initialization(const std::vector<ImuSample>& imu, TimestampNs t_end,
                                        const FilterConfig& cfg) {
  Vec3 a = Vec3::Zero();
  Vec3 w = Vec3::Zero();
  std::size_t n = 0;
  for (const auto& s : imu) {
    if (s.timestamp > t_end) break;
    a += s.accel;
    w += s.gyro;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("no IMU samples for static initialization");
  a /= static_cast<double>(n);
  w /= static_cast<double>(n);
  GroundTruthRecord gt;
  gt.timestamp = imu.front().timestamp;
  const double roll = std::atan2(a.y(), a.z());
  const double pitch = std::atan2(-a.x(), std::hypot(a.y(), a.z()));
  gt.q = from_euler_zyx(roll, pitch, 0.0);
  gt.b_g = w;
  return initial_conditions(gt, cfg);
}

GroundTruthRecord interpolate_groundtruth(const std::vector<GroundTruthRecord>& gt, TimestampNs t) {
  if (gt.empty() || t < gt.front().timestamp || t > gt.back().timestamp) {
    throw std::out_of_range("time " + std::to_string(t) + " ns outside the ground truth");
  }
  auto hi = std::lower_bound(gt.begin(), gt.end(), t,
                             [](const GroundTruthRecord& r, TimestampNs x) { return r.timestamp < x; });
  if (hi->timestamp == t) return *hi;
  const auto& b = *hi;
  const auto& a = *(hi - 1);
  const double s = static_cast<double>(t - a.timestamp) / static_cast<double>(b.timestamp - a.timestamp);
  GroundTruthRecord r;
  r.timestamp = t;
  r.p = a.p + s * (b.p - a.p);
  r.q = slerp(a.q, b.q, s);
  r.v = a.v + s * (b.v - a.v);
  r.b_g = a.b_g + s * (b.b_g - a.b_g);
  r.b_a = a.b_a + s * (b.b_a - a.b_a);
  return r;
}

Estimator::Estimator(const FilterConfig& cfg, const InitialConditions& init)
    : cfg_(cfg), state_(new_filter_state(init)) {
  cfg_.validate();
  audit_.inspect(state_.P, state_.error_dim());
}

void Estimator::add_imu(const ImuSample& sample) {
  if (!sample.gyro.allFinite() || !sample.accel.allFinite()) {
    throw std::invalid_argument("non-finite IMU sample at " + std::to_string(sample.timestamp) + " ns");
  }
  if (!imu_.empty() && sample.timestamp <= imu_.back().timestamp) {
    throw std::invalid_argument("IMU timestamps must increase (" + std::to_string(sample.timestamp) + " ns)");
  }
  imu_.push_back(sample);
  ++stats_.imu_samples;
}

ImuSample Estimator::sample_at(TimestampNs t) const {
  if (t <= imu_.front().timestamp) return {t, imu_.front().gyro, imu_.front().accel};
  if (t >= imu_.back().timestamp) return {t, imu_.back().gyro, imu_.back().accel};
  auto hi = std::lower_bound(imu_.begin(), imu_.end(), t,
                             [](const ImuSample& s, TimestampNs x) { return s.timestamp < x; });
  if (hi->timestamp == t) return *hi;
  return lerp(*(hi - 1), *hi, t);
}

void Estimator::propagate_to(TimestampNs t) {
  if (t < state_.timestamp) {
    throw std::invalid_argument("cannot propagate backwards to " + std::to_string(t) + " ns");
  }
  if (t == state_.timestamp) return;
  if (imu_.empty()) throw ImuGap(state_.timestamp, t);
  while (state_.timestamp < t) {
    const TimestampNs cur = state_.timestamp;
    auto it = std::upper_bound(imu_.begin(), imu_.end(), cur,
                               [](TimestampNs x, const ImuSample& s) { return x < s.timestamp; });
    TimestampNs next = t;
    if (it == imu_.end()) {
      if (t - imu_.back().timestamp > kMaxGapNs) throw ImuGap(imu_.back().timestamp, t);
    } else {
      next = std::min(it->timestamp, t);
      const TimestampNs from = it == imu_.begin() ? cur : (it - 1)->timestamp;
      if (it->timestamp - from > kMaxGapNs) throw ImuGap(from, it->timestamp);
    }
    const ImuSample a = sample_at(cur);
    const ImuSample b = sample_at(next);
    ImuSample held;
    held.timestamp = cur;
    held.gyro = 0.5 * (a.gyro + b.gyro);
    held.accel = 0.5 * (a.accel + b.accel);
    propagate(state_, held, static_cast<double>(next - cur) * 1e-9, cfg_.noise, &audit_);
    state_.timestamp = next;
  }
  while (imu_.size() > 1 && imu_[1].timestamp <= state_.timestamp) imu_.pop_front();
}

EstimateRecord Estimator::estimate(double frame_time_us) const {
  EstimateRecord r;
  r.timestamp = state_.timestamp;
  r.p = state_.imu.p;
  r.q = state_.imu.q;
  r.v = state_.imu.v;
  r.b_g = state_.imu.b_g;
  r.b_a = state_.imu.b_a;
  r.error_dim = state_.error_dim();
  r.frame_time_us = frame_time_us;
  return r;
}

EstimateRecord Estimator::process_frame(const FrameObservations& frame) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  propagate_to(frame.timestamp);
  augment(state_, cfg_.extrinsics, frame.frame_id, frame.timestamp, &audit_);
  UpdateDecision decision = on_frame(ledger_, frame, state_.clones, cfg_.policy);

  FrameReport report;
  report.timestamp = frame.timestamp;
  report.frame_id = frame.frame_id;
  report.trigger = decision.trigger;
  report.tracks_offered = decision.tracks_to_use.size();

  std::vector<FeatureUpdateBlock> blocks;
  for (const auto& track : decision.tracks_to_use) {
    const TriangulationResult tri = triangulate(track, state_.clones, cfg_.triangulation);
    if (tri.failure != TriangulationFailure::None) {
      ++stats_.triangulation_failures[tri.failure];
      continue;
    }
    const auto jac = feature_jacobians(track, state_, tri.p_global);
    if (!jac) {
      ++stats_.jacobian_rejections;
      continue;
    }
    auto block = nullspace_project(*jac, cfg_.noise.sigma_im, track.feature_id);
    if (!block) {
      ++stats_.nullspace_rejections;
      continue;
    }
    if (!mahalanobis_gate(*block, state_.P, cfg_.policy.gate_confidence).accepted) {
      ++stats_.gate_rejections;
      continue;
    }
    blocks.push_back(std::move(*block));
  }
  report.tracks_accepted = blocks.size();
  stats_.tracks_accepted += blocks.size();

  if (!blocks.empty()) {
    const StackedUpdate upd = stack_and_compress(blocks, state_.error_dim());
    report.residual_rows = static_cast<std::size_t>(upd.r.size());
    report.compressed = upd.compressed;
    const UpdateOutcome outcome = ekf_update(state_, upd, &audit_);
    report.update_applied = outcome.applied;
    if (outcome.applied) {
      ++stats_.updates_applied;
    } else {
      ++stats_.updates_skipped;
      stats_.diagnostics.push_back("frame " + std::to_string(frame.frame_id) + " at " +
                                   std::to_string(frame.timestamp) + " ns: " + outcome.diagnostic);
    }
  }

  prune_clones(state_, decision.clones_to_prune);
  audit_.inspect(state_.P, state_.error_dim());
  if (decision.request_extraction) admit_new_features(ledger_, frame, cfg_.policy);

  const double us = std::chrono::duration<double, std::micro>(Clock::now() - start).count();

  ++stats_.frames;
  stats_.max_clones = std::max(stats_.max_clones, state_.clones.size());
  if (state_.clones.size() > static_cast<std::size_t>(cfg_.policy.max_poses)) {
    ++stats_.clone_limit_violations;
  }
  report.clones_after = state_.clones.size();
  report.error_dim = state_.error_dim();
  report.frame_time_us = us;
  reports_.push_back(report);
  return estimate(us);
}

RunResult run_estimator(const FilterConfig& cfg, const InitialConditions& init,
                        const std::vector<ImuSample>& imu,
                        const std::vector<FrameObservations>& frames) {
  Estimator est(cfg, init);
  RunResult out;
  std::size_t i = 0;
  for (const auto& frame : frames) {
    if (frame.timestamp < init.timestamp) continue;
    while (i < imu.size() && imu[i].timestamp <= frame.timestamp) est.add_imu(imu[i++]);
    if (i < imu.size()) est.add_imu(imu[i++]);
    out.estimates.push_back(est.process_frame(frame));
  }
  out.reports = est.reports();
  out.ledger = est.ledger();
  out.audit = est.audit();
  out.stats = est.stats();
  return out;
}

std::vector<EstimateRecord> dead_reckoning(const FilterConfig& cfg, const InitialConditions& init,
                                           const std::vector<ImuSample>& imu, TimestampNs every_ns) {
  if (every_ns <= 0) throw std::invalid_argument("output interval must be positive");
  Estimator est(cfg, init);
  std::vector<EstimateRecord> out{est.estimate()};
  if (imu.empty()) return out;
  for (const auto& s : imu) est.add_imu(s);
  for (TimestampNs t = init.timestamp + every_ns; t <= imu.back().timestamp; t += every_ns) {
    est.propagate_to(t);
    out.push_back(est.estimate());
  }
  return out;
}

}  // namespace fmsckf
