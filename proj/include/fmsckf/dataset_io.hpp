#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fmsckf/feature_track.hpp"
#include "fmsckf/imu_propagation.hpp"

namespace fmsckf {

/// Ground-truth record in EuRoC state_groundtruth_estimate0 layout. The
/// file stores Hamilton q_RS (body→world) as w,x,y,z; those coefficients
/// are exactly the JPL ᴵq_G stored here.
struct GroundTruthRecord {
  TimestampNs timestamp = 0;
  Vec3 p = Vec3::Zero();
  UnitQuaternion q;
  Vec3 v = Vec3::Zero();
  Vec3 b_g = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();
};

struct EstimateRecord {
  TimestampNs timestamp = 0;
  Vec3 p = Vec3::Zero();
  UnitQuaternion q;  // ᴵq_G, written as qx,qy,qz,qw
  Vec3 v = Vec3::Zero();
  Vec3 b_g = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();
  int error_dim = 0;
  double frame_time_us = 0.0;
};

/// Flat key-value summary: numeric metrics plus string labels.
struct Summary {
  std::map<std::string, double> values;
  std::map<std::string, std::string> labels;

  double at(const std::string& key) const;
};

// Line-oriented comma-separated reader shared by the file formats below.
// Blank lines and lines starting with '#' are skipped.
class CsvReader {
 public:
  explicit CsvReader(const std::string& path);
  /// Next non-comment row split on commas; std::nullopt at end of file.
  std::optional<std::vector<std::string>> next_row();
  std::size_t line() const { return line_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_ = 0;
};

/// Streaming EuRoC imu0/data.csv reader: timestamp, ω (3), a (3).
class ImuReader {
 public:
  explicit ImuReader(const std::string& path) : csv_(path) {}
  /// Throws ParseError on malformed rows or non-increasing timestamps.
  std::optional<ImuSample> next();

 private:
  CsvReader csv_;
  std::optional<TimestampNs> last_;
};

/// Streaming ground-truth reader (11 or 17 numeric columns).
class GroundTruthReader {
 public:
  explicit GroundTruthReader(const std::string& path) : csv_(path) {}
  std::optional<GroundTruthRecord> next();
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  CsvReader csv_;
  std::optional<TimestampNs> last_;
  std::vector<std::string> warnings_;
};

/// Streaming track-file reader: timestamp, frame_id, then (id, u, v) triples.
class TrackReader {
 public:
  explicit TrackReader(const std::string& path) : csv_(path) {}
  std::optional<FrameObservations> next();

 private:
  CsvReader csv_;
  std::optional<FrameId> last_frame_;
  std::optional<TimestampNs> last_time_;
};

std::vector<ImuSample> read_imu(const std::string& path);
std::vector<GroundTruthRecord> read_groundtruth(const std::string& path,
                                                std::vector<std::string>* warnings = nullptr);
std::vector<FrameObservations> read_tracks(const std::string& path);
std::vector<EstimateRecord> read_estimates(const std::string& path);
Summary read_summary(const std::string& path);

/// Writers throw std::runtime_error when the path cannot be written.
void write_imu(const std::string& path, const std::vector<ImuSample>& samples);
void write_groundtruth(const std::string& path, const std::vector<GroundTruthRecord>& records);
void write_tracks(const std::string& path, const std::vector<FrameObservations>& frames);
void write_estimates(const std::string& path, const std::vector<EstimateRecord>& records);
void write_summary(const std::string& path, const Summary& summary);

/// Generic plot-ready table: header row followed by numeric rows.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows);

/// Shortest text form that parses back to the same double.
std::string format_double(double value);

}  // namespace fmsckf
