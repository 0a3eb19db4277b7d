#include "fmsckf/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fmsckf/errors.hpp"

namespace fmsckf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(const CsvReader& csv, const std::string& field) {
  const std::string_view t = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    if (t == "nan" || t == "NaN") return std::numeric_limits<double>::quiet_NaN();
    throw ParseError(csv.path(), csv.line(), "not a number: '" + std::string(t) + "'");
  }
  return v;
}

std::int64_t parse_int(const CsvReader& csv, const std::string& field) {
  const std::string_view t = trim(field);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ParseError(csv.path(), csv.line(), "not an integer: '" + std::string(t) + "'");
  }
  return v;
}

Vec3 parse_vec3(const CsvReader& csv, const std::vector<std::string>& row, std::size_t first) {
  return {parse_double(csv, row[first]), parse_double(csv, row[first + 1]),
          parse_double(csv, row[first + 2])};
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

void put(std::ostream& os, const Vec3& v) {
  os << ',' << format_double(v.x()) << ',' << format_double(v.y()) << ',' << format_double(v.z());
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, ptr);
}

double Summary::at(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw std::out_of_range("summary has no key '" + key + "'");
  return it->second;
}

CsvReader::CsvReader(const std::string& path) : path_(path), in_(path) {
  if (!in_) throw std::runtime_error("cannot open '" + path + "'");
}

std::optional<std::vector<std::string>> CsvReader::next_row() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss{std::string(t)};
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!t.empty() && t.back() == ',') fields.emplace_back();
    return fields;
  }
  return std::nullopt;
}

std::optional<ImuSample> ImuReader::next() {
  auto row = csv_.next_row();
  if (!row) return std::nullopt;
  if (row->size() != 7) {
    throw ParseError(csv_.path(), csv_.line(),
                     "expected 7 fields, found " + std::to_string(row->size()));
  }
  ImuSample s;
  s.timestamp = parse_int(csv_, (*row)[0]);
  s.gyro = parse_vec3(csv_, *row, 1);
  s.accel = parse_vec3(csv_, *row, 4);
  if (last_ && s.timestamp <= *last_) {
    throw ParseError(csv_.path(), csv_.line(), "timestamp not strictly increasing");
  }
  last_ = s.timestamp;
  return s;
}

std::optional<GroundTruthRecord> GroundTruthReader::next() {
  auto row = csv_.next_row();
  if (!row) return std::nullopt;
  if (row->size() != 11 && row->size() != 17) {
    throw ParseError(csv_.path(), csv_.line(),
                     "expected 11 or 17 fields, found " + std::to_string(row->size()));
  }
  GroundTruthRecord r;
  r.timestamp = parse_int(csv_, (*row)[0]);
  r.p = parse_vec3(csv_, *row, 1);
  const double w = parse_double(csv_, (*row)[4]);
  const Vec3 xyz = parse_vec3(csv_, *row, 5);
  const Vec4 c(xyz.x(), xyz.y(), xyz.z(), w);
  if (std::abs(c.norm() - 1.0) > 1e-3) {
    warnings_.push_back(csv_.path() + ":" + std::to_string(csv_.line()) +
                        ": quaternion norm " + format_double(c.norm()) + " renormalized");
  }
  try {
    r.q = UnitQuaternion::from_coeffs(c);
  } catch (const std::invalid_argument& e) {
    throw ParseError(csv_.path(), csv_.line(), e.what());
  }
  r.v = parse_vec3(csv_, *row, 8);
  if (row->size() == 17) {
    r.b_g = parse_vec3(csv_, *row, 11);
    r.b_a = parse_vec3(csv_, *row, 14);
  }
  if (last_ && r.timestamp <= *last_) {
    throw ParseError(csv_.path(), csv_.line(), "timestamp not strictly increasing");
  }
  last_ = r.timestamp;
  return r;
}

std::optional<FrameObservations> TrackReader::next() {
  auto row = csv_.next_row();
  if (!row) return std::nullopt;
  if (row->size() < 2 || (row->size() - 2) % 3 != 0) {
    throw ParseError(csv_.path(), csv_.line(),
                     "expected timestamp, frame_id and (feature_id,u,v) triples");
  }
  FrameObservations f;
  f.timestamp = parse_int(csv_, (*row)[0]);
  f.frame_id = parse_int(csv_, (*row)[1]);
  if (last_frame_ && f.frame_id <= *last_frame_) {
    throw ParseError(csv_.path(), csv_.line(), "frame ids not strictly increasing");
  }
  if (last_time_ && f.timestamp < *last_time_) {
    throw ParseError(csv_.path(), csv_.line(), "frame timestamps decreasing");
  }
  std::set<FeatureId> ids;
  for (std::size_t i = 2; i < row->size(); i += 3) {
    FrameObservations::Entry e;
    e.feature_id = parse_int(csv_, (*row)[i]);
    e.z = Vec2(parse_double(csv_, (*row)[i + 1]), parse_double(csv_, (*row)[i + 2]));
    if (!ids.insert(e.feature_id).second) {
      throw ParseError(csv_.path(), csv_.line(),
                       "duplicate feature id " + std::to_string(e.feature_id));
    }
    f.features.push_back(e);
  }
  last_frame_ = f.frame_id;
  last_time_ = f.timestamp;
  return f;
}

std::vector<ImuSample> read_imu(const std::string& path) {
  ImuReader reader(path);
  std::vector<ImuSample> out;
  while (auto s = reader.next()) out.push_back(*s);
  return out;
}

std::vector<GroundTruthRecord> read_groundtruth(const std::string& path,
                                                std::vector<std::string>* warnings) {
  GroundTruthReader reader(path);
  std::vector<GroundTruthRecord> out;
  while (auto r = reader.next()) out.push_back(*r);
  if (warnings) *warnings = reader.warnings();
  return out;
}

std::vector<FrameObservations> read_tracks(const std::string& path) {
  TrackReader reader(path);
  std::vector<FrameObservations> out;
  while (auto f = reader.next()) out.push_back(std::move(*f));
  return out;
}

std::vector<EstimateRecord> read_estimates(const std::string& path) {
  CsvReader csv(path);
  std::vector<EstimateRecord> out;
  while (auto row = csv.next_row()) {
    if (row->size() != 19) {
      throw ParseError(path, csv.line(), "expected 19 fields, found " + std::to_string(row->size()));
    }
    EstimateRecord r;
    r.timestamp = parse_int(csv, (*row)[0]);
    r.p = parse_vec3(csv, *row, 1);
    const Vec3 xyz = parse_vec3(csv, *row, 4);
    r.q = UnitQuaternion::from_coeffs(Vec4(xyz.x(), xyz.y(), xyz.z(), parse_double(csv, (*row)[7])));
    r.v = parse_vec3(csv, *row, 8);
    r.b_g = parse_vec3(csv, *row, 11);
    r.b_a = parse_vec3(csv, *row, 14);
    r.error_dim = static_cast<int>(parse_int(csv, (*row)[17]));
    r.frame_time_us = parse_double(csv, (*row)[18]);
    if (!out.empty() && r.timestamp <= out.back().timestamp) {
      throw ParseError(path, csv.line(), "timestamp not strictly increasing");
    }
    out.push_back(r);
  }
  return out;
}

Summary read_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, e.what());
  }
  if (!doc.is_object()) throw ParseError(path, 0, "summary must be a JSON object");
  Summary s;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_number()) {
      s.values[key] = value.get<double>();
    } else if (value.is_null()) {
      s.values[key] = std::numeric_limits<double>::quiet_NaN();
    } else if (value.is_string()) {
      s.labels[key] = value.get<std::string>();
    } else {
      throw ParseError(path, 0, "summary value for '" + key + "' is not flat");
    }
  }
  return s;
}

void write_imu(const std::string& path, const std::vector<ImuSample>& samples) {
  auto out = open_for_write(path);
  out << "#timestamp [ns],w_RS_S_x [rad s^-1],w_RS_S_y [rad s^-1],w_RS_S_z [rad s^-1],"
         "a_RS_S_x [m s^-2],a_RS_S_y [m s^-2],a_RS_S_z [m s^-2]\n";
  for (const auto& s : samples) {
    out << s.timestamp;
    put(out, s.gyro);
    put(out, s.accel);
    out << '\n';
  }
  finish(out, path);
}

void write_groundtruth(const std::string& path, const std::vector<GroundTruthRecord>& records) {
  auto out = open_for_write(path);
  out << "#timestamp, p_RS_R_x [m], p_RS_R_y [m], p_RS_R_z [m], q_RS_w [], q_RS_x [], q_RS_y [], "
         "q_RS_z [], v_RS_R_x [m s^-1], v_RS_R_y [m s^-1], v_RS_R_z [m s^-1], "
         "b_w_RS_S_x [rad s^-1], b_w_RS_S_y [rad s^-1], b_w_RS_S_z [rad s^-1], "
         "b_a_RS_S_x [m s^-2], b_a_RS_S_y [m s^-2], b_a_RS_S_z [m s^-2]\n";
  for (const auto& r : records) {
    const Vec4& c = r.q.coeffs();
    out << r.timestamp;
    put(out, r.p);
    out << ',' << format_double(c(3)) << ',' << format_double(c(0)) << ',' << format_double(c(1))
        << ',' << format_double(c(2));
    put(out, r.v);
    put(out, r.b_g);
    put(out, r.b_a);
    out << '\n';
  }
  finish(out, path);
}

void write_tracks(const std::string& path, const std::vector<FrameObservations>& frames) {
  auto out = open_for_write(path);
  out << "# timestamp_ns,frame_id[,feature_id,u,v]...  (u, v normalized image coordinates)\n";
  for (const auto& f : frames) {
    out << f.timestamp << ',' << f.frame_id;
    for (const auto& e : f.features) {
      out << ',' << e.feature_id << ',' << format_double(e.z.x()) << ',' << format_double(e.z.y());
    }
    out << '\n';
  }
  finish(out, path);
}

void write_estimates(const std::string& path, const std::vector<EstimateRecord>& records) {
  auto out = open_for_write(path);
  out << "#timestamp_ns,p_x,p_y,p_z,q_x,q_y,q_z,q_w,v_x,v_y,v_z,bg_x,bg_y,bg_z,ba_x,ba_y,ba_z,"
         "error_dim,frame_time_us\n";
  for (const auto& r : records) {
    const Vec4& c = r.q.coeffs();
    out << r.timestamp;
    put(out, r.p);
    out << ',' << format_double(c(0)) << ',' << format_double(c(1)) << ',' << format_double(c(2))
        << ',' << format_double(c(3));
    put(out, r.v);
    put(out, r.b_g);
    put(out, r.b_a);
    out << ',' << r.error_dim << ',' << format_double(r.frame_time_us) << '\n';
  }
  finish(out, path);
}

void write_summary(const std::string& path, const Summary& summary) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [k, v] : summary.labels) doc[k] = v;
  for (const auto& [k, v] : summary.values) {
    if (std::isfinite(v)) {
      doc[k] = v;
    } else {
      doc[k] = nullptr;
    }
  }
  auto out = open_for_write(path);
  out << doc.dump(2) << '\n';
  finish(out, path);
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
  auto out = open_for_write(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
  finish(out, path);
}

}  // namespace fmsckf
