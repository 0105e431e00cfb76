#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aims/adaptive_fusion.hpp"
#include "aims/errors.hpp"
#include "aims/evaluation.hpp"
#include "aims/simulator.hpp"

namespace aims {

namespace fs = std::filesystem;

namespace io_detail {

inline void append(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.10g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

inline void append_row(std::string& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    first = false;
    append(out, v);
  }
  out += '\n';
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

/// Reads a CSV file with a fixed header into rows of doubles.
class CsvReader {
 public:
  CsvReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError(path_.string() + ": cannot open");
  }

  std::string header() {
    std::string line;
    if (!std::getline(in_, line)) throw DataError(path_.string() + ": empty file");
    ++line_;
    return strip_cr(line);
  }

  void expect_header(const std::string& expected) {
    const std::string h = header();
    if (h != expected) throw DataError(where() + "expected header '" + expected + "', got '" + h + "'");
  }

  bool next(std::vector<double>& row, std::size_t columns) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      line = strip_cr(line);
      if (line.empty()) continue;
      const auto cells = split(line);
      if (cells.size() != columns) {
        throw DataError(where() + "expected " + std::to_string(columns) + " columns, got " +
                        std::to_string(cells.size()));
      }
      row.resize(columns);
      for (std::size_t i = 0; i < columns; ++i) row[i] = number(cells[i]);
      return true;
    }
    return false;
  }

  double number(const std::string& s) const {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || !std::isfinite(v)) throw DataError(where() + "bad number '" + s + "'");
    return v;
  }

  std::string where() const { return path_.string() + " line " + std::to_string(line_) + ": "; }
  std::size_t line() const { return line_; }
  std::istream& stream() { return in_; }

 private:
  fs::path path_;
  std::ifstream in_;
  std::size_t line_ = 0;
};

inline void check_order(const CsvReader& r, double prev, double t, bool have_prev) {
  if (have_prev && !(t > prev)) throw DataError(r.where() + "timestamp " + std::to_string(t) + " is not increasing");
}

}  // namespace io_detail

/// Writes `content` to a temporary sibling and renames it over `path`.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(tmp.string() + ": cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw DataError(tmp.string() + ": write failed");
  }
  fs::rename(tmp, path);
}

inline std::string format_trajectory(const Trajectory& traj) {
  std::string out = "t,x,y,z,qw,qx,qy,qz\n";
  for (const auto& r : traj) {
    const auto& q = r.R.quaternion();
    io_detail::append_row(out, {r.t, r.p.x(), r.p.y(), r.p.z(), q.w(), q.x(), q.y(), q.z()});
  }
  return out;
}

inline void write_trajectory(const fs::path& path, const Trajectory& traj) {
  write_file_atomic(path, format_trajectory(traj));
}

inline Trajectory read_trajectory(const fs::path& path) {
  io_detail::CsvReader r(path);
  r.expect_header("t,x,y,z,qw,qx,qy,qz");
  Trajectory out;
  std::vector<double> row;
  while (r.next(row, 8)) {
    io_detail::check_order(r, out.empty() ? 0.0 : out.back().t, row[0], !out.empty());
    const Eigen::Quaterniond q(row[4], row[5], row[6], row[7]);
    if (std::abs(q.norm() - 1.0) > 1e-6) throw DataError(r.where() + "quaternion is not unit length");
    out.push_back({row[0], Vec3(row[1], row[2], row[3]), Rotation(q)});
  }
  return out;
}

inline std::string format_segments(const std::vector<Segment>& segs) {
  std::string out = "name,point_start,point_end,t_start,t_end,true_distance_m\n";
  for (const auto& s : segs) {
    out += s.name + "," + s.point_start + "," + s.point_end + ",";
    io_detail::append_row(out, {s.t_start, s.t_end, s.true_distance});
  }
  return out;
}

inline std::vector<Segment> read_segments(const fs::path& path) {
  io_detail::CsvReader r(path);
  r.expect_header("name,point_start,point_end,t_start,t_end,true_distance_m");
  std::vector<Segment> out;
  std::string line;
  while (std::getline(r.stream(), line)) {
    line = io_detail::strip_cr(line);
    if (line.empty()) continue;
    const auto cells = io_detail::split(line);
    const std::string where = path.string() + " line " + std::to_string(out.size() + 2) + ": ";
    if (cells.size() != 6) throw DataError(where + "expected 6 columns");
    Segment s{cells[0], cells[1], cells[2], r.number(cells[3]), r.number(cells[4]), r.number(cells[5])};
    if (s.name.empty()) throw DataError(where + "empty segment name");
    out.push_back(std::move(s));
  }
  return out;
}

inline std::string format_diagnostics(const std::vector<EpochRecord>& recs) {
  std::string out = "t,n_corr,r_mean,r_var,o_lidar,c_il,d_k,d_smooth,gamma_lidar,gamma_leg,lidar_skipped,leg_skipped\n";
  for (const auto& e : recs) {
    io_detail::append(out, e.t);
    out += ',' + std::to_string(e.n_corr) + ',';
    io_detail::append_row(out, {e.stats.mean, e.stats.variance, e.indices.o_lidar, e.indices.c_il, e.indices.d_k,
                                e.indices.d_smooth, e.gammas.gamma_lidar, e.gammas.gamma_leg});
    out.pop_back();
    out += std::string(",") + (e.lidar_skipped ? "1" : "0") + "," + (e.leg_skipped ? "1" : "0") + "\n";
  }
  return out;
}

struct DiagnosticsRow {
  double t = 0.0;
  double n_corr = 0.0;
  double r_mean = 0.0;
  double r_var = 0.0;
  double o_lidar = 0.0;
  double c_il = 0.0;
  double d_k = 0.0;
  double d_smooth = 0.0;
  double gamma_lidar = 1.0;
  double gamma_leg = 1.0;
  bool lidar_skipped = false;
  bool leg_skipped = false;
};

inline std::vector<DiagnosticsRow> read_diagnostics(const fs::path& path) {
  io_detail::CsvReader r(path);
  r.expect_header("t,n_corr,r_mean,r_var,o_lidar,c_il,d_k,d_smooth,gamma_lidar,gamma_leg,lidar_skipped,leg_skipped");
  std::vector<DiagnosticsRow> out;
  std::vector<double> v;
  while (r.next(v, 12)) {
    io_detail::check_order(r, out.empty() ? 0.0 : out.back().t, v[0], !out.empty());
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10] != 0.0, v[11] != 0.0});
  }
  return out;
}

inline std::string format_scan(const LidarScan& scan) {
  std::string out = "t=";
  io_detail::append(out, scan.t);
  out += '\n';
  for (const auto& p : scan.points) io_detail::append_row(out, {p.x(), p.y(), p.z()});
  return out;
}

inline std::string scan_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.csv", index);
  return buf;
}

/// Log directory: imu.csv, leg.csv, gt.csv, segments.csv and lidar/NNNNNN.csv.
inline void write_log(const fs::path& dir, const SensorLog& log) {
  fs::create_directories(dir / "lidar");
  std::string imu = "t,wx,wy,wz,ax,ay,az\n";
  for (const auto& s : log.imu) {
    io_detail::append_row(imu, {s.t, s.omega_m.x(), s.omega_m.y(), s.omega_m.z(), s.a_m.x(), s.a_m.y(), s.a_m.z()});
  }
  write_file_atomic(dir / "imu.csv", imu);

  const bool yaw = !log.leg.empty() && log.leg.front().omega_z.has_value();
  std::string leg = yaw ? "t,vx,vy,vz,wz\n" : "t,vx,vy,vz\n";
  for (const auto& s : log.leg) {
    if (yaw) {
      io_detail::append_row(leg, {s.t, s.v_body.x(), s.v_body.y(), s.v_body.z(), s.omega_z.value_or(0.0)});
    } else {
      io_detail::append_row(leg, {s.t, s.v_body.x(), s.v_body.y(), s.v_body.z()});
    }
  }
  write_file_atomic(dir / "leg.csv", leg);

  std::string gt = "t,x,y,z,qw,qx,qy,qz\n";
  for (const auto& r : log.gt) {
    const auto& q = r.R.quaternion();
    io_detail::append_row(gt, {r.t, r.p.x(), r.p.y(), r.p.z(), q.w(), q.x(), q.y(), q.z()});
  }
  write_file_atomic(dir / "gt.csv", gt);
  write_file_atomic(dir / "segments.csv", format_segments(log.segments));
  for (std::size_t i = 0; i < log.scans.size(); ++i) {
    write_file_atomic(dir / "lidar" / scan_file_name(i), format_scan(log.scans[i]));
  }
}

inline LidarScan read_scan(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open");
  LidarScan scan;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + " line 1: missing 't=' header");
  line = io_detail::strip_cr(line);
  if (line.rfind("t=", 0) != 0) throw DataError(path.string() + " line 1: expected 't=<seconds>'");
  double t = 0.0;
  const char* b = line.data() + 2;
  const char* e = line.data() + line.size();
  auto [ptr, ec] = std::from_chars(b, e, t);
  if (ec != std::errc() || ptr != e || !std::isfinite(t)) throw DataError(path.string() + " line 1: bad timestamp");
  scan.t = t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = io_detail::strip_cr(line);
    if (line.empty()) continue;
    double v[3];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 3; ++k) {
      auto res = std::from_chars(p, end, v[k]);
      const bool last = k == 2;
      if (res.ec != std::errc() || !std::isfinite(v[k]) || (last ? res.ptr != end : (res.ptr == end || *res.ptr != ','))) {
        throw DataError(path.string() + " line " + std::to_string(line_no) + ": expected x,y,z");
      }
      p = res.ptr + (last ? 0 : 1);
    }
    scan.points.emplace_back(v[0], v[1], v[2]);
  }
  return scan;
}

inline SensorLog read_log(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + ": not a log directory");
  SensorLog log;
  std::vector<double> row;
  {
    io_detail::CsvReader r(dir / "imu.csv");
    r.expect_header("t,wx,wy,wz,ax,ay,az");
    while (r.next(row, 7)) {
      io_detail::check_order(r, log.imu.empty() ? 0.0 : log.imu.back().t, row[0], !log.imu.empty());
      log.imu.push_back({row[0], Vec3(row[1], row[2], row[3]), Vec3(row[4], row[5], row[6])});
    }
  }
  if (fs::exists(dir / "leg.csv")) {
    io_detail::CsvReader r(dir / "leg.csv");
    const std::string h = r.header();
    std::size_t cols = 0;
    if (h == "t,vx,vy,vz") {
      cols = 4;
    } else if (h == "t,vx,vy,vz,wz") {
      cols = 5;
    } else {
      throw DataError(r.where() + "expected header 't,vx,vy,vz'");
    }
    while (r.next(row, cols)) {
      io_detail::check_order(r, log.leg.empty() ? 0.0 : log.leg.back().t, row[0], !log.leg.empty());
      LegOdomSample s{row[0], Vec3(row[1], row[2], row[3]), std::nullopt};
      if (cols == 5) s.omega_z = row[4];
      log.leg.push_back(s);
    }
  }
  if (fs::exists(dir / "gt.csv")) log.gt = read_trajectory(dir / "gt.csv");
  if (fs::exists(dir / "segments.csv")) log.segments = read_segments(dir / "segments.csv");

  std::vector<fs::path> files;
  if (fs::is_directory(dir / "lidar")) {
    for (const auto& entry : fs::directory_iterator(dir / "lidar")) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    LidarScan s = read_scan(f);
    if (!log.scans.empty() && !(s.t > log.scans.back().t)) {
      throw DataError(f.string() + " line 1: scan timestamp is not increasing");
    }
    log.scans.push_back(std::move(s));
  }
  if (log.scans.empty()) throw DataError(dir.string() + ": no LiDAR scans");
  return log;
}

/// Key-value report with one row per segment.
inline std::string format_report(const MetricsReport& rep) {
  std::string out;
  auto kv = [&out](const std::string& k, double v) {
    out += k + "=";
    io_detail::append(out, v);
    out += '\n';
  };
  kv("m_end", rep.m_end);
  kv("m_list", rep.m_list_combined);
  for (const auto& g : rep.groups) kv("m_list." + g.name, g.m_list);
  out += "segments=" + std::to_string(rep.segments.size()) + "\n";
  for (std::size_t i = 0; i < rep.segments.size(); ++i) {
    const auto& s = rep.segments[i];
    out += "segment." + std::to_string(i) + "=" + s.segment.name + "," + s.segment.point_start + "," +
           s.segment.point_end + ",";
    io_detail::append_row(out, {s.estimated, s.segment.true_distance, s.abs_error});
  }
  return out;
}

inline std::string format_report_csv(const MetricsReport& rep) {
  std::string out = "name,point_start,point_end,estimated_m,true_m,abs_error_m\n";
  for (const auto& s : rep.segments) {
    out += s.segment.name + "," + s.segment.point_start + "," + s.segment.point_end + ",";
    io_detail::append_row(out, {s.estimated, s.segment.true_distance, s.abs_error});
  }
  return out;
}

/// CSV companion path of a report file.
inline fs::path report_csv_path(const fs::path& report) {
  fs::path p = report;
  if (p.extension() == ".csv") return p.replace_filename(p.stem().string() + "_segments.csv");
  return p.replace_extension(".csv");
}

}  // namespace aims
