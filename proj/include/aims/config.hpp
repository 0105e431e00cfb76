#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aims/adaptive_fusion.hpp"
#include "aims/errors.hpp"
#include "aims/evaluation.hpp"
#include "aims/simulator.hpp"

namespace aims {

/// Every tunable of a run. Scenario-dependent sensor settings stay unset
/// unless the config file names them.
struct RunConfig {
  FusionConfig fusion;
  SensorConfig sensor;
  std::optional<double> leg_scale_error;
  std::optional<std::vector<PacketLoss>> packet_loss;
  std::string scenario = "corridor_ab";
  uint64_t seed = 0;
  DistanceMode distance_mode = DistanceMode::kChord;

  bool operator==(const RunConfig& o) const {
    return fusion.imu == o.fusion.imu && fusion.lidar == o.fusion.lidar && fusion.extrinsics == o.fusion.extrinsics &&
           fusion.leg == o.fusion.leg && fusion.degeneracy == o.fusion.degeneracy &&
           fusion.adaptive == o.fusion.adaptive && fusion.initial == o.fusion.initial && sensor == o.sensor &&
           leg_scale_error == o.leg_scale_error && packet_loss == o.packet_loss && scenario == o.scenario &&
           seed == o.seed && distance_mode == o.distance_mode;
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

template <typename Int>
bool parse_int(const std::string& s, Int& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0") {
    out = false;
    return true;
  }
  return false;
}

inline std::string format_losses(const std::vector<PacketLoss>& v) {
  if (v.empty()) return "none";
  std::string out;
  for (const auto& pl : v) {
    if (!out.empty()) out += ';';
    out += format_double(pl.start) + ":" + format_double(pl.duration);
  }
  return out;
}

inline bool parse_losses(const std::string& s, std::vector<PacketLoss>& out) {
  out.clear();
  if (s == "none") return true;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) return false;
    PacketLoss pl;
    if (!parse_double(trim(item.substr(0, colon)), pl.start) || !parse_double(trim(item.substr(colon + 1)), pl.duration)) {
      return false;
    }
    out.push_back(pl);
  }
  return !out.empty();
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::optional<std::string>()> get;  // nullopt: not dumped
  std::function<bool(const std::string&)> set;      // false: unparsable value
};

inline Field real(std::string sec, std::string key, double& ref) {
  return {std::move(sec), std::move(key), [&ref] { return std::optional<std::string>(format_double(ref)); },
          [&ref](const std::string& v) { return parse_double(v, ref); }};
}

template <typename Int>
Field integer(std::string sec, std::string key, Int& ref) {
  return {std::move(sec), std::move(key), [&ref] { return std::optional<std::string>(std::to_string(ref)); },
          [&ref](const std::string& v) { return parse_int(v, ref); }};
}

inline Field flag(std::string sec, std::string key, bool& ref) {
  return {std::move(sec), std::move(key), [&ref] { return std::optional<std::string>(ref ? "true" : "false"); },
          [&ref](const std::string& v) { return parse_bool(v, ref); }};
}

inline std::vector<Field> fields(RunConfig& c) {
  auto& f = c.fusion;
  std::vector<Field> out = {
      real("imu", "sigma_g", f.imu.sigma_g),
      real("imu", "sigma_a", f.imu.sigma_a),
      real("imu", "sigma_bg", f.imu.sigma_bg),
      real("imu", "sigma_ba", f.imu.sigma_ba),
      real("imu", "gravity_z", f.imu.gravity.z()),

      integer("lidar", "k_neighbors", f.lidar.k_neighbors),
      real("lidar", "plane_validity_threshold", f.lidar.plane_validity_threshold),
      real("lidar", "max_correspondence_distance", f.lidar.max_correspondence_distance),
      real("lidar", "max_residual_gate", f.lidar.max_residual_gate),
      real("lidar", "scan_voxel", f.lidar.scan_voxel),
      real("lidar", "map_voxel", f.lidar.map_voxel),
      real("lidar", "max_map_radius", f.lidar.max_map_radius),
      integer("lidar", "map_cell_max_hits", f.lidar.map_cell_max_hits),
      real("lidar", "sigma_lidar", f.lidar.sigma_lidar),
      integer("lidar", "iterations", f.lidar.iterations),
      real("lidar", "max_planarity_ratio", f.lidar.max_planarity_ratio),

      real("leg", "sigma_leg", f.leg.sigma_leg),
      real("leg", "min_valid_fraction", f.leg.min_valid_fraction),
      real("leg", "nominal_rate_hz", f.leg.nominal_rate_hz),
      flag("leg", "use_yaw_rate", f.leg.use_yaw_rate),
      real("leg", "sigma_leg_yaw", f.leg.sigma_leg_yaw),

      real("degeneracy", "sigma0_sq", f.degeneracy.sigma0_sq),
      real("degeneracy", "w1", f.degeneracy.w1),
      real("degeneracy", "w2", f.degeneracy.w2),
      real("degeneracy", "kappa", f.degeneracy.kappa),
      integer("degeneracy", "min_correspondences", f.degeneracy.min_correspondences),
      real("degeneracy", "c_il_cap", f.degeneracy.c_il_cap),

      real("adaptive", "eta", f.adaptive.eta),
      real("adaptive", "gamma_min", f.adaptive.gamma_min),
      real("adaptive", "alpha", f.adaptive.alpha),
      flag("adaptive", "enabled", f.adaptive.enabled),

      real("filter", "init_sigma_theta", f.initial.sigma_theta),
      real("filter", "init_sigma_p", f.initial.sigma_p),
      real("filter", "init_sigma_v", f.initial.sigma_v),
      real("filter", "init_sigma_bg", f.initial.sigma_bg),
      real("filter", "init_sigma_ba", f.initial.sigma_ba),

      real("sensor", "lidar_hz", c.sensor.lidar_hz),
      real("sensor", "imu_hz", c.sensor.imu_hz),
      real("sensor", "leg_hz", c.sensor.leg_hz),
      integer("sensor", "n_azimuth", c.sensor.n_azimuth),
      integer("sensor", "n_elevation", c.sensor.n_elevation),
      real("sensor", "vertical_fov_deg", c.sensor.vertical_fov_deg),
      real("sensor", "max_range", c.sensor.max_range),
      real("sensor", "range_sigma", c.sensor.range_sigma),
      real("sensor", "gyro_sigma", c.sensor.imu.sigma_g),
      real("sensor", "accel_sigma", c.sensor.imu.sigma_a),
      real("sensor", "gyro_bias_sigma", c.sensor.imu.sigma_bg),
      real("sensor", "accel_bias_sigma", c.sensor.imu.sigma_ba),
      real("sensor", "leg_sigma", c.sensor.leg_sigma),
      flag("sensor", "leg_yaw_rate", c.sensor.leg_yaw_rate),
      real("sensor", "leg_yaw_sigma", c.sensor.leg_yaw_sigma),
  };
  out.push_back({"sensor", "leg_scale_error",
                 [&c]() -> std::optional<std::string> {
                   if (!c.leg_scale_error) return std::nullopt;
                   return format_double(*c.leg_scale_error);
                 },
                 [&c](const std::string& v) {
                   double d = 0.0;
                   if (!parse_double(v, d)) return false;
                   c.leg_scale_error = d;
                   return true;
                 }});
  out.push_back({"sensor", "packet_loss",
                 [&c]() -> std::optional<std::string> {
                   if (!c.packet_loss) return std::nullopt;
                   return format_losses(*c.packet_loss);
                 },
                 [&c](const std::string& v) {
                   std::vector<PacketLoss> pl;
                   if (!parse_losses(v, pl)) return false;
                   c.packet_loss = pl;
                   return true;
                 }});
  out.push_back({"run", "scenario", [&c] { return std::optional<std::string>(c.scenario); },
                 [&c](const std::string& v) {
                   c.scenario = v;
                   return !v.empty();
                 }});
  out.push_back(integer("run", "seed", c.seed));
  out.push_back({"evaluation", "distance_mode",
                 [&c] {
                   return std::optional<std::string>(c.distance_mode == DistanceMode::kChord ? "chord" : "path_length");
                 },
                 [&c](const std::string& v) {
                   if (v == "chord") {
                     c.distance_mode = DistanceMode::kChord;
                   } else if (v == "path_length") {
                     c.distance_mode = DistanceMode::kPathLength;
                   } else {
                     return false;
                   }
                   return true;
                 }});
  return out;
}

}  // namespace config_detail

inline void validate(const RunConfig& c) {
  const auto& f = c.fusion;
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0)) throw ValidationError(std::string(key) + " must be > 0");
  };
  auto non_negative = [](double v, const char* key) {
    if (!(v >= 0.0)) throw ValidationError(std::string(key) + " must be >= 0");
  };
  non_negative(f.imu.sigma_g, "imu.sigma_g");
  non_negative(f.imu.sigma_a, "imu.sigma_a");
  non_negative(f.imu.sigma_bg, "imu.sigma_bg");
  non_negative(f.imu.sigma_ba, "imu.sigma_ba");
  if (!std::isfinite(f.imu.gravity.z())) throw ValidationError("imu.gravity_z must be finite");
  if (f.lidar.k_neighbors < 3) throw ValidationError("lidar.k_neighbors must be >= 3");
  positive(f.lidar.plane_validity_threshold, "lidar.plane_validity_threshold");
  positive(f.lidar.max_correspondence_distance, "lidar.max_correspondence_distance");
  positive(f.lidar.max_residual_gate, "lidar.max_residual_gate");
  positive(f.lidar.scan_voxel, "lidar.scan_voxel");
  positive(f.lidar.map_voxel, "lidar.map_voxel");
  positive(f.lidar.max_map_radius, "lidar.max_map_radius");
  if (f.lidar.map_cell_max_hits < 1) throw ValidationError("lidar.map_cell_max_hits must be >= 1");
  positive(f.lidar.sigma_lidar, "lidar.sigma_lidar");
  if (f.lidar.iterations < 1) throw ValidationError("lidar.iterations must be >= 1");
  if (!(f.lidar.max_planarity_ratio > 0.0 && f.lidar.max_planarity_ratio <= 1.0)) {
    throw ValidationError("lidar.max_planarity_ratio must be in (0, 1]");
  }
  positive(f.leg.sigma_leg, "leg.sigma_leg");
  if (!(f.leg.min_valid_fraction >= 0.0 && f.leg.min_valid_fraction <= 1.0)) {
    throw ValidationError("leg.min_valid_fraction must be in [0, 1]");
  }
  positive(f.leg.nominal_rate_hz, "leg.nominal_rate_hz");
  positive(f.leg.sigma_leg_yaw, "leg.sigma_leg_yaw");
  validate(f.degeneracy);
  validate(f.adaptive);
  positive(f.initial.sigma_theta, "filter.init_sigma_theta");
  positive(f.initial.sigma_p, "filter.init_sigma_p");
  positive(f.initial.sigma_v, "filter.init_sigma_v");
  positive(f.initial.sigma_bg, "filter.init_sigma_bg");
  positive(f.initial.sigma_ba, "filter.init_sigma_ba");
  validate(c.sensor);
  if (c.leg_scale_error && !(*c.leg_scale_error > -1.0)) throw ValidationError("sensor.leg_scale_error must be > -1");
  if (c.packet_loss) {
    for (const auto& pl : *c.packet_loss) {
      if (!(pl.start >= 0.0) || !(pl.duration > 0.0)) {
        throw ValidationError("sensor.packet_loss episodes need start >= 0 and duration > 0");
      }
    }
  }
}

/// Parses flat-sectioned key=value text. '#' and ';' start comment lines.
inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  auto table = config_detail::fields(c);
  std::map<std::string, config_detail::Field*> by_name;
  for (auto& f : table) by_name[f.section + "." + f.key] = &f;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = config_detail::trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(where + "unterminated section header");
      section = config_detail::trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + "expected key=value");
    if (section.empty()) throw ParseError(where + "key outside of any [section]");
    const std::string key = config_detail::trim(line.substr(0, eq));
    const std::string value = config_detail::trim(line.substr(eq + 1));
    const std::string name = section + "." + key;
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ParseError(where + "unknown key '" + name + "'");
    if (!seen.insert(name).second) throw ParseError(where + "duplicate key '" + name + "'");
    if (!it->second->set(value)) throw ParseError(where + "invalid value '" + value + "' for '" + name + "'");
  }
  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("line 0: cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Effective config as text; parse_config(dump_config(c)) == c.
inline std::string dump_config(const RunConfig& cfg) {
  RunConfig c = cfg;
  auto table = config_detail::fields(c);
  std::string out;
  std::string section;
  for (const auto& f : table) {
    const auto v = f.get();
    if (!v) continue;
    if (f.section != section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + "=" + *v + "\n";
  }
  return out;
}

/// Sensor setup for a scenario: scenario defaults for leg drift and packet
/// loss unless the config sets them.
inline SensorConfig effective_sensors(const RunConfig& c, const Scenario& sc) {
  SensorConfig s = c.sensor;
  s.leg_scale_error = c.leg_scale_error.value_or(sc.sensors.leg_scale_error);
  s.packet_loss = c.packet_loss.value_or(sc.sensors.packet_loss);
  return s;
}

}  // namespace aims
