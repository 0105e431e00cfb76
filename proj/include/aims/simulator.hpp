#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "aims/errors.hpp"
#include "aims/evaluation.hpp"
#include "aims/filter_core.hpp"
#include "aims/leg_pipeline.hpp"
#include "aims/lidar_pipeline.hpp"
#include "aims/manifold.hpp"

namespace aims {

// ---------------------------------------------------------------------------
// Counter-based noise. Every draw is a pure function of (seed, stream, counter).

namespace rng {

inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t hash(uint64_t seed, uint64_t stream, uint64_t counter) {
  return mix64(mix64(mix64(seed) ^ stream) ^ counter);
}

/// Uniform in (0, 1).
inline double uniform(uint64_t seed, uint64_t stream, uint64_t counter) {
  return (static_cast<double>(hash(seed, stream, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two consecutive counters.
inline double normal(uint64_t seed, uint64_t stream, uint64_t counter) {
  const double u1 = uniform(seed, stream, 2 * counter);
  const double u2 = uniform(seed, stream, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

enum Stream : uint64_t {
  kGyroNoise = 1,
  kAccelNoise,
  kGyroBiasWalk,
  kAccelBiasWalk,
  kRangeNoise,
  kLegNoise,
  kLegYawNoise,
};

}  // namespace rng

// ---------------------------------------------------------------------------
// World

/// Axis-aligned rectangle: the plane x[axis] = offset, bounded by [lo, hi] on
/// the two other axes (the `axis` components of lo/hi are ignored).
struct Rect {
  int axis = 2;
  double offset = 0.0;
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

struct WorldModel {
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  std::vector<Rect> surfaces;
  std::vector<Box> boxes;
};

struct RayHit {
  double range = 0.0;
  Vec3 normal = Vec3::UnitZ();  // facing the ray origin
};

inline constexpr double kFloorZ = -0.4;
inline constexpr double kCeilingZ = 2.2;

/// Nearest positive intersection within max_range.
inline std::optional<RayHit> raycast(const WorldModel& world, const Vec3& origin, const Vec3& dir,
                                     double max_range) {
  std::optional<RayHit> best;
  double best_t = max_range;
  for (const auto& s : world.surfaces) {
    const int a = s.axis;
    if (std::abs(dir[a]) < 1e-12) continue;
    const double t = (s.offset - origin[a]) / dir[a];
    if (!(t > 1e-9) || t > best_t) continue;
    const Vec3 h = origin + t * dir;
    bool inside = true;
    for (int k = 0; k < 3 && inside; ++k) {
      if (k != a) inside = h[k] >= s.lo[k] && h[k] <= s.hi[k];
    }
    if (!inside) continue;
    best_t = t;
    Vec3 n = Vec3::Zero();
    n[a] = dir[a] > 0.0 ? -1.0 : 1.0;
    best = RayHit{t, n};
  }
  for (const auto& b : world.boxes) {
    double t0 = 0.0;
    double t1 = best_t;
    int enter_axis = -1;
    bool miss = false;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(dir[k]) < 1e-12) {
        if (origin[k] < b.lo[k] || origin[k] > b.hi[k]) {
          miss = true;
          break;
        }
        continue;
      }
      double ta = (b.lo[k] - origin[k]) / dir[k];
      double tb = (b.hi[k] - origin[k]) / dir[k];
      if (ta > tb) std::swap(ta, tb);
      if (ta > t0) {
        t0 = ta;
        enter_axis = k;
      }
      t1 = std::min(t1, tb);
      if (t0 > t1) {
        miss = true;
        break;
      }
    }
    if (miss || enter_axis < 0 || !(t0 > 1e-9) || t0 > best_t) continue;
    best_t = t0;
    Vec3 n = Vec3::Zero();
    n[enter_axis] = dir[enter_axis] > 0.0 ? -1.0 : 1.0;
    best = RayHit{t0, n};
  }
  return best;
}

namespace detail {

inline void add_floor_ceiling(WorldModel& w, double x0, double x1, double y0, double y1) {
  w.surfaces.push_back({2, kFloorZ, {x0, y0, 0.0}, {x1, y1, 0.0}});
  w.surfaces.push_back({2, kCeilingZ, {x0, y0, 0.0}, {x1, y1, 0.0}});
}

/// Wall in the plane y = y, spanning x in [x0, x1].
inline void add_wall_y(WorldModel& w, double y, double x0, double x1) {
  w.surfaces.push_back({1, y, {x0, 0.0, kFloorZ}, {x1, 0.0, kCeilingZ}});
}

/// Wall in the plane x = x, spanning y in [y0, y1].
inline void add_wall_x(WorldModel& w, double x, double y0, double y1) {
  w.surfaces.push_back({0, x, {0.0, y0, kFloorZ}, {0.0, y1, kCeilingZ}});
}

}  // namespace detail

/// Open-ended rectangular corridor along +x, centred on y = 0.
inline WorldModel make_corridor(double length, double width, double x_start = 0.0) {
  WorldModel w;
  w.length = length;
  w.width = width;
  w.height = kCeilingZ - kFloorZ;
  detail::add_floor_ceiling(w, x_start, x_start + length, -0.5 * width, 0.5 * width);
  detail::add_wall_y(w, 0.5 * width, x_start, x_start + length);
  detail::add_wall_y(w, -0.5 * width, x_start, x_start + length);
  return w;
}

// ---------------------------------------------------------------------------
// Trajectory

struct Motion {
  enum class Kind { kStraight, kTurn, kPause };
  Kind kind = Kind::kPause;
  double amount = 0.0;  // m, rad (signed) or s
  double rate = 0.0;    // cruise speed m/s or peak yaw rate rad/s
  double ramp = 0.0;    // raised-cosine ramp time, s

  static Motion straight(double distance, double speed, double ramp) {
    return {Kind::kStraight, distance, speed, ramp};
  }
  static Motion turn(double angle, double rate, double ramp) { return {Kind::kTurn, angle, rate, ramp}; }
  static Motion pause(double duration) { return {Kind::kPause, duration, 0.0, 0.0}; }
};

struct TruthState {
  double t = 0.0;
  Rotation R;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();      // world
  Vec3 a = Vec3::Zero();      // world
  Vec3 omega = Vec3::Zero();  // body
};

/// Planar piecewise trajectory: straights at constant heading, in-place yaw
/// turns and pauses. Speed and yaw-rate profiles use raised-cosine ramps, so
/// acceleration is continuous.
class GroundTruthTrajectory {
 public:
  GroundTruthTrajectory() = default;
  GroundTruthTrajectory(Vec3 p0, double yaw0, std::vector<Motion> motions) : motions_(std::move(motions)) {
    double t = 0.0;
    Vec3 p = p0;
    double yaw = yaw0;
    for (const auto& m : motions_) {
      Piece pc;
      pc.t0 = t;
      pc.p0 = p;
      pc.yaw0 = yaw;
      pc.m = m;
      const double mag = std::abs(m.amount);
      switch (m.kind) {
        case Motion::Kind::kPause:
          pc.duration = m.amount;
          break;
        case Motion::Kind::kStraight:
        case Motion::Kind::kTurn: {
          pc.peak = m.rate;
          pc.ramp = m.ramp;
          if (mag < pc.peak * pc.ramp) pc.peak = mag / pc.ramp;
          pc.duration = pc.ramp + mag / pc.peak;
          break;
        }
      }
      if (!(pc.duration > 0.0)) throw ValidationError("trajectory motion with non-positive duration");
      if (m.kind == Motion::Kind::kStraight) p += m.amount * Vec3(std::cos(yaw), std::sin(yaw), 0.0);
      if (m.kind == Motion::Kind::kTurn) yaw += m.amount;
      t += pc.duration;
      pieces_.push_back(pc);
    }
    duration_ = t;
  }

  double duration() const { return duration_; }
  std::size_t size() const { return pieces_.size(); }
  double start_of(std::size_t i) const { return pieces_.at(i).t0; }
  double end_of(std::size_t i) const { return pieces_.at(i).t0 + pieces_.at(i).duration; }
  double path_length() const {
    double s = 0.0;
    for (const auto& m : motions_) {
      if (m.kind == Motion::Kind::kStraight) s += std::abs(m.amount);
    }
    return s;
  }

  TruthState at(double t) const {
    TruthState out;
    out.t = t;
    if (pieces_.empty()) return out;
    std::size_t i = 0;
    while (i + 1 < pieces_.size() && t >= pieces_[i + 1].t0) ++i;
    const Piece& pc = pieces_[i];
    const double tau = std::clamp(t - pc.t0, 0.0, pc.duration);
    double s = 0.0;
    double ds = 0.0;
    double dds = 0.0;
    if (pc.m.kind != Motion::Kind::kPause) {
      profile(pc, tau, s, ds, dds);
      if (pc.m.amount < 0.0) {
        s = -s;
        ds = -ds;
        dds = -dds;
      }
    }
    double yaw = pc.yaw0;
    out.p = pc.p0;
    if (pc.m.kind == Motion::Kind::kStraight) {
      const Vec3 dir(std::cos(pc.yaw0), std::sin(pc.yaw0), 0.0);
      out.p += s * dir;
      out.v = ds * dir;
      out.a = dds * dir;
    } else if (pc.m.kind == Motion::Kind::kTurn) {
      yaw += s;
      out.omega = Vec3(0.0, 0.0, ds);
    }
    out.R = Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ())));
    return out;
  }

 private:
  struct Piece {
    double t0 = 0.0;
    double duration = 0.0;
    double peak = 0.0;
    double ramp = 0.0;
    Vec3 p0 = Vec3::Zero();
    double yaw0 = 0.0;
    Motion m;
  };

  /// Unsigned displacement, rate and its derivative at local time tau.
  static void profile(const Piece& pc, double tau, double& s, double& ds, double& dds) {
    const double V = pc.peak;
    const double T = pc.ramp;
    const double total = pc.duration;
    const double mag = std::abs(pc.m.amount);
    const auto up = [&](double u, double& su, double& vu, double& au) {
      su = 0.5 * V * (u - T / std::numbers::pi * std::sin(std::numbers::pi * u / T));
      vu = 0.5 * V * (1.0 - std::cos(std::numbers::pi * u / T));
      au = 0.5 * V * std::numbers::pi / T * std::sin(std::numbers::pi * u / T);
    };
    if (tau < T) {
      up(tau, s, ds, dds);
    } else if (tau <= total - T) {
      s = 0.5 * V * T + V * (tau - T);
      ds = V;
      dds = 0.0;
    } else {
      double su = 0.0;
      double vu = 0.0;
      double au = 0.0;
      up(total - tau, su, vu, au);
      s = mag - su;
      ds = vu;
      dds = -au;
    }
  }

  std::vector<Motion> motions_;
  std::vector<Piece> pieces_;
  double duration_ = 0.0;
};

// ---------------------------------------------------------------------------
// Sensors

struct PacketLoss {
  double start = 0.0;     // s
  double duration = 0.0;  // s
  bool operator==(const PacketLoss&) const = default;
};

struct SensorConfig {
  double lidar_hz = 10.0;
  double imu_hz = 50.0;
  double leg_hz = 200.0;
  int n_azimuth = 360;
  int n_elevation = 16;
  double vertical_fov_deg = 15.0;  // rings span +-this
  double max_range = 50.0;         // m
  double range_sigma = 0.02;       // m
  ImuNoiseParams imu;
  double leg_sigma = 0.05;  // m/s per sample
  double leg_scale_error = 0.0;
  std::vector<PacketLoss> packet_loss;
  bool leg_yaw_rate = false;
  double leg_yaw_sigma = 0.01;  // rad/s per sample
  LidarExtrinsics extrinsics;

  bool operator==(const SensorConfig&) const = default;
};

inline void validate(const SensorConfig& c) {
  if (!(c.lidar_hz > 0.0) || !(c.imu_hz > 0.0) || !(c.leg_hz > 0.0)) throw ValidationError("sensor rates must be > 0");
  if (c.n_azimuth < 1 || c.n_elevation < 1) throw ValidationError("sensor ray counts must be >= 1");
  if (!(c.max_range > 0.0)) throw ValidationError("sensor.max_range must be > 0");
  if (!(c.vertical_fov_deg >= 0.0 && c.vertical_fov_deg < 90.0)) {
    throw ValidationError("sensor.vertical_fov_deg must be in [0, 90)");
  }
  const double noises[] = {c.range_sigma, c.imu.sigma_g, c.imu.sigma_a, c.imu.sigma_bg,
                           c.imu.sigma_ba, c.leg_sigma, c.leg_yaw_sigma};
  for (double n : noises) {
    if (!(n >= 0.0)) throw ValidationError("sensor noise values must be >= 0");
  }
  if (!(c.leg_scale_error > -1.0)) throw ValidationError("sensor.leg_scale_error must be > -1");
  for (const auto& pl : c.packet_loss) {
    if (!(pl.duration > 0.0) || !(pl.start >= 0.0)) throw ValidationError("sensor.packet_loss episodes need start >= 0, duration > 0");
  }
}

struct SensorLog {
  std::vector<ImuSample> imu;
  std::vector<LidarScan> scans;
  std::vector<LegOdomSample> leg;
  Trajectory gt;
  std::vector<Segment> segments;
};

/// Unit ray directions in the sensor frame, ring-major.
inline std::vector<Vec3> ray_pattern(const SensorConfig& cfg) {
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(cfg.n_azimuth * cfg.n_elevation));
  const double fov = cfg.vertical_fov_deg * std::numbers::pi / 180.0;
  for (int e = 0; e < cfg.n_elevation; ++e) {
    const double el = cfg.n_elevation == 1 ? 0.0 : -fov + 2.0 * fov * e / (cfg.n_elevation - 1);
    for (int a = 0; a < cfg.n_azimuth; ++a) {
      const double az = 2.0 * std::numbers::pi * a / cfg.n_azimuth;
      dirs.emplace_back(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    }
  }
  return dirs;
}

/// One instantaneous scan from body pose (R, p). `normals`, when given,
/// receives the world-frame normal of each returned point.
inline LidarScan render_scan(const WorldModel& world, const Rotation& R, const Vec3& p, double t,
                             const SensorConfig& cfg, uint64_t seed, uint64_t scan_index,
                             std::vector<Vec3>* normals = nullptr) {
  LidarScan scan;
  scan.t = t;
  const Rotation Rws = R * cfg.extrinsics.R;
  const Vec3 origin = R * cfg.extrinsics.t + p;
  const auto dirs = ray_pattern(cfg);
  const uint64_t base = scan_index * static_cast<uint64_t>(dirs.size());
  scan.points.reserve(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto hit = raycast(world, origin, Rws * dirs[i], cfg.max_range);
    if (!hit) continue;
    const double range = hit->range + cfg.range_sigma * rng::normal(seed, rng::kRangeNoise, base + i);
    if (!(range > 0.0) || range > cfg.max_range) continue;
    scan.points.push_back(dirs[i] * range);
    if (normals) normals->push_back(hit->normal);
  }
  return scan;
}

inline bool in_packet_loss(const SensorConfig& cfg, double t) {
  for (const auto& pl : cfg.packet_loss) {
    if (t >= pl.start && t < pl.start + pl.duration) return true;
  }
  return false;
}

/// Synthesizes all sensor streams along `traj`.
inline SensorLog generate_log(const WorldModel& world, const GroundTruthTrajectory& traj, const SensorConfig& cfg,
                              uint64_t seed, std::vector<Segment> segments = {}) {
  validate(cfg);
  SensorLog log;
  log.segments = std::move(segments);
  const double T = traj.duration();
  const Vec3 g = cfg.imu.gravity;

  const double dt_imu = 1.0 / cfg.imu_hz;
  const auto n_imu = static_cast<uint64_t>(std::floor(T * cfg.imu_hz + 1e-9));
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  const double sg = cfg.imu.sigma_g / std::sqrt(dt_imu);
  const double sa = cfg.imu.sigma_a / std::sqrt(dt_imu);
  const double sbg = cfg.imu.sigma_bg * std::sqrt(dt_imu);
  const double sba = cfg.imu.sigma_ba * std::sqrt(dt_imu);
  log.imu.reserve(n_imu + 1);
  log.gt.reserve(n_imu + 1);
  for (uint64_t i = 0; i <= n_imu; ++i) {
    const double t = static_cast<double>(i) / cfg.imu_hz;
    const TruthState s = traj.at(t);
    ImuSample m;
    m.t = t;
    const Vec3 f = s.R.inverse() * (s.a - g);
    for (int k = 0; k < 3; ++k) {
      m.omega_m[k] = s.omega[k] + bg[k] + sg * rng::normal(seed, rng::kGyroNoise, 3 * i + k);
      m.a_m[k] = f[k] + ba[k] + sa * rng::normal(seed, rng::kAccelNoise, 3 * i + k);
    }
    log.imu.push_back(m);
    log.gt.push_back({t, s.p, s.R});
    for (int k = 0; k < 3; ++k) {
      bg[k] += sbg * rng::normal(seed, rng::kGyroBiasWalk, 3 * i + k);
      ba[k] += sba * rng::normal(seed, rng::kAccelBiasWalk, 3 * i + k);
    }
  }

  const auto n_leg = static_cast<uint64_t>(std::floor(T * cfg.leg_hz + 1e-9));
  log.leg.reserve(n_leg + 1);
  for (uint64_t j = 0; j <= n_leg; ++j) {
    const double t = static_cast<double>(j) / cfg.leg_hz;
    if (in_packet_loss(cfg, t)) continue;
    const TruthState s = traj.at(t);
    LegOdomSample m;
    m.t = t;
    const Vec3 vb = s.R.inverse() * s.v;
    for (int k = 0; k < 3; ++k) {
      m.v_body[k] = (1.0 + cfg.leg_scale_error) * vb[k] + cfg.leg_sigma * rng::normal(seed, rng::kLegNoise, 3 * j + k);
    }
    if (cfg.leg_yaw_rate) m.omega_z = s.omega.z() + cfg.leg_yaw_sigma * rng::normal(seed, rng::kLegYawNoise, j);
    log.leg.push_back(m);
  }

  const auto n_scan = static_cast<uint64_t>(std::floor(T * cfg.lidar_hz + 1e-9));
  log.scans.reserve(n_scan + 1);
  for (uint64_t k = 0; k <= n_scan; ++k) {
    const double t = static_cast<double>(k) / cfg.lidar_hz;
    const TruthState s = traj.at(t);
    log.scans.push_back(render_scan(world, s.R, s.p, t, cfg, seed, k));
  }
  return log;
}

// ---------------------------------------------------------------------------
// Standard scenarios

/// Axis-aligned region of the xy plane, used to label epochs.
struct Zone {
  std::string name;
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;
  bool contains(const Vec3& p) const { return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1; }
};

struct Scenario {
  std::string name;
  WorldModel world;
  GroundTruthTrajectory traj;
  SensorConfig sensors;
  std::vector<Segment> segments;
  std::vector<Zone> zones;
};

inline std::vector<std::string> scenario_names() { return {"corridor_ab", "corridor_featured", "garage_L", "corridor_short"}; }

namespace detail {

inline constexpr double kCorridorWidth = 2.4;
inline constexpr double kSpeed = 1.5;
inline constexpr double kSpeedRamp = 2.0;
inline constexpr double kYawRate = 0.5;
inline constexpr double kYawRamp = 1.0;

inline double mid(const GroundTruthTrajectory& tr, std::size_t i) { return 0.5 * (tr.start_of(i) + tr.end_of(i)); }

/// Boxes against alternating walls every `spacing` metres over [x0, x1].
inline void add_wall_boxes(WorldModel& w, double x0, double x1, double spacing) {
  const double hw = 0.5 * kCorridorWidth;
  int i = 0;
  for (double x = x0 + 1.0; x <= x1 - 0.5; x += spacing, ++i) {
    const double side = (i % 2 == 0) ? 1.0 : -1.0;
    const double y_in = side * (hw - 0.4);
    const double y_out = side * hw;
    w.boxes.push_back({Vec3(x - 0.3, std::min(y_in, y_out), kFloorZ), Vec3(x + 0.3, std::max(y_in, y_out), 0.6)});
  }
}

/// a -> b along +x, turn around, b -> a.
inline Scenario out_and_back(std::string name, double distance, double margin, bool featured) {
  Scenario sc;
  sc.name = std::move(name);
  sc.world = make_corridor(distance + 2.0 * margin, kCorridorWidth, -margin);
  if (featured) add_wall_boxes(sc.world, 0.0, distance, 2.0);
  sc.traj = GroundTruthTrajectory(Vec3::Zero(), 0.0,
                                  {Motion::pause(2.0), Motion::straight(distance, kSpeed, kSpeedRamp),
                                   Motion::pause(1.0), Motion::turn(std::numbers::pi, kYawRate, kYawRamp),
                                   Motion::pause(1.0), Motion::straight(distance, kSpeed, kSpeedRamp),
                                   Motion::pause(2.0)});
  const double ta = mid(sc.traj, 0);
  const double tb = mid(sc.traj, 4);
  const double ta2 = mid(sc.traj, 6);
  sc.segments = {{"a-b", "a", "b", ta, tb, distance}, {"b-a", "b", "a", tb, ta2, distance}};
  sc.zones = {{"corridor", -margin, distance + margin, -0.5 * kCorridorWidth, 0.5 * kCorridorWidth}};
  return sc;
}

inline Scenario garage_l() {
  Scenario sc;
  sc.name = "garage_L";
  WorldModel& w = sc.world;
  const double hw = 0.5 * kCorridorWidth;
  w.width = kCorridorWidth;
  w.height = kCeilingZ - kFloorZ;
  w.length = 50.0 + 40.0;
  // corridor 1 along +x
  add_floor_ceiling(w, -10.0, 40.0, -hw, hw);
  add_wall_y(w, hw, -10.0, 40.0);
  add_wall_y(w, -hw, -10.0, 40.0);
  // open area [40, 60] x [-10, 10]
  add_floor_ceiling(w, 40.0, 60.0, -10.0, 10.0);
  add_wall_x(w, 40.0, -10.0, -hw);
  add_wall_x(w, 40.0, hw, 10.0);
  add_wall_x(w, 60.0, -10.0, 10.0);
  add_wall_y(w, 10.0, 40.0, 60.0);
  add_wall_y(w, -10.0, 40.0, 50.0 - hw);
  add_wall_y(w, -10.0, 50.0 + hw, 60.0);
  // corridor 2 along -y
  add_floor_ceiling(w, 50.0 - hw, 50.0 + hw, -50.0, -10.0);
  add_wall_x(w, 50.0 - hw, -50.0, -10.0);
  add_wall_x(w, 50.0 + hw, -50.0, -10.0);
  // pillars and crates in the open area
  const double pillars[][2] = {{44.0, 4.0}, {44.0, -4.0}, {47.0, 7.0}, {54.0, 4.0}, {54.0, -4.0},
                               {57.0, 0.0}, {53.0, 7.5},  {45.0, -7.5}, {57.0, -7.0}, {42.5, 8.0}};
  for (const auto& c : pillars) {
    w.boxes.push_back({Vec3(c[0] - 0.25, c[1] - 0.25, kFloorZ), Vec3(c[0] + 0.25, c[1] + 0.25, kCeilingZ)});
  }
  const double crates[][4] = {{43.0, 2.5, 0.8, 0.9}, {52.5, 3.0, 1.0, 1.2}, {55.0, -2.5, 0.6, 0.7},
                              {46.5, -3.0, 0.9, 1.0}, {58.0, 5.5, 1.2, 1.5}, {42.0, -5.0, 0.7, 0.6},
                              {53.5, -7.0, 0.8, 1.1}, {48.0, 4.5, 0.6, 0.5}, {56.5, 8.5, 1.0, 0.8}};
  for (const auto& c : crates) {
    w.boxes.push_back(
        {Vec3(c[0] - 0.5 * c[2], c[1] - 0.5 * c[2], kFloorZ), Vec3(c[0] + 0.5 * c[2], c[1] + 0.5 * c[2], kFloorZ + c[3])});
  }

  const double half_pi = 0.5 * std::numbers::pi;
  sc.traj = GroundTruthTrajectory(
      Vec3::Zero(), 0.0,
      {Motion::pause(2.0), Motion::straight(50.0, kSpeed, kSpeedRamp), Motion::pause(1.0),
       Motion::turn(-half_pi, kYawRate, kYawRamp), Motion::pause(1.0), Motion::straight(30.0, kSpeed, kSpeedRamp),
       Motion::pause(1.0), Motion::turn(std::numbers::pi, kYawRate, kYawRamp), Motion::pause(1.0),
       Motion::straight(30.0, kSpeed, kSpeedRamp), Motion::pause(1.0), Motion::turn(half_pi, kYawRate, kYawRamp),
       Motion::pause(1.0), Motion::straight(50.0, kSpeed, kSpeedRamp), Motion::pause(2.0)});
  const double ta = mid(sc.traj, 0);
  const double tb = mid(sc.traj, 4);
  const double tc = mid(sc.traj, 8);
  const double tb2 = mid(sc.traj, 12);
  const double ta2 = mid(sc.traj, 14);
  sc.segments = {{"a-b", "a", "b", ta, tb, 50.0},
                 {"b-c", "b", "c", tb, tc, 30.0},
                 {"c-b", "c", "b", tc, tb2, 30.0},
                 {"b-a", "b", "a", tb2, ta2, 50.0}};
  sc.zones = {{"corridor", 0.0, 32.0, -hw, hw},
              {"corridor", 50.0 - hw, 50.0 + hw, -40.0, -18.0},
              {"open", 40.0, 60.0, -10.0, 10.0}};
  sc.sensors.leg_scale_error = 0.03;
  return sc;
}

}  // namespace detail

/// Built-in scenarios. Unknown names are a configuration error.
inline Scenario make_scenario(const std::string& name) {
  if (name == "corridor_ab") {
    Scenario sc = detail::out_and_back(name, 80.0, 10.0, false);
    sc.sensors.leg_scale_error = 0.03;
    // 2 s of lost leg packets starting 1.5 s before the robot stops at b
    sc.sensors.packet_loss = {{sc.traj.end_of(1) - 1.5, 2.0}};
    return sc;
  }
  if (name == "corridor_featured") return detail::out_and_back(name, 80.0, 10.0, true);
  if (name == "corridor_short") return detail::out_and_back(name, 10.0, 10.0, true);
  if (name == "garage_L") return detail::garage_l();
  throw ValidationError("run.scenario: unknown scenario '" + name + "'");
}

/// Zone name containing p, or empty.
inline std::string zone_of(const Scenario& sc, const Vec3& p) {
  for (const auto& z : sc.zones) {
    if (z.contains(p)) return z.name;
  }
  return {};
}

}  // namespace aims
