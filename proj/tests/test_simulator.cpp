#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "aims/run.hpp"
#include "aims/simulator.hpp"
#include "test_support.hpp"

namespace aims {
namespace {

using testing::Gen;

SensorConfig noiseless(SensorConfig s) {
  s.range_sigma = 0.0;
  s.imu.sigma_g = s.imu.sigma_a = s.imu.sigma_bg = s.imu.sigma_ba = 0.0;
  s.leg_sigma = 0.0;
  s.leg_yaw_sigma = 0.0;
  s.leg_scale_error = 0.0;
  s.packet_loss.clear();
  return s;
}

GroundTruthTrajectory straight(double length) {
  return GroundTruthTrajectory(Vec3::Zero(), 0.0,
                               {Motion::pause(1.0), Motion::straight(length, 1.5, 2.0), Motion::pause(1.0)});
}

WorldModel corridor(double half_width = 1.0) {
  WorldModel w;
  w.surfaces.push_back({1, half_width, Vec3(-100, 0, -5), Vec3(100, 0, 5)});
  w.surfaces.push_back({1, -half_width, Vec3(-100, 0, -5), Vec3(100, 0, 5)});
  return w;
}

TEST(Raycast, CorridorWall) {
  const auto hit = raycast(corridor(), Vec3::Zero(), Vec3::UnitY(), 50.0);
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(hit->range, 1.0);
  EXPECT_EQ(hit->normal, Vec3(0, -1, 0));
}

TEST(Raycast, AxialRayInLongCorridorMisses) {
  EXPECT_FALSE(raycast(corridor(), Vec3::Zero(), Vec3::UnitX(), 50.0).has_value());
}

TEST(Raycast, BoxInFrontOfWall) {
  WorldModel w = corridor();
  w.boxes.push_back({Vec3(-0.2, 0.4, -0.2), Vec3(0.2, 0.6, 0.2)});
  const auto hit = raycast(w, Vec3::Zero(), Vec3::UnitY(), 50.0);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->range, 0.4, 1e-15);
}

// slab-method intersection over every surface and box face
double brute_force_range(const WorldModel& w, const Vec3& o, const Vec3& d, double max_range) {
  double best = std::numeric_limits<double>::infinity();
  auto try_rect = [&](int a, double off, const Vec3& lo, const Vec3& hi) {
    if (d[a] == 0.0) return;
    const double t = (off - o[a]) / d[a];
    if (t <= 1e-9 || t > max_range) return;
    const Vec3 h = o + t * d;
    for (int k = 0; k < 3; ++k) {
      if (k != a && (h[k] < lo[k] || h[k] > hi[k])) return;
    }
    best = std::min(best, t);
  };
  for (const auto& s : w.surfaces) try_rect(s.axis, s.offset, s.lo, s.hi);
  for (const auto& b : w.boxes) {
    for (int a = 0; a < 3; ++a) {
      try_rect(a, b.lo[a], b.lo, b.hi);
      try_rect(a, b.hi[a], b.lo, b.hi);
    }
  }
  return best;
}

TEST(RaycastProperty, MatchesBruteForceInFeaturedCorridor) {
  const Scenario sc = make_scenario("corridor_featured");
  Gen g(71);
  int hits = 0;
  for (int i = 0; i < 5000; ++i) {
    const Vec3 o(g.uniform(0.0, 80.0), g.uniform(-0.8, 0.8), g.uniform(0.0, 1.0));
    const Vec3 d = g.unit();
    const auto hit = raycast(sc.world, o, d, 50.0);
    const double oracle = brute_force_range(sc.world, o, d, 50.0);
    if (!hit) {
      EXPECT_TRUE(std::isinf(oracle));
      continue;
    }
    ++hits;
    EXPECT_NEAR(hit->range, oracle, 1e-9);
  }
  EXPECT_GT(hits, 4000);
}

TEST(GenerateLog, NoiselessStreamsMatchTruth) {
  SensorConfig cfg = noiseless(SensorConfig{});
  const auto traj = straight(10.0);
  const SensorLog log = generate_log(corridor(), traj, cfg, 3);
  ASSERT_FALSE(log.leg.empty());
  for (const auto& s : log.leg) {
    const TruthState ts = traj.at(s.t);
    const Vec3 v_body = ts.R.inverse() * ts.v;
    EXPECT_LT((s.v_body - v_body).norm(), 1e-12);
  }
  // at rest the accelerometer reads -g in the body frame
  const ImuSample& first = log.imu.front();
  EXPECT_LT((first.a_m + cfg.imu.gravity).norm(), 1e-12);
  EXPECT_LT(first.omega_m.norm(), 1e-12);
}

bool same_log(const SensorLog& a, const SensorLog& b) {
  if (a.imu.size() != b.imu.size() || a.scans.size() != b.scans.size() || a.leg.size() != b.leg.size()) return false;
  for (std::size_t i = 0; i < a.imu.size(); ++i) {
    if (a.imu[i].t != b.imu[i].t || a.imu[i].a_m != b.imu[i].a_m || a.imu[i].omega_m != b.imu[i].omega_m) return false;
  }
  for (std::size_t i = 0; i < a.leg.size(); ++i) {
    if (a.leg[i].t != b.leg[i].t || a.leg[i].v_body != b.leg[i].v_body) return false;
  }
  for (std::size_t i = 0; i < a.scans.size(); ++i) {
    if (a.scans[i].t != b.scans[i].t || a.scans[i].points != b.scans[i].points) return false;
  }
  return true;
}

TEST(GenerateLog, SameSeedIsBitIdentical) {
  const auto traj = straight(5.0);
  const SensorLog a = generate_log(corridor(), traj, SensorConfig{}, 11);
  const SensorLog b = generate_log(corridor(), traj, SensorConfig{}, 11);
  const SensorLog c = generate_log(corridor(), traj, SensorConfig{}, 12);
  EXPECT_TRUE(same_log(a, b));
  EXPECT_FALSE(same_log(a, c));
}

TEST(GenerateLog, LegScaleErrorOnTenMetres) {
  SensorConfig cfg;
  cfg.leg_scale_error = 0.05;
  const auto traj = straight(10.0);
  const SensorLog log = generate_log(corridor(), traj, cfg, 5);
  double dist = 0.0;
  const double period = 1.0 / cfg.leg_hz;
  for (const auto& s : log.leg) dist += s.v_body.x() * period;
  const double n = static_cast<double>(log.leg.size());
  // white noise per sample, integrated over n samples
  const double tol = 3.0 * cfg.leg_sigma * period * std::sqrt(n);
  EXPECT_NEAR(dist, 10.5, tol);
}

TEST(GenerateLog, PacketLossDropsLegSamples) {
  SensorConfig cfg;
  cfg.packet_loss = {{2.0, 1.0}};
  const SensorLog log = generate_log(corridor(), straight(5.0), cfg, 5);
  for (const auto& s : log.leg) EXPECT_FALSE(s.t >= 2.0 && s.t < 3.0);
  EXPECT_FALSE(log.leg.empty());
}

TEST(Trajectory, KinematicConsistency) {
  for (const auto& name : scenario_names()) {
    const Scenario sc = make_scenario(name);
    const double h = 1e-4;
    for (double t = h; t < sc.traj.duration() - h; t += 0.37) {
      const Vec3 v_fd = (sc.traj.at(t + h).p - sc.traj.at(t - h).p) / (2.0 * h);
      EXPECT_LT((v_fd - sc.traj.at(t).v).norm(), 1e-3) << name << " t=" << t;
    }
  }
}

TEST(Scenarios, CorridorAbPathLength) {
  EXPECT_NEAR(make_scenario("corridor_ab").traj.path_length(), 160.0, 1e-9);
}

TEST(Scenarios, CorridorHasNoAxialConstraint) {
  const Scenario sc = make_scenario("corridor_ab");
  const TruthState ts = sc.traj.at(sc.traj.duration() * 0.25);
  std::vector<Vec3> normals;
  const LidarScan scan = render_scan(sc.world, ts.R, ts.p, ts.t, noiseless(sc.sensors), 1, 0, &normals);
  ASSERT_FALSE(scan.points.empty());
  ASSERT_EQ(normals.size(), scan.points.size());
  for (const auto& n : normals) EXPECT_EQ(n.x(), 0.0);
  // near-axial returns graze the side surfaces; nothing ahead faces the axis
  const double cos5 = std::cos(5.0 * std::numbers::pi / 180.0);
  int near_axis = 0;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    if (std::abs(scan.points[i].x()) / scan.points[i].norm() < cos5) continue;
    ++near_axis;
    EXPECT_EQ(normals[i].x(), 0.0);
  }
  EXPECT_GT(near_axis, 0);
  for (const double sign : {1.0, -1.0}) {
    EXPECT_FALSE(raycast(sc.world, ts.p, ts.R * Vec3(sign, 0, 0), sc.sensors.max_range).has_value());
  }
}

TEST(Scenarios, GarageOpenAreaSeesThreeIndependentPlanes) {
  const Scenario sc = make_scenario("garage_L");
  int checked = 0;
  for (double t = 0.0; t < sc.traj.duration(); t += 1.0) {
    const TruthState ts = sc.traj.at(t);
    if (zone_of(sc, ts.p) != "open") continue;
    std::vector<Vec3> normals;
    render_scan(sc.world, ts.R, ts.p, t, noiseless(sc.sensors), 1, 0, &normals);
    // cluster normals by direction up to sign
    std::vector<Vec3> clusters;
    for (const auto& n : normals) {
      bool found = false;
      for (const auto& c : clusters) found = found || std::abs(c.dot(n)) > 0.99;
      if (!found) clusters.push_back(n);
    }
    ASSERT_GE(clusters.size(), 3u);
    bool independent = false;
    for (std::size_t i = 0; i < clusters.size() && !independent; ++i) {
      for (std::size_t j = i + 1; j < clusters.size() && !independent; ++j) {
        for (std::size_t k = j + 1; k < clusters.size() && !independent; ++k) {
          independent = std::abs(clusters[i].dot(clusters[j].cross(clusters[k]))) > 0.5;
        }
      }
    }
    EXPECT_TRUE(independent) << "t=" << t;
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Scenarios, UnknownNameIsConfigError) {
  try {
    make_scenario("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(EndToEnd, NoiselessFeaturedCorridorClosesLoop) {
  const Scenario sc = make_scenario("corridor_featured");
  const SensorLog log = generate_log(sc.world, sc.traj, noiseless(sc.sensors), 1, sc.segments);
  const FusionResult res = run_fusion(log, FusionConfig{});
  EXPECT_LT(m_end(res.trajectory()), 1e-2);
}

}  // namespace
}  // namespace aims
