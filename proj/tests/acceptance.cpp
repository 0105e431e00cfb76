#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <string>
#include <vector>

#include "aims/adaptive_fusion.hpp"
#include "aims/degeneracy.hpp"
#include "aims/evaluation.hpp"
#include "aims/run.hpp"
#include "aims/simulator.hpp"

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome unit_suite() {
  const auto t0 = Clock::now();
  const int code = run_command(std::string(AIMS_TESTS_PATH) + " --gtest_brief=1 >/dev/null 2>&1");
  const double secs = seconds_since(t0);
  return {code == 0 && secs < 60.0, fmt("exit=%d runtime=%.1fs (limit 60s)", code, secs)};
}

Outcome feature_rich_consistency() {
  const auto t0 = Clock::now();
  const aims::Scenario sc = aims::make_scenario("corridor_featured");
  const double bound = 0.01 * sc.traj.path_length();
  int good = 0;
  double nees_total = 0.0;
  const int seeds = 20;
  for (int seed = 1; seed <= seeds; ++seed) {
    const aims::SensorLog log = aims::generate_log(sc.world, sc.traj, sc.sensors, seed, sc.segments);
    const aims::FusionResult res = aims::run_fusion(log, aims::FusionConfig{});
    if (aims::m_end(res.trajectory()) < bound) ++good;
    double nees = 0.0;
    for (std::size_t k = 1; k < res.epochs.size(); ++k) {
      const aims::EpochRecord& e = res.epochs[k];
      const aims::Vec3 err = e.x.p - aims::interpolate_position(log.gt, e.t);
      const aims::Mat3 P = e.P.block<3, 3>(aims::kPos, aims::kPos);
      nees += err.dot(P.ldlt().solve(err));
    }
    nees_total += nees / static_cast<double>(res.epochs.size() - 1);
  }
  const double nees = nees_total / seeds;
  const double secs = seconds_since(t0);
  const bool pass = good >= 18 && nees >= 1.0 && nees <= 9.0 && secs < 300.0;
  return {pass, fmt("M_end<%.2fm in %d/%d runs (need 18); mean position NEES=%.2f (need [1,9]); runtime=%.0fs",
                    bound, good, seeds, nees, secs)};
}

Outcome degeneracy_detection() {
  const auto t0 = Clock::now();
  const aims::Scenario sc = aims::make_scenario("garage_L");
  const aims::SensorLog log = aims::generate_log(sc.world, sc.traj, sc.sensors, 1, sc.segments);
  const aims::FusionResult res = aims::run_fusion(log, aims::FusionConfig{});
  double corridor = 0.0;
  double open = 0.0;
  int n_corridor = 0;
  int n_open = 0;
  for (const auto& e : res.epochs) {
    const std::string zone = aims::zone_of(sc, aims::interpolate_position(log.gt, e.t));
    if (zone == "corridor") {
      corridor += e.indices.d_smooth;
      ++n_corridor;
    } else if (zone == "open") {
      open += e.indices.d_smooth;
      ++n_open;
    }
  }
  if (n_corridor == 0 || n_open == 0) return {false, "no epochs in one of the zones"};
  corridor /= n_corridor;
  open /= n_open;
  const double secs = seconds_since(t0);
  return {corridor - open >= 0.2 && secs < 120.0,
          fmt("mean smoothed index corridor=%.3f open=%.3f difference=%.3f (need >= 0.2); runtime=%.0fs", corridor,
              open, corridor - open, secs)};
}

Outcome adaptive_beats_fixed() {
  const auto t0 = Clock::now();
  const aims::Scenario sc = aims::make_scenario("corridor_ab");
  int wins = 0;
  const int seeds = 10;
  std::string runs;
  for (int seed = 1; seed <= seeds; ++seed) {
    const aims::SensorLog log = aims::generate_log(sc.world, sc.traj, sc.sensors, seed, sc.segments);
    aims::FusionConfig adaptive;
    aims::FusionConfig fixed;
    fixed.adaptive.enabled = false;
    const aims::MetricsReport a = aims::evaluate_metrics(aims::run_fusion(log, adaptive).trajectory(), log.segments);
    const aims::MetricsReport f = aims::evaluate_metrics(aims::run_fusion(log, fixed).trajectory(), log.segments);
    const bool win = a.m_end < f.m_end && a.m_list_combined < f.m_list_combined;
    if (win) ++wins;
    runs += win ? '+' : '-';
  }
  const double secs = seconds_since(t0);
  return {wins >= 9 && secs < 300.0,
          fmt("adaptive better on M_end and M_list in %d/%d paired runs [%s] (need 9); runtime=%.0fs", wins, seeds,
              runs.c_str(), secs)};
}

Outcome dead_reckoning() {
  const auto t0 = Clock::now();
  const aims::Scenario sc = aims::make_scenario("corridor_ab");
  const aims::SensorLog log = aims::generate_log(sc.world, sc.traj, sc.sensors, 1, sc.segments);
  aims::FusionConfig cfg;
  cfg.use_lidar = false;
  const aims::MetricsReport rep = aims::evaluate_metrics(aims::run_fusion(log, cfg).trajectory(), log.segments);
  const double secs = seconds_since(t0);
  const double m = rep.m_list_combined;
  return {m >= 0.02 && m <= 0.05 && secs < 60.0,
          fmt("no-lidar M_list=%.4f (need [0.02,0.05]); runtime=%.0fs", m, secs)};
}

Outcome exact_values() {
  std::vector<std::string> failed;
  const aims::DegeneracyParams dp;
  if (aims::observability_metric({0.0, dp.sigma0_sq, 100}, dp) != 0.5) failed.push_back("observability");
  aims::DegeneracyParams w;
  w.w1 = 0.6;
  w.w2 = 0.4;
  if (aims::degeneracy_index(0.5, w.kappa, w) != 0.5) failed.push_back("degeneracy_index");
  aims::AdaptiveParams ap;
  ap.eta = std::numbers::ln2;
  if (std::abs(aims::lidar_reliability(1.0, ap) - 0.5) > 1e-12) failed.push_back("lidar_reliability");
  aims::AdaptiveParams sp;
  sp.alpha = 0.9;
  const double target = 0.37;
  double d = 0.0;
  bool geometric = aims::smooth_index(target, target, sp) == target;
  for (int k = 1; k <= 100; ++k) {
    d = aims::smooth_index(d, target, sp);
    geometric = geometric && std::abs((target - d) - target * std::pow(sp.alpha, k)) <= 1e-9;
  }
  if (!geometric) failed.push_back("smooth_index");
  const std::vector<double> truth{10.0, 10.0};
  const std::vector<double> est{9.0, 12.0};
  if (aims::m_list(est, truth) != 0.15) failed.push_back("m_list");
  std::string detail = failed.empty() ? "all 5 value checks exact" : "failed:";
  for (const auto& f : failed) detail += " " + f;
  return {failed.empty(), detail};
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary);
  std::ifstream fb(b, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  return fa.good() == fb.good() && sa == sb;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "aims_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "empty.ini";
  std::ofstream(cfg) << "";
  const std::string cli = AIMS_CLI_PATH;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    const std::string q = " >/dev/null 2>&1";
    const int s = run_command(cli + " simulate --scenario corridor_short --seed 7 --config " + cfg.string() +
                              " --out " + (dir / "log").string() + q);
    const int f = run_command(cli + " fuse --log " + (dir / "log").string() + " --config " + cfg.string() +
                              " --out " + (dir / "fused").string() + q);
    const int e = run_command(cli + " evaluate --traj " + (dir / "fused" / "trajectory.csv").string() +
                              " --segments " + (dir / "log" / "segments.csv").string() + " --out " +
                              (dir / "report.txt").string() + q);
    if (s != 0 || f != 0 || e != 0) return {false, fmt("pipeline exit codes %d %d %d", s, f, e)};
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path other = root / "b" / fs::relative(entry.path(), root / "a");
    if (!same_bytes(entry.path(), other)) {
      return {false, "differs: " + fs::relative(entry.path(), root / "a").string()};
    }
    ++files;
  }
  std::size_t files_b = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "b")) files_b += entry.is_regular_file();
  fs::remove_all(root);
  return {files == files_b && files > 0, fmt("%zu output files byte-identical across two runs", files)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"C1 unit/property suite", unit_suite},
      {"C2 feature-rich consistency", feature_rich_consistency},
      {"C3 degeneracy detection", degeneracy_detection},
      {"C4 adaptive vs fixed weights", adaptive_beats_fixed},
      {"C5 leg dead reckoning", dead_reckoning},
      {"C6 exact value checks", exact_values},
      {"C7 determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
