#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "aims/config.hpp"
#include "aims/errors.hpp"
#include "aims/evaluation.hpp"
#include "aims/log_io.hpp"
#include "aims/plot.hpp"
#include "aims/run.hpp"
#include "aims/simulator.hpp"

namespace {

namespace fs = std::filesystem;

int cmd_simulate(const std::string& scenario, const std::string& config, uint64_t seed, const fs::path& out) {
  aims::RunConfig cfg = aims::load_config(config);
  cfg.scenario = scenario;
  cfg.seed = seed;
  const aims::Scenario sc = aims::make_scenario(cfg.scenario);
  const aims::SensorConfig sensors = aims::effective_sensors(cfg, sc);
  const aims::SensorLog log = aims::generate_log(sc.world, sc.traj, sensors, cfg.seed, sc.segments);
  aims::write_log(out, log);
  aims::write_file_atomic(out / "config.ini", aims::dump_config(cfg));
  std::cout << "simulated " << sc.name << ": " << log.scans.size() << " scans, " << log.imu.size()
            << " imu samples, " << log.leg.size() << " leg samples -> " << out.string() << "\n";
  return 0;
}

int cmd_fuse(const fs::path& log_dir, const std::string& config, const fs::path& out, bool no_adaptive, bool no_leg,
             bool no_lidar) {
  aims::RunConfig cfg = aims::load_config(config);
  if (no_adaptive) cfg.fusion.adaptive.enabled = false;
  cfg.fusion.use_leg = !no_leg;
  cfg.fusion.use_lidar = !no_lidar;
  const aims::SensorLog log = aims::read_log(log_dir);
  const aims::FusionResult res = aims::run_fusion(log, cfg.fusion);
  aims::write_trajectory(out / "trajectory.csv", res.trajectory());
  aims::write_file_atomic(out / "diagnostics.csv", aims::format_diagnostics(res.epochs));
  std::cout << "fused " << res.epochs.size() << " epochs -> " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(const fs::path& traj_path, const fs::path& seg_path, const fs::path& out,
                 const std::optional<std::string>& config) {
  aims::DistanceMode mode = aims::DistanceMode::kChord;
  if (config) mode = aims::load_config(*config).distance_mode;
  const aims::Trajectory traj = aims::read_trajectory(traj_path);
  const auto segments = aims::read_segments(seg_path);
  const aims::MetricsReport rep = aims::evaluate_metrics(traj, segments, mode);
  aims::write_file_atomic(out, aims::format_report(rep));
  aims::write_file_atomic(aims::report_csv_path(out), aims::format_report_csv(rep));
  std::cout << aims::format_report(rep);
  return 0;
}

int cmd_plot(const std::vector<std::string>& trajs, const std::optional<std::string>& diag,
             const std::optional<std::string>& gt, const fs::path& out) {
  aims::PlotInput in;
  for (const auto& t : trajs) {
    in.trajectories.push_back(aims::read_trajectory(t));
    in.labels.push_back(t);
  }
  if (gt) in.ground_truth = aims::read_trajectory(*gt);
  if (diag) in.diagnostics = aims::read_diagnostics(*diag);
  aims::write_file_atomic(out, aims::render_svg(in));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR-IMU-leg odometry with adaptive degeneracy handling"};
  app.require_subcommand(1);

  std::string scenario;
  std::string config;
  uint64_t seed = 0;
  std::string out;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic sensor log");
  sim->add_option("--scenario", scenario, "scenario name")->required();
  sim->add_option("--config", config, "config file")->required();
  sim->add_option("--seed", seed, "noise seed")->required();
  sim->add_option("--out", out, "output log directory")->required();

  std::string log_dir;
  bool no_adaptive = false;
  bool no_leg = false;
  bool no_lidar = false;
  auto* fuse = app.add_subcommand("fuse", "run the estimator over a log");
  fuse->add_option("--log", log_dir, "log directory")->required();
  fuse->add_option("--config", config, "config file")->required();
  fuse->add_option("--out", out, "output directory")->required();
  fuse->add_flag("--no-adaptive", no_adaptive, "fixed unit reliability, no packet-loss handling");
  fuse->add_flag("--no-leg", no_leg, "disable leg odometry updates");
  fuse->add_flag("--no-lidar", no_lidar, "disable LiDAR (leg-IMU dead reckoning)");

  std::string traj;
  std::string segments;
  std::optional<std::string> eval_config;
  auto* eval = app.add_subcommand("evaluate", "compute drift metrics");
  eval->add_option("--traj", traj, "trajectory.csv")->required();
  eval->add_option("--segments", segments, "segments.csv")->required();
  eval->add_option("--out", out, "report file")->required();
  eval->add_option("--config", eval_config, "config file (evaluation section)");

  std::vector<std::string> trajs;
  std::optional<std::string> diag;
  std::optional<std::string> gt;
  auto* plot = app.add_subcommand("plot", "render trajectories to SVG");
  plot->add_option("--traj", trajs, "trajectory files")->required()->expected(1, -1);
  plot->add_option("--diag", diag, "diagnostics.csv");
  plot->add_option("--gt", gt, "ground-truth trajectory");
  plot->add_option("--out", out, "output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(scenario, config, seed, out);
    if (*fuse) return cmd_fuse(log_dir, config, out, no_adaptive, no_leg, no_lidar);
    if (*eval) return cmd_evaluate(traj, segments, out, eval_config);
    if (*plot) return cmd_plot(trajs, diag, gt, out);
  } catch (const aims::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return aims::exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
