#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "aims/adaptive_fusion.hpp"
#include "aims/evaluation.hpp"
#include "aims/simulator.hpp"

namespace aims {

struct FusionResult {
  std::vector<EpochRecord> epochs;

  Trajectory trajectory() const {
    Trajectory out;
    out.reserve(epochs.size());
    for (const auto& e : epochs) out.push_back({e.t, e.x.p, e.x.R});
    return out;
  }
};

/// Runs the estimator over a whole log, one epoch per LiDAR scan. The filter
/// starts at `x0` (the log frame origin, at rest, by default). Errors are
/// rethrown with the epoch timestamp prepended.
inline FusionResult run_fusion(const SensorLog& log, const FusionConfig& cfg, NominalState x0 = {}) {
  FusionResult out;
  if (log.scans.empty()) throw DataError("log has no LiDAR scans");
  x0.t = log.scans.front().t;
  FusionEngine engine(cfg, x0);
  out.epochs.reserve(log.scans.size());
  std::size_t imu_begin = 0;
  for (const auto& scan : log.scans) {
    std::size_t imu_end = imu_begin;
    while (imu_end < log.imu.size() && log.imu[imu_end].t <= scan.t) ++imu_end;
    const std::span<const ImuSample> window(log.imu.data() + imu_begin, imu_end - imu_begin);
    try {
      out.epochs.push_back(engine.step(scan, window, log.leg));
    } catch (const Error& e) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "epoch t=%.9g: ", scan.t);
      throw Error(e.kind(), buf + std::string(e.what()));
    }
    imu_begin = imu_end;
  }
  return out;
}

}  // namespace aims
