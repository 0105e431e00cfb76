#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "aims/errors.hpp"
#include "aims/manifold.hpp"

namespace aims {

/// One row of trajectory output.
struct TrajectoryRecord {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Rotation R;
};

using Trajectory = std::vector<TrajectoryRecord>;

/// Reference segment between two named points. Rows sharing a name form
/// one reporting group.
struct Segment {
  std::string name;
  std::string point_start;
  std::string point_end;
  double t_start = 0.0;
  double t_end = 0.0;
  double true_distance = 0.0;  // m
};

enum class DistanceMode { kChord, kPathLength };

struct SegmentResult {
  Segment segment;
  double estimated = 0.0;
  double abs_error = 0.0;
};

struct GroupMetric {
  std::string name;
  double m_list = 0.0;
};

struct MetricsReport {
  std::vector<GroupMetric> groups;  // in order of first appearance
  double m_list_combined = 0.0;
  double m_end = 0.0;
  std::vector<SegmentResult> segments;
};

inline void validate(const Segment& s) {
  if (!(s.true_distance > 0.0)) throw DataError("segment " + s.name + ": true_distance must be > 0");
  if (!(s.t_start < s.t_end)) throw DataError("segment " + s.name + ": t_start must precede t_end");
}

/// Linear interpolation of the position at time t.
inline Vec3 interpolate_position(const Trajectory& traj, double t) {
  if (traj.empty() || t < traj.front().t || t > traj.back().t) {
    throw OutOfRange("t=" + std::to_string(t) + " outside the trajectory span");
  }
  auto hi = std::lower_bound(traj.begin(), traj.end(), t,
                             [](const TrajectoryRecord& r, double v) { return r.t < v; });
  if (hi->t == t || hi == traj.begin()) return hi->p;
  auto lo = std::prev(hi);
  const double s = (t - lo->t) / (hi->t - lo->t);
  return lo->p + s * (hi->p - lo->p);
}

inline double estimated_segment_distance(const Trajectory& traj, double t_start, double t_end,
                                         DistanceMode mode = DistanceMode::kChord) {
  const Vec3 a = interpolate_position(traj, t_start);
  const Vec3 b = interpolate_position(traj, t_end);
  if (mode == DistanceMode::kChord) return (b - a).norm();
  double len = 0.0;
  Vec3 prev = a;
  for (const auto& r : traj) {
    if (r.t <= t_start || r.t >= t_end) continue;
    len += (r.p - prev).norm();
    prev = r.p;
  }
  return len + (b - prev).norm();
}

/// sum |d_hat - d| / sum d.
inline double m_list(std::span<const double> estimated, std::span<const double> truth) {
  if (estimated.size() != truth.size() || truth.empty()) throw DataError("m_list needs matching non-empty inputs");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    num += std::abs(estimated[i] - truth[i]);
    den += truth[i];
  }
  return num / den;
}

inline double m_list(std::span<const Segment> segments, const Trajectory& traj,
                     DistanceMode mode = DistanceMode::kChord) {
  std::vector<double> est;
  std::vector<double> truth;
  for (const auto& s : segments) {
    validate(s);
    est.push_back(estimated_segment_distance(traj, s.t_start, s.t_end, mode));
    truth.push_back(s.true_distance);
  }
  return m_list(est, truth);
}

/// Distance between the final and the initial estimated position.
inline double m_end(const Trajectory& traj) {
  if (traj.empty()) throw DataError("empty trajectory");
  return (traj.back().p - traj.front().p).norm();
}

inline MetricsReport evaluate_metrics(const Trajectory& traj, std::span<const Segment> segments,
                                      DistanceMode mode = DistanceMode::kChord) {
  if (segments.empty()) throw DataError("no segments to evaluate");
  MetricsReport rep;
  rep.m_end = m_end(traj);
  std::vector<double> est;
  std::vector<double> truth;
  for (const auto& s : segments) {
    validate(s);
    const double d = estimated_segment_distance(traj, s.t_start, s.t_end, mode);
    rep.segments.push_back({s, d, std::abs(d - s.true_distance)});
    est.push_back(d);
    truth.push_back(s.true_distance);
  }
  rep.m_list_combined = m_list(est, truth);
  for (const auto& s : segments) {
    if (std::any_of(rep.groups.begin(), rep.groups.end(), [&](const GroupMetric& g) { return g.name == s.name; })) {
      continue;
    }
    std::vector<double> ge;
    std::vector<double> gt;
    for (const auto& row : rep.segments) {
      if (row.segment.name != s.name) continue;
      ge.push_back(row.estimated);
      gt.push_back(row.segment.true_distance);
    }
    rep.groups.push_back({s.name, m_list(ge, gt)});
  }
  return rep;
}

}  // namespace aims
