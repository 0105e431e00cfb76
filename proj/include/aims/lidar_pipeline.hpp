#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <optional>
#include <tuple>
#include <vector>

#include "aims/filter_core.hpp"
#include "aims/local_map.hpp"
#include "aims/manifold.hpp"

namespace aims {

struct LidarScan {
  double t = 0.0;
  std::vector<Vec3> points;  // sensor frame, all taken at time t
};

/// Pose of the sensor frame in the body frame.
struct LidarExtrinsics {
  Rotation R;
  Vec3 t{-0.15, 0.0, 0.12};

  Vec3 to_body(const Vec3& p_sensor) const { return R * p_sensor + t; }
  bool operator==(const LidarExtrinsics& o) const {
    return R.quaternion().coeffs() == o.R.quaternion().coeffs() && t == o.t;
  }
};

struct LidarParams {
  int k_neighbors = 5;
  double plane_validity_threshold = 0.1;     // m
  double max_correspondence_distance = 1.0;  // m
  double max_residual_gate = 1.0;            // m
  double scan_voxel = 0.1;                   // m
  double map_voxel = 0.2;                    // m
  double max_map_radius = 100.0;             // m
  int map_cell_max_hits = 1;
  double sigma_lidar = 0.02;  // m
  int iterations = 1;
  double max_planarity_ratio = 0.003;  // lambda_min / lambda_mid of the neighbor scatter

  bool operator==(const LidarParams&) const = default;
};

struct PlaneCorrespondence {
  Vec3 p_i;  // sensor frame
  Vec3 q_i;  // plane anchor, world
  Vec3 n_i;  // unit normal, world
  double r_i = 0.0;
};

enum class PlaneFitStatus { kOk, kExceedsThreshold, kDegenerateNeighborhood };

struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();
  Vec3 centroid = Vec3::Zero();
  PlaneFitStatus status = PlaneFitStatus::kDegenerateNeighborhood;
  Vec3 eigenvalues = Vec3::Zero();  // scatter eigenvalues, ascending
  bool ok() const { return status == PlaneFitStatus::kOk; }
};

/// Least-squares plane through `neighbors` (k >= 3). The normal is the
/// smallest-eigenvalue eigenvector of the scatter matrix, oriented toward
/// `viewpoint`. Collinear or coincident neighbors give kDegenerateNeighborhood.
inline PlaneFit fit_plane(const std::vector<Vec3>& neighbors, const Vec3& viewpoint, double validity_threshold) {
  PlaneFit fit;
  if (neighbors.size() < 3) return fit;
  Vec3 c = Vec3::Zero();
  for (const auto& p : neighbors) c += p;
  c /= static_cast<double>(neighbors.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : neighbors) {
    const Vec3 d = p - c;
    scatter.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es;
  es.computeDirect(scatter);
  const Vec3 ev = es.eigenvalues();  // ascending
  fit.centroid = c;
  fit.eigenvalues = ev;
  if (!(ev(2) > 0.0) || ev(1) <= 1e-10 * ev(2)) return fit;

  Vec3 n = es.eigenvectors().col(0).normalized();
  if (n.dot(viewpoint - c) < 0.0) n = -n;
  fit.normal = n;
  fit.status = PlaneFitStatus::kOk;
  for (const auto& p : neighbors) {
    if (std::abs(n.dot(p - c)) > validity_threshold) {
      fit.status = PlaneFitStatus::kExceedsThreshold;
      break;
    }
  }
  return fit;
}

/// A fitted plane whose thickness is small against its narrower in-plane
/// extent.
inline bool plane_is_well_supported(const PlaneFit& fit, double max_planarity_ratio) {
  return fit.ok() && fit.eigenvalues(0) <= max_planarity_ratio * fit.eigenvalues(1);
}

inline Vec3 sensor_to_world(const NominalState& x, const LidarExtrinsics& ext, const Vec3& p_sensor) {
  return x.R * ext.to_body(p_sensor) + x.p;
}

/// Queries run grouped by map voxel for locality; the result keeps the input
/// point order.
inline std::vector<PlaneCorrespondence> find_correspondences(const LidarScan& scan, const LocalMap& map,
                                                             const NominalState& x, const LidarExtrinsics& ext,
                                                             const LidarParams& params) {
  std::vector<PlaneCorrespondence> out;
  if (map.empty()) return out;
  const auto points = voxel_downsample(scan.points, params.scan_voxel);
  const Vec3 viewpoint = x.R * ext.t + x.p;
  const double max_d2 = params.max_correspondence_distance * params.max_correspondence_distance;

  std::vector<Vec3> world(points.size());
  std::vector<std::pair<VoxelKey, std::size_t>> order(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    world[i] = sensor_to_world(x, ext, points[i]);
    order[i] = {voxel_of(world[i], map.voxel_size()), i};
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.x, a.first.y, a.first.z, a.second) < std::tie(b.first.x, b.first.y, b.first.z, b.second);
  });

  std::vector<std::optional<PlaneCorrespondence>> found(points.size());
  std::vector<Vec3> nn;
  LocalMap::Search search(map);
  for (const auto& [key, i] : order) {
    const Vec3& w = world[i];
    search.nearest(w, params.k_neighbors, nn);
    if (static_cast<int>(nn.size()) < params.k_neighbors) continue;
    if ((nn.back() - w).squaredNorm() > max_d2) continue;
    const PlaneFit fit = fit_plane(nn, viewpoint, params.plane_validity_threshold);
    if (!plane_is_well_supported(fit, params.max_planarity_ratio)) continue;
    const double r = fit.normal.dot(w - fit.centroid);
    if (std::abs(r) > params.max_residual_gate) continue;
    found[i] = PlaneCorrespondence{points[i], fit.centroid, fit.normal, r};
  }
  out.reserve(points.size());
  for (auto& f : found) {
    if (f) out.push_back(*f);
  }
  return out;
}

/// Point-to-plane residual of one correspondence re-evaluated at state `x`.
inline double point_to_plane(const PlaneCorrespondence& c, const NominalState& x, const LidarExtrinsics& ext) {
  return c.n_i.dot(sensor_to_world(x, ext, c.p_i) - c.q_i);
}

/// One row per correspondence: residual -r_i, Jacobian d r_i / d dx, noise
/// sigma_lidar^2 (stored diagonally).
inline MeasurementBundle assemble_lidar_bundle(const std::vector<PlaneCorrespondence>& corrs, const NominalState& x,
                                               const LidarExtrinsics& ext, double sigma_lidar) {
  if (corrs.empty()) throw EmptyBundle("no LiDAR correspondences at t=" + std::to_string(x.t));
  const auto m = static_cast<Eigen::Index>(corrs.size());
  MeasurementBundle b;
  b.H = Eigen::MatrixXd::Zero(m, kStateDim);
  b.r.resize(m);
  b.Rn_diag = Eigen::VectorXd::Constant(m, sigma_lidar * sigma_lidar);
  const Mat3 R = x.R.matrix();
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& c = corrs[static_cast<std::size_t>(i)];
    const Vec3 pb = ext.to_body(c.p_i);
    b.H.block<1, 3>(i, kTheta) = -c.n_i.transpose() * R * hat(pb);
    b.H.block<1, 3>(i, kPos) = c.n_i.transpose();
    b.r(i) = -point_to_plane(c, x, ext);
  }
  return b;
}

/// LiDAR-updated state from the predicted prior, not committed anywhere.
inline NominalState provisional_lidar_update(const NominalState& x, const ErrorCovariance& P,
                                             const MeasurementBundle& bundle) {
  return eskf_update(x, P, bundle).x;
}

/// Inserts the scan at the posterior pose, downsampled on the world grid so
/// each map cell receives at most one point per scan, then crops the map.
inline void integrate_scan(LocalMap& map, const LidarScan& scan, const NominalState& x, const LidarExtrinsics& ext,
                           const LidarParams& params) {
  std::vector<Vec3> world;
  world.reserve(scan.points.size());
  for (const auto& ps : scan.points) world.push_back(sensor_to_world(x, ext, ps));
  for (const auto& pw : voxel_downsample(world, params.scan_voxel)) map.insert(pw);
  map.crop(x.p);
}

inline LocalMap make_local_map(const LidarParams& params) {
  return LocalMap(params.map_voxel, params.scan_voxel, params.max_map_radius, params.map_cell_max_hits);
}

}  // namespace aims
