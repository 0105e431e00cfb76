#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "aims/errors.hpp"
#include "aims/manifold.hpp"

namespace aims {

struct VoxelKey {
  int32_t x = 0;
  int32_t y = 0;
  int32_t z = 0;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    return static_cast<std::size_t>((static_cast<uint64_t>(static_cast<uint32_t>(k.x)) * 73856093u) ^
                                    (static_cast<uint64_t>(static_cast<uint32_t>(k.y)) * 19349669u) ^
                                    (static_cast<uint64_t>(static_cast<uint32_t>(k.z)) * 83492791u));
  }
};

inline VoxelKey voxel_of(const Vec3& p, double size) {
  return {static_cast<int32_t>(std::floor(p.x() / size)), static_cast<int32_t>(std::floor(p.y() / size)),
          static_cast<int32_t>(std::floor(p.z() / size))};
}

/// Keeps the first point that falls into each voxel, in input order.
inline std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points, double voxel) {
  std::unordered_map<VoxelKey, char, VoxelKeyHash> seen;
  seen.reserve(points.size());
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (seen.try_emplace(voxel_of(p, voxel), 0).second) out.push_back(p);
  }
  return out;
}

/// World-frame point map on a two-level voxel hash.
///
/// Coarse voxels (`voxel_size`) are the unit of neighbor search and cropping.
/// Each coarse voxel is split into cells of `cell_size`; a cell stores the
/// running mean of the first `max_hits` points that landed in it (the default
/// of 1 keeps the first point).
class LocalMap {
 public:
  struct Cell {
    uint16_t index = 0;  // position of the cell inside its coarse voxel
    uint16_t hits = 0;
    Vec3 sum = Vec3::Zero();
    Vec3 mean = Vec3::Zero();
  };

  LocalMap(double voxel_size = 0.2, double cell_size = 0.1, double max_radius = 100.0, int max_hits = 1)
      : voxel_size_(voxel_size), max_radius_(max_radius), max_hits_(max_hits) {
    if (!(voxel_size > 0.0) || !(cell_size > 0.0) || !(max_radius > 0.0) || max_hits < 1) {
      throw ValidationError("local map parameters must be positive");
    }
    cells_per_axis_ = std::max(1, static_cast<int>(std::lround(voxel_size / cell_size)));
    cell_size_ = cell_size;
    voxel_size_ = cell_size * cells_per_axis_;
  }

  bool empty() const { return voxels_.empty(); }
  std::size_t voxel_count() const { return voxels_.size(); }
  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& [key, cells] : voxels_) n += cells.size();
    return n;
  }
  double voxel_size() const { return voxel_size_; }
  double max_radius() const { return max_radius_; }

  void insert(const Vec3& p) {
    if (!p.allFinite()) return;
    const VoxelKey fine = voxel_of(p, cell_size_);
    const VoxelKey key = coarse_of(fine);
    auto& cells = voxels_[key];
    const int n = cells_per_axis_;
    const auto idx =
        static_cast<uint16_t>((fine.x - key.x * n) + n * ((fine.y - key.y * n) + n * (fine.z - key.z * n)));
    for (auto& c : cells) {
      if (c.index == idx) {
        if (c.hits < max_hits_) {
          c.sum += p;
          ++c.hits;
          c.mean = c.sum / static_cast<double>(c.hits);
        }
        return;
      }
    }
    cells.push_back({idx, 1, p, p});
  }

  /// Drops every cell farther than max_radius from `center`.
  void crop(const Vec3& center) {
    const double r2 = max_radius_ * max_radius_;
    const double reach = max_radius_ - voxel_size_ * std::sqrt(3.0);
    for (auto it = voxels_.begin(); it != voxels_.end();) {
      const Vec3 c = (Vec3(it->first.x, it->first.y, it->first.z) + Vec3::Constant(0.5)) * voxel_size_;
      if (reach > 0.0 && (c - center).squaredNorm() < reach * reach) {
        ++it;
        continue;
      }
      auto& cells = it->second;
      cells.erase(std::remove_if(cells.begin(), cells.end(),
                                 [&](const Cell& cell) { return (cell.mean - center).squaredNorm() > r2; }),
                  cells.end());
      if (cells.empty()) {
        it = voxels_.erase(it);
      } else {
        ++it;
      }
    }
  }

  class Search;

  /// k nearest map points among the 27 voxels around `q`, nearest first.
  std::vector<Vec3> nearest(const Vec3& q, int k) const;

  /// All cell means, for export.
  std::vector<Vec3> points() const {
    std::vector<Vec3> out;
    for (const auto& [key, cells] : voxels_) {
      for (const auto& c : cells) out.push_back(c.mean);
    }
    return out;
  }

 private:
  friend class Search;

  static int32_t floor_div(int32_t a, int32_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
  VoxelKey coarse_of(const VoxelKey& fine) const {
    return {floor_div(fine.x, cells_per_axis_), floor_div(fine.y, cells_per_axis_), floor_div(fine.z, cells_per_axis_)};
  }

  double voxel_size_;
  double cell_size_ = 0.1;
  int cells_per_axis_ = 2;
  double max_radius_;
  int max_hits_;
  std::unordered_map<VoxelKey, std::vector<Cell>, VoxelKeyHash> voxels_;
};

/// Repeated nearest-neighbor queries against an unchanging map. Voxel lists
/// around the last query's voxel are looked up on demand and cached, so runs
/// of queries in one voxel share the hash lookups. Voxels that cannot beat the current k-th distance
/// are skipped; ties keep the deterministic visiting order.
class LocalMap::Search {
 public:
  explicit Search(const LocalMap& map) : map_(map) {}

  void nearest(const Vec3& q, int k, std::vector<Vec3>& out) {
    out.clear();
    best_.clear();
    if (k <= 0) return;
    const VoxelKey c = map_.coarse_of(voxel_of(q, map_.cell_size_));
    if (!cached_ || !(c == center_)) load(c);
    const double s = map_.voxel_size_;
    const Vec3 lo = Vec3(c.x, c.y, c.z) * s;
    const Vec3 dlo = q - lo;
    const Vec3 dhi = lo + Vec3::Constant(s) - q;
    for (std::size_t v = 0; v < kVisitOrder.size(); ++v) {
      const auto& off = kVisitOrder[v];
      if (static_cast<int>(best_.size()) == k) {
        double gap2 = 0.0;
        for (int a = 0; a < 3; ++a) {
          const double g = off[a] < 0 ? dlo(a) : off[a] > 0 ? dhi(a) : 0.0;
          gap2 += g * g;
        }
        if (gap2 >= best_.back().first) continue;
      }
      if (!loaded_[v]) {
        const auto it = map_.voxels_.find({c.x + off[0], c.y + off[1], c.z + off[2]});
        lists_[v] = it == map_.voxels_.end() ? nullptr : &it->second;
        loaded_[v] = true;
      }
      const auto* cells = lists_[v];
      if (cells == nullptr) continue;
      for (const auto& cell : *cells) {
        const double d2 = (cell.mean - q).squaredNorm();
        if (static_cast<int>(best_.size()) == k && d2 >= best_.back().first) continue;
        auto pos =
            std::upper_bound(best_.begin(), best_.end(), d2, [](double x, const auto& e) { return x < e.first; });
        best_.insert(pos, {d2, &cell.mean});
        if (static_cast<int>(best_.size()) > k) best_.pop_back();
      }
    }
    out.reserve(best_.size());
    for (const auto& e : best_) out.push_back(*e.second);
  }

 private:
  void load(const VoxelKey& c) {
    loaded_.fill(false);
    center_ = c;
    cached_ = true;
  }

  // centre voxel first, then faces, edges and corners
  static constexpr auto kVisitOrder = [] {
    std::array<std::array<int, 3>, 27> order{};
    std::size_t n = 0;
    for (int ring = 0; ring <= 3; ++ring) {
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -1; dz <= 1; ++dz) {
            if ((dx != 0) + (dy != 0) + (dz != 0) == ring) order[n++] = {dx, dy, dz};
          }
        }
      }
    }
    return order;
  }();

  const LocalMap& map_;
  std::array<const std::vector<Cell>*, 27> lists_{};
  std::array<bool, 27> loaded_{};
  VoxelKey center_;
  bool cached_ = false;
  std::vector<std::pair<double, const Vec3*>> best_;
};

inline std::vector<Vec3> LocalMap::nearest(const Vec3& q, int k) const {
  std::vector<Vec3> out;
  Search(*this).nearest(q, k, out);
  return out;
}

}  // namespace aims
