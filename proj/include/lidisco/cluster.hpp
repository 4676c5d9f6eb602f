#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "lidisco/core.hpp"

namespace lidisco {

struct ClusterParams {
  double eps_m = 0.7;
  int min_pts = 5;
  double near_range_m = 40.0;
  std::size_t min_cluster_size = 10;
  double max_footprint_m = 15.0;
  /// Clusters whose BEV diameter is below this are dropped too (0 keeps everything).
  double min_footprint_m = 0.0;

  bool is_valid() const { return eps_m > 0.0 && min_pts >= 1 && near_range_m > 0.0; }
};

struct Cluster {
  std::uint64_t frame_id = 0;
  std::vector<std::size_t> indices;  ///< ascending, into the source cloud
};

/// Uniform hash grid over 2D points with exact radius queries (boundary inclusive).
class BevHashGrid {
 public:
  BevHashGrid(std::span<const Vec2> points, double cell_size);

  /// Indices of all points within `radius` of `q`, ascending.
  std::vector<std::size_t> query(const Vec2& q, double radius) const;

 private:
  static std::uint64_t key(std::int64_t ix, std::int64_t iy);
  std::int64_t cell_of(double v) const;

  std::span<const Vec2> points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

/// Exactly the indices at distance <= eps_m from points_2d[query_idx], itself included.
std::vector<std::size_t> grid_neighbors(std::span<const Vec2> points_2d, std::size_t query_idx, double eps_m);

/// DBSCAN on the BEV projection of near-range points.
///
/// Core points have >= min_pts neighbours (self included) within eps. Clusters are
/// the connected components of core points; a border point joins the cluster of its
/// neighbouring core point with the smallest (x, y, z). Clusters smaller than
/// min_cluster_size or wider than max_footprint_m are dropped. The output is sorted by
/// each cluster's smallest member (x, y, z), so it does not depend on input order.
std::vector<Cluster> dbscan_bev(const PointCloud& cloud, const ClusterParams& params);

/// Largest pairwise BEV distance among the given points.
double bev_diameter(std::span<const Vec2> points);

}  // namespace lidisco
