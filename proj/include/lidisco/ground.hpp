#pragma once

#include <optional>
#include <vector>

#include "lidisco/core.hpp"

namespace lidisco {

struct GroundParams {
  double cell_size_m = 2.0;
  double percentile = 5.0;
  double clearance_m = 0.3;
};

/// BEV grid of per-cell ground heights; cells without points are unknown.
struct HeightMap {
  double cell_size = 1.0;
  double origin_x = 0.0;  ///< world x of the lower-left corner of cell (0, 0)
  double origin_y = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<std::optional<double>> z;  ///< row-major, index iy * nx + ix

  /// Ground height under (x, y), or nullopt when outside the map or unknown.
  std::optional<double> height_at(double x, double y) const;
};

/// Linear-interpolated percentile (p in [0, 100]) of an unsorted sample; sample must be non-empty.
double percentile(std::vector<double> values, double p);

/// Per occupied cell: the `percentile`-th z of its points, then the median over the known
/// cells of its 3x3 neighbourhood.
HeightMap estimate_ground(const PointCloud& cloud, double cell_size_m, double percentile_p = 5.0);

/// Keeps points strictly above ground + clearance; points over unknown cells are kept.
PointCloud remove_ground(const PointCloud& cloud, const HeightMap& hm, double clearance_m);

/// estimate_ground followed by remove_ground.
PointCloud strip_ground(const PointCloud& cloud, const GroundParams& params);

}  // namespace lidisco
