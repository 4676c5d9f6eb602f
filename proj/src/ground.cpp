#include "lidisco/ground.hpp"

#include <algorithm>
#include <limits>

#include "lidisco/error.hpp"

namespace lidisco {

std::optional<double> HeightMap::height_at(double x, double y) const {
  if (nx == 0 || ny == 0) return std::nullopt;
  const double fx = std::floor((x - origin_x) / cell_size);
  const double fy = std::floor((y - origin_y) / cell_size);
  if (fx < 0 || fy < 0 || fx >= nx || fy >= ny) return std::nullopt;
  return z[static_cast<std::size_t>(fy) * nx + static_cast<std::size_t>(fx)];
}

double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

HeightMap estimate_ground(const PointCloud& cloud, double cell_size_m, double percentile_p) {
  if (!(cell_size_m > 0.0)) throw Error(ErrorKind::InvalidConfig, "ground cell size must be > 0");
  HeightMap hm;
  hm.cell_size = cell_size_m;
  if (cloud.points.empty()) return hm;

  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (const auto& p : cloud.points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  // Align the grid to multiples of the cell size so maps of different sweeps line up.
  hm.origin_x = std::floor(xmin / cell_size_m) * cell_size_m;
  hm.origin_y = std::floor(ymin / cell_size_m) * cell_size_m;
  hm.nx = static_cast<int>(std::floor((xmax - hm.origin_x) / cell_size_m)) + 1;
  hm.ny = static_cast<int>(std::floor((ymax - hm.origin_y) / cell_size_m)) + 1;

  std::vector<std::vector<double>> buckets(static_cast<std::size_t>(hm.nx) * hm.ny);
  for (const auto& p : cloud.points) {
    const int ix = std::clamp(static_cast<int>(std::floor((p.x - hm.origin_x) / cell_size_m)), 0, hm.nx - 1);
    const int iy = std::clamp(static_cast<int>(std::floor((p.y - hm.origin_y) / cell_size_m)), 0, hm.ny - 1);
    buckets[static_cast<std::size_t>(iy) * hm.nx + ix].push_back(p.z);
  }

  std::vector<std::optional<double>> raw(buckets.size());
  for (std::size_t i = 0; i < buckets.size(); ++i)
    if (!buckets[i].empty()) raw[i] = percentile(std::move(buckets[i]), percentile_p);

  hm.z.assign(raw.size(), std::nullopt);
  std::vector<double> window;
  for (int iy = 0; iy < hm.ny; ++iy) {
    for (int ix = 0; ix < hm.nx; ++ix) {
      const std::size_t idx = static_cast<std::size_t>(iy) * hm.nx + ix;
      if (!raw[idx]) continue;
      window.clear();
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int jx = ix + dx, jy = iy + dy;
          if (jx < 0 || jy < 0 || jx >= hm.nx || jy >= hm.ny) continue;
          const auto& v = raw[static_cast<std::size_t>(jy) * hm.nx + jx];
          if (v) window.push_back(*v);
        }
      }
      hm.z[idx] = percentile(window, 50.0);
    }
  }
  return hm;
}

PointCloud remove_ground(const PointCloud& cloud, const HeightMap& hm, double clearance_m) {
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.timestamp = cloud.timestamp;
  for (const auto& p : cloud.points) {
    const auto zg = hm.height_at(p.x, p.y);
    if (!zg || p.z > *zg + clearance_m) out.points.push_back(p);
  }
  return out;
}

PointCloud strip_ground(const PointCloud& cloud, const GroundParams& params) {
  return remove_ground(cloud, estimate_ground(cloud, params.cell_size_m, params.percentile), params.clearance_m);
}

}  // namespace lidisco
