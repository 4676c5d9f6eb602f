#include "lidisco/cluster.hpp"

#include <algorithm>
#include <numeric>

#include "lidisco/boxfit.hpp"

namespace lidisco {

BevHashGrid::BevHashGrid(std::span<const Vec2> points, double cell_size) : points_(points), cell_(cell_size) {
  for (std::size_t i = 0; i < points.size(); ++i)
    cells_[key(cell_of(points[i].x), cell_of(points[i].y))].push_back(i);
}

std::uint64_t BevHashGrid::key(std::int64_t ix, std::int64_t iy) {
  return (static_cast<std::uint64_t>(ix) << 32) ^ (static_cast<std::uint64_t>(iy) & 0xffffffffULL);
}

std::int64_t BevHashGrid::cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }

std::vector<std::size_t> BevHashGrid::query(const Vec2& q, double radius) const {
  std::vector<std::size_t> out;
  const double r2 = radius * radius;
  const std::int64_t x0 = cell_of(q.x - radius), x1 = cell_of(q.x + radius);
  const std::int64_t y0 = cell_of(q.y - radius), y1 = cell_of(q.y + radius);
  for (std::int64_t ix = x0; ix <= x1; ++ix) {
    for (std::int64_t iy = y0; iy <= y1; ++iy) {
      auto it = cells_.find(key(ix, iy));
      if (it == cells_.end()) continue;
      for (std::size_t idx : it->second) {
        const double dx = points_[idx].x - q.x;
        const double dy = points_[idx].y - q.y;
        if (dx * dx + dy * dy <= r2) out.push_back(idx);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> grid_neighbors(std::span<const Vec2> points_2d, std::size_t query_idx, double eps_m) {
  BevHashGrid grid(points_2d, eps_m);
  return grid.query(points_2d[query_idx], eps_m);
}

double bev_diameter(std::span<const Vec2> points) {
  const ConvexHull hull = convex_hull_2d(points);
  const auto& v = hull.polygon.vertices;
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      const Vec2 d = v[j] - v[i];
      best = std::max(best, dot(d, d));
    }
  return std::sqrt(best);
}

namespace {

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<Cluster> dbscan_bev(const PointCloud& cloud, const ClusterParams& params) {
  const double r2 = params.near_range_m * params.near_range_m;
  std::vector<std::size_t> source;  // local index -> cloud index
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    if (p.x * p.x + p.y * p.y <= r2) {
      source.push_back(i);
      pts.push_back({p.x, p.y});
    }
  }
  const std::size_t n = pts.size();
  if (n == 0) return {};

  const BevHashGrid grid(pts, params.eps_m);
  std::vector<std::vector<std::size_t>> nbrs(n);
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    nbrs[i] = grid.query(pts[i], params.eps_m);
    core[i] = nbrs[i].size() >= static_cast<std::size_t>(params.min_pts);
  }

  DisjointSet ds(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (std::size_t j : nbrs[i])
      if (core[j]) ds.unite(i, j);
  }

  auto point_key = [&](std::size_t local) {
    const auto& p = cloud.points[source[local]];
    return std::tie(p.x, p.y, p.z);
  };

  std::vector<std::size_t> owner(n, n);  // representative core point, n = noise
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      owner[i] = ds.find(i);
      continue;
    }
    std::size_t best = n;
    for (std::size_t j : nbrs[i]) {
      if (!core[j]) continue;
      if (best == n || point_key(j) < point_key(best)) best = j;
    }
    if (best != n) owner[i] = ds.find(best);
  }

  std::unordered_map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i)
    if (owner[i] != n) groups[owner[i]].push_back(i);

  struct Keyed {
    std::tuple<double, double, double> key;
    Cluster cluster;
  };
  std::vector<Keyed> kept;
  for (auto& [rep, members] : groups) {
    if (members.size() < params.min_cluster_size) continue;
    std::vector<Vec2> bev;
    bev.reserve(members.size());
    for (std::size_t m : members) bev.push_back(pts[m]);
    const double diameter = bev_diameter(bev);
    if (diameter > params.max_footprint_m || diameter < params.min_footprint_m) continue;

    Keyed k;
    k.cluster.frame_id = cloud.frame_id;
    std::size_t first = members.front();
    for (std::size_t m : members) {
      k.cluster.indices.push_back(source[m]);
      if (point_key(m) < point_key(first)) first = m;
    }
    std::sort(k.cluster.indices.begin(), k.cluster.indices.end());
    const auto& fp = cloud.points[source[first]];
    k.key = {fp.x, fp.y, fp.z};
    kept.push_back(std::move(k));
  }
  std::sort(kept.begin(), kept.end(), [](const Keyed& a, const Keyed& b) { return a.key < b.key; });

  std::vector<Cluster> out;
  out.reserve(kept.size());
  for (auto& k : kept) out.push_back(std::move(k.cluster));
  return out;
}

}  // namespace lidisco
