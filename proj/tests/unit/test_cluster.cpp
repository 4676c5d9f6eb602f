#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "lidisco/cluster.hpp"
#include "oracles.hpp"

using namespace lidisco;

namespace {

PointCloud random_instance(std::mt19937_64& g, std::size_t max_points) {
  std::uniform_real_distribution<double> u(0, 1);
  PointCloud c;
  const std::size_t n = 50 + g() % (max_points - 49);
  const int blobs = 3 + static_cast<int>(g() % 6);
  std::vector<std::pair<Vec2, double>> centres;
  for (int b = 0; b < blobs; ++b) centres.push_back({{u(g) * 30 - 15, u(g) * 30 - 15}, 0.3 + 1.2 * u(g)});
  for (std::size_t i = 0; i < n; ++i) {
    if (u(g) < 0.2) {
      c.points.push_back({u(g) * 40 - 20, u(g) * 40 - 20, u(g) * 2, 0});
    } else {
      const auto& [ctr, s] = centres[g() % centres.size()];
      std::normal_distribution<double> nx(ctr.x, s), ny(ctr.y, s);
      c.points.push_back({nx(g), ny(g), u(g) * 2, 0});
    }
  }
  return c;
}

ClusterParams unfiltered(double eps, int min_pts) {
  ClusterParams p;
  p.eps_m = eps;
  p.min_pts = min_pts;
  p.near_range_m = 1e6;
  p.min_cluster_size = 1;
  p.max_footprint_m = 1e9;
  return p;
}

/// Cluster id per point (-1 for unassigned).
std::vector<int> labels_of(const std::vector<Cluster>& cs, std::size_t n) {
  std::vector<int> lab(n, -1);
  for (std::size_t k = 0; k < cs.size(); ++k)
    for (std::size_t i : cs[k].indices) lab[i] = static_cast<int>(k);
  return lab;
}

std::set<std::set<std::tuple<double, double, double>>> as_point_sets(const PointCloud& c,
                                                                     const std::vector<Cluster>& cs) {
  std::set<std::set<std::tuple<double, double, double>>> out;
  for (const auto& cl : cs) {
    std::set<std::tuple<double, double, double>> s;
    for (std::size_t i : cl.indices) s.insert({c.points[i].x, c.points[i].y, c.points[i].z});
    out.insert(s);
  }
  return out;
}

}  // namespace

TEST_CASE("two separated blobs") {
  PointCloud c;
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 50; ++i) c.points.push_back({b * 10.0 + 0.1 * (i % 10), 0.1 * (i / 10), 1.0, 0});
  ClusterParams p;
  p.eps_m = 0.5;
  p.min_pts = 4;
  const auto cs = dbscan_bev(c, p);
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].indices.size() == 50);
  CHECK(cs[1].indices.size() == 50);
  CHECK(cs[0].indices.front() == 0);

  for (auto& pt : c.points) pt.x += 100;
  CHECK(dbscan_bev(c, p).empty());  // beyond near range
}

TEST_CASE("grid_neighbors") {
  const std::vector<Vec2> one{{3, 4}};
  CHECK(grid_neighbors(one, 0, 0.5) == std::vector<std::size_t>{0});
  const std::vector<Vec2> two{{0, 0}, {0.7, 0}};
  CHECK(grid_neighbors(two, 0, 0.7) == std::vector<std::size_t>{0, 1});
  CHECK(grid_neighbors(two, 1, 0.7) == std::vector<std::size_t>{0, 1});
  CHECK(grid_neighbors(two, 1, 0.69) == std::vector<std::size_t>{1});

  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<Vec2> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back({u(g), u(g)});
  const BevHashGrid grid(pts, 0.8);
  for (std::size_t q = 0; q < pts.size(); ++q) {
    std::vector<std::size_t> want;
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (std::hypot(pts[j].x - pts[q].x, pts[j].y - pts[q].y) <= 0.8) want.push_back(j);
    CHECK(grid.query(pts[q], 0.8) == want);
  }
}

TEST_CASE("dbscan_bev matches the brute-force oracle and is permutation-invariant") {
  std::mt19937_64 g(123);
  std::uniform_real_distribution<double> eps_d(0.3, 1.0);
  for (int inst = 0; inst < 40; ++inst) {
    const PointCloud c = random_instance(g, 500);
    const double eps = eps_d(g);
    const int min_pts = 2 + static_cast<int>(g() % 7);
    const ClusterParams p = unfiltered(eps, min_pts);
    const auto cs = dbscan_bev(c, p);
    const auto lab = labels_of(cs, c.points.size());

    std::vector<Vec2> bev;
    for (const auto& pt : c.points) bev.push_back({pt.x, pt.y});
    const auto ref = oracle::brute_dbscan(bev, eps, min_pts);

    // core components map one-to-one onto output clusters
    std::map<int, int> comp_to_cluster;
    for (std::size_t i = 0; i < bev.size(); ++i) {
      if (!ref.core[i]) continue;
      REQUIRE(lab[i] >= 0);
      auto [it, fresh] = comp_to_cluster.emplace(ref.core_label[i], lab[i]);
      CHECK(it->second == lab[i]);
    }
    std::set<int> used;
    for (auto [comp, cl] : comp_to_cluster) CHECK(used.insert(cl).second);
    CHECK(used.size() == cs.size());

    // border points follow the smallest-key core neighbour; noise stays out
    for (std::size_t i = 0; i < bev.size(); ++i) {
      if (ref.core[i]) continue;
      if (ref.border_labels[i].empty()) {
        CHECK(lab[i] == -1);
        continue;
      }
      std::size_t best = bev.size();
      for (std::size_t j = 0; j < bev.size(); ++j) {
        if (!ref.core[j] || std::hypot(bev[j].x - bev[i].x, bev[j].y - bev[i].y) > eps) continue;
        const auto kj = std::tie(c.points[j].x, c.points[j].y, c.points[j].z);
        if (best == bev.size() || kj < std::tie(c.points[best].x, c.points[best].y, c.points[best].z)) best = j;
      }
      CHECK(lab[i] == comp_to_cluster.at(ref.core_label[best]));
    }

    // shuffles
    const auto base = as_point_sets(c, cs);
    for (int s = 0; s < 10; ++s) {
      PointCloud sh = c;
      std::shuffle(sh.points.begin(), sh.points.end(), g);
      CHECK(as_point_sets(sh, dbscan_bev(sh, p)) == base);
    }
  }
}

TEST_CASE("clusters are disjoint with valid indices; output order is by smallest member") {
  std::mt19937_64 g(5);
  for (int inst = 0; inst < 20; ++inst) {
    const PointCloud c = random_instance(g, 500);
    const auto cs = dbscan_bev(c, unfiltered(0.6, 4));
    std::set<std::size_t> seen;
    std::tuple<double, double, double> prev{-1e300, -1e300, -1e300};
    for (const auto& cl : cs) {
      CHECK_FALSE(cl.indices.empty());
      CHECK(std::is_sorted(cl.indices.begin(), cl.indices.end()));
      std::tuple<double, double, double> first{1e300, 1e300, 1e300};
      for (std::size_t i : cl.indices) {
        CHECK(i < c.points.size());
        CHECK(seen.insert(i).second);
        first = std::min(first, std::make_tuple(c.points[i].x, c.points[i].y, c.points[i].z));
      }
      CHECK(prev < first);
      prev = first;
    }
  }
}

TEST_CASE("size, footprint and range filters") {
  PointCloud c;
  for (int i = 0; i < 8; ++i) c.points.push_back({5 + 0.1 * i, 0, 1, 0});      // small: 8 pts
  for (int i = 0; i < 40; ++i) c.points.push_back({10 + 0.5 * i, 5, 1, 0});    // long: 19.5 m
  for (int i = 0; i < 30; ++i) c.points.push_back({-5 + 0.3 * (i % 6), -5 + 0.3 * (i / 6), 1, 0});
  ClusterParams p;
  p.eps_m = 0.6;
  p.min_pts = 2;
  auto cs = dbscan_bev(c, p);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].indices.size() == 30);

  p.min_cluster_size = 1;
  p.max_footprint_m = 100;
  CHECK(dbscan_bev(c, p).size() == 3);
  p.min_footprint_m = 1.0;  // drops the 0.7 m stub
  CHECK(dbscan_bev(c, p).size() == 2);
  p.near_range_m = 8.0;
  CHECK(dbscan_bev(c, p).size() == 1);
}

TEST_CASE("bev_diameter equals the largest pairwise distance") {
  std::mt19937_64 g(6);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 50; ++k) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 60; ++i) pts.push_back({u(g), u(g)});
    double best = 0;
    for (const auto& a : pts)
      for (const auto& b : pts) best = std::max(best, std::hypot(a.x - b.x, a.y - b.y));
    CHECK(bev_diameter(pts) == doctest::Approx(best).epsilon(1e-12));
  }
}
