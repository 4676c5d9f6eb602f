#include "lidisco/boxfit.hpp"

#include <algorithm>
#include <limits>

#include "lidisco/error.hpp"

namespace lidisco {

ConvexHull convex_hull_2d(std::span<const Vec2> points) {
  std::vector<Vec2> pts(points.begin(), points.end());
  auto lex = [](const Vec2& a, const Vec2& b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); };
  std::sort(pts.begin(), pts.end(), lex);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  ConvexHull out;
  if (pts.size() < 3) {
    out.polygon.vertices = pts;
    out.degenerate = true;
    return out;
  }

  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);

  if (hull.size() < 3) {
    // All points collinear: keep the two extremes.
    out.polygon.vertices = {pts.front(), pts.back()};
    out.degenerate = true;
    return out;
  }
  out.polygon.vertices = std::move(hull);
  return out;
}

Rectangle2 min_area_rectangle(const Polygon2& hull) {
  const auto& v = hull.vertices;
  const std::size_t n = v.size();
  auto at = [&](std::size_t i) -> const Vec2& { return v[i % n]; };

  Rectangle2 best;
  double best_area = std::numeric_limits<double>::infinity();
  double best_perimeter = std::numeric_limits<double>::infinity();

  // Caliper indices: farthest along the edge direction, farthest from the edge,
  // and farthest against the edge direction. Each only ever moves forward.
  std::size_t j = 1, k = 1, m = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = at(i + 1) - at(i);
    const double len = std::hypot(e.x, e.y);
    const Vec2 u{e.x / len, e.y / len};
    const Vec2 nrm{-u.y, u.x};

    if (i == 0) {
      j = k = m = 0;
      for (std::size_t t = 1; t < n; ++t) {
        if (dot(v[t], u) > dot(v[j], u)) j = t;
        if (dot(v[t], nrm) > dot(v[k], nrm)) k = t;
      }
      m = k;
      for (std::size_t t = 0; t < n; ++t)
        if (dot(at(k + t), u) < dot(at(m), u)) m = k + t;
    } else {
      for (std::size_t s = 0; s < n && dot(at(j + 1), u) >= dot(at(j), u); ++s) ++j;
      if (k < j) k = j;
      for (std::size_t s = 0; s < n && dot(at(k + 1), nrm) >= dot(at(k), nrm); ++s) ++k;
      if (m < k) m = k;
      for (std::size_t s = 0; s < n && dot(at(m + 1), u) <= dot(at(m), u); ++s) ++m;
    }

    const double base_n = dot(at(i), nrm);
    const double max_u = dot(at(j), u);
    const double min_u = dot(at(m), u);
    const double max_n = dot(at(k), nrm);
    const double length = max_u - min_u;
    const double width = max_n - base_n;
    const double area = length * width;
    // Equal-area candidates (every edge of an acute triangle gives 2x its area) are
    // separated by perimeter so the choice survives rotation and translation.
    const double tol = 1e-10 * std::min(area, best_area);
    const bool better = area < best_area - tol ||
                        (area <= best_area + tol && length + width < best_perimeter - 1e-10 * best_perimeter);
    if (better) {
      best_area = area;
      best_perimeter = length + width;
      const double cu = (max_u + min_u) / 2.0;
      const double cn = (max_n + base_n) / 2.0;
      best.center = u * cu + nrm * cn;
      best.length = length;
      best.width = width;
      best.yaw = std::atan2(u.y, u.x);
    }
  }
  return best;
}

const char* to_string(BoxFitCriterion c) {
  return c == BoxFitCriterion::Closeness ? "closeness" : "min_area";
}

BoxFitCriterion box_fit_criterion_from_string(const std::string& s) {
  if (s == "min_area") return BoxFitCriterion::MinArea;
  if (s == "closeness") return BoxFitCriterion::Closeness;
  throw Error(ErrorKind::InvalidConfig, "unknown box fit criterion '" + s + "' (min_area | closeness)");
}

namespace {

struct Extent {
  double min1, max1, min2, max2;
};

Extent extent_at(std::span<const Vec2> pts, const Vec2& e1, const Vec2& e2) {
  Extent e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : pts) {
    const double a = dot(p, e1), b = dot(p, e2);
    e.min1 = std::min(e.min1, a);
    e.max1 = std::max(e.max1, a);
    e.min2 = std::min(e.min2, b);
    e.max2 = std::max(e.max2, b);
  }
  return e;
}

double closeness(std::span<const Vec2> pts, double theta) {
  constexpr double d0 = 0.01;
  const Vec2 e1{std::cos(theta), std::sin(theta)};
  const Vec2 e2{-e1.y, e1.x};
  const Extent e = extent_at(pts, e1, e2);
  double score = 0.0;
  for (const auto& p : pts) {
    const double a = dot(p, e1), b = dot(p, e2);
    const double d1 = std::min(e.max1 - a, a - e.min1);
    const double d2 = std::min(e.max2 - b, b - e.min2);
    score += 1.0 / std::max(std::min(d1, d2), d0);
  }
  return score;
}

}  // namespace

Rectangle2 closeness_rectangle(std::span<const Vec2> points) {
  constexpr double coarse = kPi / 180.0;
  constexpr double fine = coarse / 50.0;
  double best_theta = 0.0, best = -1.0;
  for (int k = 0; k < 90; ++k) {
    const double th = k * coarse;
    const double s = closeness(points, th);
    if (s > best) {
      best = s;
      best_theta = th;
    }
  }
  const double centre = best_theta;
  for (int k = -50; k <= 50; ++k) {
    if (k == 0) continue;
    const double th = centre + k * fine;
    const double s = closeness(points, th);
    if (s > best) {
      best = s;
      best_theta = th;
    }
  }
  const Vec2 e1{std::cos(best_theta), std::sin(best_theta)};
  const Vec2 e2{-e1.y, e1.x};
  const Extent e = extent_at(points, e1, e2);
  Rectangle2 r;
  r.center = e1 * ((e.min1 + e.max1) / 2.0) + e2 * ((e.min2 + e.max2) / 2.0);
  r.length = e.max1 - e.min1;
  r.width = e.max2 - e.min2;
  r.yaw = best_theta;
  return r;
}

OrientedBox fit_oriented_box(std::span<const Point3> points, const BoxFitParams& params) {
  if (points.empty()) throw Error(ErrorKind::EmptyCluster, "cannot fit a box to zero points");

  std::vector<Vec2> bev;
  bev.reserve(points.size());
  double zmin = std::numeric_limits<double>::infinity();
  double zmax = -std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    bev.push_back({p.x, p.y});
    zmin = std::min(zmin, p.z);
    zmax = std::max(zmax, p.z);
  }

  OrientedBox box;
  box.cz = (zmin + zmax) / 2.0;
  box.height = std::max(zmax - zmin, params.h_min);
  box.score = 1.0;

  const ConvexHull hull = convex_hull_2d(bev);
  if (!hull.degenerate && polygon_area(hull.polygon) >= 1e-6) {
    const Rectangle2 r = params.criterion == BoxFitCriterion::Closeness ? closeness_rectangle(bev)
                                                                        : min_area_rectangle(hull.polygon);
    box.cx = r.center.x;
    box.cy = r.center.y;
    box.length = r.length;
    box.width = r.width;
    box.yaw = r.yaw;
    return canonicalize(box);
  }

  // Degenerate: a point, a segment, or a sliver. Orient along the diameter.
  const auto& hv = hull.polygon.vertices;
  Vec2 a = hv.front(), b = hv.front();
  double best = -1.0;
  for (std::size_t i = 0; i < hv.size(); ++i) {
    for (std::size_t t = i + 1; t < hv.size(); ++t) {
      const Vec2 d = hv[t] - hv[i];
      if (dot(d, d) > best) {
        best = dot(d, d);
        a = hv[i];
        b = hv[t];
      }
    }
  }
  Vec2 u{1.0, 0.0};
  if (best > 0.0) {
    const double len = std::sqrt(best);
    u = (b - a) * (1.0 / len);
  }
  const Vec2 nrm{-u.y, u.x};
  double min_u = std::numeric_limits<double>::infinity(), max_u = -min_u;
  double min_n = min_u, max_n = -min_u;
  for (const auto& p : hv) {
    min_u = std::min(min_u, dot(p, u));
    max_u = std::max(max_u, dot(p, u));
    min_n = std::min(min_n, dot(p, nrm));
    max_n = std::max(max_n, dot(p, nrm));
  }
  const Vec2 c = u * ((min_u + max_u) / 2.0) + nrm * ((min_n + max_n) / 2.0);
  box.cx = c.x;
  box.cy = c.y;
  box.width = std::max(max_n - min_n, params.w_min);
  box.length = std::max(max_u - min_u, box.width);
  box.yaw = std::atan2(u.y, u.x);
  return canonicalize(box);
}

}  // namespace lidisco
