#include "lidisco/core.hpp"

#include <algorithm>

namespace lidisco {

Pose Pose::from_yaw(double yaw, double tx, double ty, double tz) {
  Pose p;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  p.rotation = {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
  p.translation = {tx, ty, tz};
  return p;
}

Pose Pose::from_matrix(const std::array<double, 16>& m) {
  Pose p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.rotation[r][c] = m[r * 4 + c];
    p.translation[r] = m[r * 4 + 3];
  }
  return p;
}

std::array<double, 16> Pose::to_matrix() const {
  std::array<double, 16> m{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m[r * 4 + c] = rotation[r][c];
    m[r * 4 + 3] = translation[r];
  }
  m[15] = 1.0;
  return m;
}

Point3 Pose::apply(const Point3& p) const {
  const auto& R = rotation;
  return {R[0][0] * p.x + R[0][1] * p.y + R[0][2] * p.z + translation[0],
          R[1][0] * p.x + R[1][1] * p.y + R[1][2] * p.z + translation[1],
          R[2][0] * p.x + R[2][1] * p.y + R[2][2] * p.z + translation[2], p.intensity};
}

Pose Pose::inverse() const {
  Pose inv;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) inv.rotation[r][c] = rotation[c][r];
  for (int r = 0; r < 3; ++r) {
    inv.translation[r] = -(inv.rotation[r][0] * translation[0] + inv.rotation[r][1] * translation[1] +
                           inv.rotation[r][2] * translation[2]);
  }
  return inv;
}

Pose Pose::compose(const Pose& other) const {
  Pose out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out.rotation[r][c] = rotation[r][0] * other.rotation[0][c] + rotation[r][1] * other.rotation[1][c] +
                           rotation[r][2] * other.rotation[2][c];
    }
    out.translation[r] = rotation[r][0] * other.translation[0] + rotation[r][1] * other.translation[1] +
                         rotation[r][2] * other.translation[2] + translation[r];
  }
  return out;
}

double Pose::yaw() const { return std::atan2(rotation[1][0], rotation[0][0]); }

bool Pose::is_valid() const {
  for (const auto& row : rotation)
    for (double v : row)
      if (!std::isfinite(v)) return false;
  for (double v : translation)
    if (!std::isfinite(v)) return false;
  constexpr double kTol = 1e-9;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double d = 0.0;
      for (int k = 0; k < 3; ++k) d += rotation[k][i] * rotation[k][j];
      if (std::abs(d - (i == j ? 1.0 : 0.0)) > kTol) return false;
    }
  }
  const auto& R = rotation;
  const double det = R[0][0] * (R[1][1] * R[2][2] - R[1][2] * R[2][1]) -
                     R[0][1] * (R[1][0] * R[2][2] - R[1][2] * R[2][0]) +
                     R[0][2] * (R[1][0] * R[2][1] - R[1][1] * R[2][0]);
  return std::abs(det - 1.0) <= kTol;
}

double wrap_angle(double a) {
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  w -= kPi;
  // fmod can land exactly on +pi after the shift for inputs just below -pi.
  if (w >= kPi) w -= 2.0 * kPi;
  return w;
}

OrientedBox canonicalize(OrientedBox b) {
  if (b.width > b.length) {
    std::swap(b.width, b.length);
    b.yaw += kPi / 2.0;
  }
  double y = wrap_angle(b.yaw);
  if (y >= kPi / 2.0) y -= kPi;
  if (y < -kPi / 2.0) y += kPi;
  if (y >= kPi / 2.0) y = -kPi / 2.0;
  b.yaw = y;
  return b;
}

bool is_valid(const OrientedBox& b) {
  for (double v : {b.cx, b.cy, b.cz, b.length, b.width, b.height, b.yaw, b.score})
    if (!std::isfinite(v)) return false;
  return b.length >= b.width && b.width > 0.0 && b.height > 0.0 && b.yaw >= -kPi && b.yaw < kPi &&
         b.score >= 0.0 && b.score <= 1.0;
}

std::tuple<double, double, double, double, double, double, double> canonical_key(const OrientedBox& b) {
  return {b.cx, b.cy, b.cz, b.length, b.width, b.height, b.yaw};
}

bool score_then_key_less(const OrientedBox& a, const OrientedBox& b) {
  if (a.score != b.score) return a.score > b.score;
  return canonical_key(a) < canonical_key(b);
}

PointCloud transform_points(const Pose& pose, const PointCloud& pts) {
  PointCloud out;
  out.frame_id = pts.frame_id;
  out.timestamp = pts.timestamp;
  out.points.reserve(pts.points.size());
  for (const auto& p : pts.points) out.points.push_back(pose.apply(p));
  return out;
}

OrientedBox transform_box(const Pose& pose, const OrientedBox& b) {
  OrientedBox out = b;
  const Point3 c = pose.apply({b.cx, b.cy, b.cz, 0.0});
  out.cx = c.x;
  out.cy = c.y;
  out.cz = c.z;
  out.yaw = b.yaw + pose.yaw();
  return canonicalize(out);
}

Polygon2 box_to_polygon(const OrientedBox& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double hl = b.length / 2.0;
  const double hw = b.width / 2.0;
  const Vec2 u{c * hl, s * hl};
  const Vec2 n{-s * hw, c * hw};
  const Vec2 ctr{b.cx, b.cy};
  return {{ctr - u - n, ctr + u - n, ctr + u + n, ctr - u + n}};
}

double polygon_area(const Polygon2& p) {
  const auto& v = p.vertices;
  if (v.size() < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
  return a / 2.0;
}

namespace {

// Keeps the part of `subject` on the left of the directed edge a->b.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& subject, const Vec2& a, const Vec2& b) {
  std::vector<Vec2> out;
  if (subject.empty()) return out;
  const Vec2 e = b - a;
  auto side = [&](const Vec2& p) { return cross(e, p - a); };
  for (std::size_t i = 0; i < subject.size(); ++i) {
    const Vec2& cur = subject[i];
    const Vec2& prev = subject[(i + subject.size() - 1) % subject.size()];
    const double sc = side(cur);
    const double sp = side(prev);
    if (sc >= 0.0) {
      if (sp < 0.0) out.push_back(prev + (cur - prev) * (sp / (sp - sc)));
      out.push_back(cur);
    } else if (sp >= 0.0) {
      out.push_back(prev + (cur - prev) * (sp / (sp - sc)));
    }
  }
  return out;
}

double clipped_area(const Polygon2& p, const Polygon2& q) {
  std::vector<Vec2> poly = p.vertices;
  const auto& clip = q.vertices;
  for (std::size_t i = 0; i < clip.size() && !poly.empty(); ++i)
    poly = clip_half_plane(poly, clip[i], clip[(i + 1) % clip.size()]);
  return std::max(0.0, polygon_area(Polygon2{std::move(poly)}));
}

}  // namespace

double convex_intersection_area(const Polygon2& p, const Polygon2& q) {
  if (p.vertices.size() < 3 || q.vertices.size() < 3) return 0.0;
  // Clip in a fixed argument order so the result is exactly symmetric.
  const bool swap = std::lexicographical_compare(
      q.vertices.begin(), q.vertices.end(), p.vertices.begin(), p.vertices.end(),
      [](const Vec2& a, const Vec2& b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
  const double area = swap ? clipped_area(q, p) : clipped_area(p, q);
  return std::min({area, polygon_area(p), polygon_area(q)});
}

double bev_iou(const OrientedBox& a, const OrientedBox& b) {
  const double dx = a.cx - b.cx;
  const double dy = a.cy - b.cy;
  const double ra = std::hypot(a.length, a.width) / 2.0;
  const double rb = std::hypot(b.length, b.width) / 2.0;
  if (dx * dx + dy * dy > (ra + rb) * (ra + rb)) return 0.0;
  const Polygon2 pa = box_to_polygon(a);
  const Polygon2 pb = box_to_polygon(b);
  const double inter = convex_intersection_area(pa, pb);
  const double uni = polygon_area(pa) + polygon_area(pb) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace lidisco
