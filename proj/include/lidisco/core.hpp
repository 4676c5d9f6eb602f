#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace lidisco {

inline constexpr double kPi = 3.14159265358979323846;

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;

  bool operator==(const Point3&) const = default;
};

/// One LiDAR sweep in the ego frame.
struct PointCloud {
  std::uint64_t frame_id = 0;
  double timestamp = 0.0;
  std::vector<Point3> points;

  bool operator==(const PointCloud&) const = default;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

/// Rigid transform, world_from_ego: p_world = rotation * p_ego + translation.
struct Pose {
  std::array<std::array<double, 3>, 3> rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  std::array<double, 3> translation{0, 0, 0};

  static Pose identity() { return {}; }
  /// Rotation about +z by `yaw`, then translation.
  static Pose from_yaw(double yaw, double tx, double ty, double tz = 0.0);
  /// Row-major 4x4 homogeneous matrix (16 values, last row 0 0 0 1).
  static Pose from_matrix(const std::array<double, 16>& m);
  std::array<double, 16> to_matrix() const;

  Point3 apply(const Point3& p) const;
  Pose inverse() const;
  /// this * other
  Pose compose(const Pose& other) const;
  /// Heading of the ego x-axis in the world BEV plane.
  double yaw() const;
  /// Orthonormal with det = +1 within 1e-9, all entries finite.
  bool is_valid() const;

  bool operator==(const Pose&) const = default;
};

/// BEV-oriented 3D box. Stored canonically: length >= width, yaw in [-pi/2, pi/2).
struct OrientedBox {
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
  double yaw = 0.0;
  double score = 0.0;
  std::optional<std::uint64_t> track_id;

  bool operator==(const OrientedBox&) const = default;
};

/// Per-frame boxes keyed by frame_id, each box in the ego frame of its own frame.
using LabelSet = std::map<std::uint64_t, std::vector<OrientedBox>>;

/// Timing and ego pose of one frame of a sequence.
struct FrameInfo {
  std::uint64_t frame_id = 0;
  double timestamp = 0.0;
  Pose pose;  ///< world_from_ego
};

/// A sequence of sweeps with their frame metadata; clouds[i] belongs to frames[i].
struct Sequence {
  std::string sequence_id;
  std::vector<FrameInfo> frames;
  std::vector<PointCloud> clouds;
};

/// Convex polygon, counter-clockwise.
struct Polygon2 {
  std::vector<Vec2> vertices;
};

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

/// Swaps length/width if needed and maps yaw into [-pi/2, pi/2).
OrientedBox canonicalize(OrientedBox b);

bool is_valid(const OrientedBox& b);

/// Lexicographic key used wherever a deterministic tie-break between boxes is needed.
std::tuple<double, double, double, double, double, double, double> canonical_key(const OrientedBox& b);

/// Total order on boxes: score descending, then canonical key ascending.
bool score_then_key_less(const OrientedBox& a, const OrientedBox& b);

PointCloud transform_points(const Pose& pose, const PointCloud& pts);

/// Moves a box through a rigid transform; only the yaw component of the rotation is honored.
OrientedBox transform_box(const Pose& pose, const OrientedBox& b);

Polygon2 box_to_polygon(const OrientedBox& b);

double polygon_area(const Polygon2& p);

/// Area of the intersection of two convex CCW polygons (Sutherland-Hodgman clipping).
double convex_intersection_area(const Polygon2& p, const Polygon2& q);

double bev_iou(const OrientedBox& a, const OrientedBox& b);

inline double bev_range(const OrientedBox& b) { return std::sqrt(b.cx * b.cx + b.cy * b.cy); }

}  // namespace lidisco
