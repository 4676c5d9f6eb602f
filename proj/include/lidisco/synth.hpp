#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lidisco/core.hpp"

namespace lidisco {

struct Interval {
  double min = 0.0;
  double max = 0.0;
};

struct SensorConfig {
  int rays_per_frame = 3600;
  double max_range_m = 100.0;
  double angular_noise_rad = 0.0;
  double range_noise_m = 0.02;
  double dropout_prob = 0.0;
  /// Object returns are spread uniformly in z over [max(box bottom, this), box top].
  double min_hit_height_m = 0.4;
};

struct SceneConfig {
  std::uint64_t seed = 0;
  int n_frames = 20;
  double frame_dt_s = 0.1;
  int n_objects = 8;
  Interval length_m{3.8, 5.0};
  Interval width_m{1.7, 2.1};
  Interval height_m{1.4, 1.8};
  Interval speed_mps{0.0, 3.0};
  double ego_speed_mps = 5.0;
  /// Initial object placement, relative to the ego at frame 0.
  Interval range_m{10.0, 70.0};
  Interval bearing_rad{-kPi, kPi};
  /// Negate each object's bearing with probability 1/2 (two-sided layouts).
  bool mirror_bearing = false;
  Interval yaw_rad{-kPi, kPi};
  double min_gap_m = 1.0;  ///< clearance kept between any two footprints at every frame
  double ego_length_m = 4.0;
  double ego_width_m = 2.0;
  SensorConfig sensor;
  double ground_density = 0.2;  ///< points per m^2 over the sensor disc
  double ground_z_sigma_m = 0.02;
  double clutter_rate = 0.0;    ///< spurious clusters per frame
  Interval clutter_range_m{5.0, 35.0};
  Interval clutter_points{12, 25};
  double clutter_radius_m = 0.3;
  /// Objects with fewer returns in a frame are left out of that frame's ground truth.
  int gt_min_hits = 5;
  /// Objects whose returns fall below this fraction of their unoccluded ray count are
  /// treated as occluded and also left out of the ground truth.
  double gt_min_visible_fraction = 0.0;

  /// Throws Error(InvalidConfig) naming the first offending field.
  void validate() const;
};

/// Constant-velocity object in the world frame.
struct SyntheticObject {
  OrientedBox box;  ///< world frame at t = 0
  double vx = 0.0;
  double vy = 0.0;
  OrientedBox at(double t) const;
};

inline constexpr int kSourceGround = -1;
inline constexpr int kSourceClutter = -2;

struct GroundTruth {
  LabelSet labels;          ///< ego frame, track_id = object index
  std::vector<Pose> poses;  ///< world_from_ego per frame
};

struct SyntheticScene {
  Sequence sequence;
  GroundTruth truth;
  std::vector<SyntheticObject> objects;
  /// Per frame, per point: object index, kSourceGround or kSourceClutter.
  std::vector<std::vector<int>> point_sources;
  /// Per frame, per object: noise-free ray hits (before dropout).
  std::vector<std::vector<int>> object_hits;
};

/// Azimuth of ray i of n, uniformly spaced from 0.
double ray_azimuth(int i, int n);

/// First intersection of the ray origin + t * (cos a, sin a), t > 0, with the footprint
/// boundary of any box. Returns (distance, box index).
std::optional<std::pair<double, std::size_t>> cast_ray(const Vec2& origin, double azimuth,
                                                       std::span<const OrientedBox> boxes);

/// Number of the uniform azimuth rays whose first surface hit is `box` within `max_range`.
int expected_hits(const OrientedBox& box, const Vec2& ego_origin, int rays_per_frame, double max_range);

/// Deterministic scene generation. Throws Error(InfeasiblePlacement) when an object
/// cannot be placed after 10^4 attempts.
SyntheticScene generate(const SceneConfig& config, int threads = 1);

}  // namespace lidisco
