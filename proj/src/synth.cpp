#include "lidisco/synth.hpp"

#include <algorithm>
#include <limits>

#include "lidisco/error.hpp"
#include "lidisco/parallel.hpp"
#include "lidisco/rng.hpp"

namespace lidisco {

namespace {

constexpr std::uint64_t kLayoutStream = ~std::uint64_t{0};
constexpr int kMaxPlacementAttempts = 10000;

void require(bool ok, const char* field) {
  if (!ok) throw Error(ErrorKind::InvalidConfig, std::string("scene config field '") + field + "' is invalid");
}

bool proper(const Interval& i) { return std::isfinite(i.min) && std::isfinite(i.max) && i.min <= i.max; }

OrientedBox inflate(OrientedBox b, double margin) {
  b.length += margin;
  b.width += margin;
  return b;
}

bool footprints_overlap(const OrientedBox& a, const OrientedBox& b) {
  return convex_intersection_area(box_to_polygon(a), box_to_polygon(b)) > 0.0;
}

OrientedBox ego_box(const SceneConfig& cfg, double t) {
  OrientedBox e;
  e.cx = cfg.ego_speed_mps * t;
  e.length = std::max(cfg.ego_length_m, cfg.ego_width_m);
  e.width = std::min(cfg.ego_length_m, cfg.ego_width_m);
  e.height = 1.5;
  return e;
}

}  // namespace

void SceneConfig::validate() const {
  require(n_frames >= 0, "n_frames");
  require(frame_dt_s > 0.0, "frame_dt_s");
  require(n_objects >= 0, "n_objects");
  require(proper(length_m) && length_m.min > 0.0, "length_m");
  require(proper(width_m) && width_m.min > 0.0, "width_m");
  require(proper(height_m) && height_m.min > 0.0, "height_m");
  require(proper(speed_mps) && speed_mps.min >= 0.0, "speed_mps");
  require(std::isfinite(ego_speed_mps), "ego_speed_mps");
  require(proper(range_m) && range_m.min >= 0.0, "range_m");
  require(proper(bearing_rad), "bearing_rad");
  require(proper(yaw_rad), "yaw_rad");
  require(min_gap_m >= 0.0, "min_gap_m");
  require(ego_length_m > 0.0 && ego_width_m > 0.0, "ego dims");
  require(sensor.rays_per_frame >= 0, "sensor.rays_per_frame");
  require(sensor.max_range_m > 0.0, "sensor.max_range_m");
  require(sensor.angular_noise_rad >= 0.0, "sensor.angular_noise_rad");
  require(sensor.range_noise_m >= 0.0, "sensor.range_noise_m");
  require(sensor.dropout_prob >= 0.0 && sensor.dropout_prob < 1.0, "sensor.dropout_prob");
  require(std::isfinite(sensor.min_hit_height_m), "sensor.min_hit_height_m");
  require(ground_density >= 0.0, "ground_density");
  require(ground_z_sigma_m >= 0.0, "ground_z_sigma_m");
  require(clutter_rate >= 0.0, "clutter_rate");
  require(proper(clutter_range_m) && clutter_range_m.min >= 0.0, "clutter_range_m");
  require(proper(clutter_points) && clutter_points.min >= 1.0, "clutter_points");
  require(clutter_radius_m >= 0.0, "clutter_radius_m");
  require(gt_min_hits >= 0, "gt_min_hits");
  require(gt_min_visible_fraction >= 0.0 && gt_min_visible_fraction <= 1.0, "gt_min_visible_fraction");
}

OrientedBox SyntheticObject::at(double t) const {
  OrientedBox b = box;
  b.cx += vx * t;
  b.cy += vy * t;
  return b;
}

double ray_azimuth(int i, int n) { return 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n); }

std::optional<std::pair<double, std::size_t>> cast_ray(const Vec2& origin, double azimuth,
                                                       std::span<const OrientedBox> boxes) {
  const Vec2 d{std::cos(azimuth), std::sin(azimuth)};
  std::optional<std::pair<double, std::size_t>> best;
  for (std::size_t bi = 0; bi < boxes.size(); ++bi) {
    const auto poly = box_to_polygon(boxes[bi]).vertices;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Vec2 a = poly[k];
      const Vec2 e = poly[(k + 1) % poly.size()] - a;
      const double denom = cross(d, e);
      if (denom == 0.0) continue;
      const Vec2 ao = a - origin;
      const double t = cross(ao, e) / denom;
      const double s = cross(ao, d) / denom;
      if (t <= 0.0 || s < 0.0 || s > 1.0) continue;
      if (!best || t < best->first) best = std::make_pair(t, bi);
    }
  }
  return best;
}

int expected_hits(const OrientedBox& box, const Vec2& ego_origin, int rays_per_frame, double max_range) {
  int hits = 0;
  const OrientedBox one[] = {box};
  for (int i = 0; i < rays_per_frame; ++i) {
    const auto hit = cast_ray(ego_origin, ray_azimuth(i, rays_per_frame), one);
    if (hit && hit->first <= max_range) ++hits;
  }
  return hits;
}

namespace {

std::vector<SyntheticObject> place_objects(const SceneConfig& cfg) {
  Rng rng(cfg.seed, kLayoutStream);
  std::vector<SyntheticObject> objects;
  const double half_gap = cfg.min_gap_m / 2.0;
  for (int o = 0; o < cfg.n_objects; ++o) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      SyntheticObject obj;
      const double range = rng.uniform(cfg.range_m.min, cfg.range_m.max);
      double bearing = rng.uniform(cfg.bearing_rad.min, cfg.bearing_rad.max);
      if (cfg.mirror_bearing && rng.bernoulli(0.5)) bearing = -bearing;
      obj.box.length = rng.uniform(cfg.length_m.min, cfg.length_m.max);
      obj.box.width = rng.uniform(cfg.width_m.min, cfg.width_m.max);
      obj.box.height = rng.uniform(cfg.height_m.min, cfg.height_m.max);
      const double yaw = rng.uniform(cfg.yaw_rad.min, cfg.yaw_rad.max);
      const double speed = rng.uniform(cfg.speed_mps.min, cfg.speed_mps.max);
      obj.box.cx = range * std::cos(bearing);
      obj.box.cy = range * std::sin(bearing);
      obj.box.cz = obj.box.height / 2.0;
      obj.box.yaw = yaw;
      obj.box.score = 1.0;
      obj.box = canonicalize(obj.box);
      obj.vx = speed * std::cos(yaw);
      obj.vy = speed * std::sin(yaw);

      bool ok = true;
      for (int f = 0; f < std::max(cfg.n_frames, 1) && ok; ++f) {
        const double t = f * cfg.frame_dt_s;
        const OrientedBox mine = inflate(obj.at(t), half_gap);
        if (footprints_overlap(mine, inflate(ego_box(cfg, t), half_gap))) ok = false;
        for (const auto& other : objects) {
          if (!ok) break;
          if (footprints_overlap(mine, inflate(other.at(t), half_gap))) ok = false;
        }
      }
      if (ok) {
        objects.push_back(obj);
        placed = true;
      }
    }
    if (!placed)
      throw Error(ErrorKind::InfeasiblePlacement,
                  "could not place object " + std::to_string(o) + " after " + std::to_string(kMaxPlacementAttempts) +
                      " attempts");
  }
  return objects;
}

struct FrameOutput {
  PointCloud cloud;
  std::vector<int> sources;
  std::vector<int> hits;
};

FrameOutput render_frame(const SceneConfig& cfg, const std::vector<SyntheticObject>& objects, int f,
                         const Pose& world_from_ego) {
  Rng rng(cfg.seed, static_cast<std::uint64_t>(f));
  const double t = f * cfg.frame_dt_s;
  const Pose ego_from_world = world_from_ego.inverse();
  std::vector<OrientedBox> boxes;
  for (const auto& o : objects) boxes.push_back(transform_box(ego_from_world, o.at(t)));

  FrameOutput out;
  out.cloud.frame_id = static_cast<std::uint64_t>(f);
  out.cloud.timestamp = t;
  out.hits.assign(objects.size(), 0);
  const auto& s = cfg.sensor;
  const Vec2 origin{0.0, 0.0};

  for (int i = 0; i < s.rays_per_frame; ++i) {
    double az = ray_azimuth(i, s.rays_per_frame);
    if (s.angular_noise_rad > 0.0) az += rng.normal(0.0, s.angular_noise_rad);
    const auto hit = cast_ray(origin, az, boxes);
    if (!hit || hit->first > s.max_range_m) continue;
    ++out.hits[hit->second];
    if (s.dropout_prob > 0.0 && rng.bernoulli(s.dropout_prob)) continue;
    double r = hit->first;
    if (s.range_noise_m > 0.0) r += rng.normal(0.0, s.range_noise_m);
    const OrientedBox& b = boxes[hit->second];
    const double bottom = b.cz - b.height / 2.0;
    const double top = b.cz + b.height / 2.0;
    const double zlo = std::min(std::max(bottom, s.min_hit_height_m), top);
    const double z = rng.uniform(zlo, top);
    out.cloud.points.push_back({r * std::cos(az), r * std::sin(az), z, 0.0});
    out.sources.push_back(static_cast<int>(hit->second));
  }

  if (cfg.ground_density > 0.0) {
    const double radius = s.max_range_m;
    const auto count = static_cast<std::int64_t>(std::llround(cfg.ground_density * kPi * radius * radius));
    for (std::int64_t k = 0; k < count; ++k) {
      const double r = radius * std::sqrt(rng.uniform());
      const double az = 2.0 * kPi * rng.uniform();
      const double z = rng.normal(0.0, cfg.ground_z_sigma_m);
      const auto hit = cast_ray(origin, az, boxes);
      if (hit && hit->first <= r) continue;  // a box surface is nearer along this ray
      out.cloud.points.push_back({r * std::cos(az), r * std::sin(az), z, 0.0});
      out.sources.push_back(kSourceGround);
    }
  }

  if (cfg.clutter_rate > 0.0) {
    const double whole = std::floor(cfg.clutter_rate);
    const int n = static_cast<int>(whole) + (rng.bernoulli(cfg.clutter_rate - whole) ? 1 : 0);
    for (int c = 0; c < n; ++c) {
      Vec2 ctr{};
      for (int attempt = 0; attempt < 100; ++attempt) {
        const double r = rng.uniform(cfg.clutter_range_m.min, cfg.clutter_range_m.max);
        const double az = 2.0 * kPi * rng.uniform();
        ctr = {r * std::cos(az), r * std::sin(az)};
        bool clear = true;
        for (const auto& b : boxes) {
          const OrientedBox probe{ctr.x, ctr.y, 0.0, 2.0 * cfg.clutter_radius_m + 1.0,
                                  2.0 * cfg.clutter_radius_m + 1.0, 1.0, 0.0, 1.0, std::nullopt};
          if (footprints_overlap(probe, b)) clear = false;
        }
        if (clear) break;
      }
      const auto npts = rng.uniform_int(static_cast<std::int64_t>(cfg.clutter_points.min),
                                        static_cast<std::int64_t>(cfg.clutter_points.max));
      for (std::int64_t k = 0; k < npts; ++k) {
        const double rr = cfg.clutter_radius_m * std::sqrt(rng.uniform());
        const double aa = 2.0 * kPi * rng.uniform();
        const double z = rng.uniform(0.5, 1.5);
        out.cloud.points.push_back({ctr.x + rr * std::cos(aa), ctr.y + rr * std::sin(aa), z, 0.0});
        out.sources.push_back(kSourceClutter);
      }
    }
  }
  return out;
}

}  // namespace

SyntheticScene generate(const SceneConfig& config, int threads) {
  config.validate();
  SyntheticScene scene;
  scene.objects = place_objects(config);
  scene.sequence.sequence_id = "synth_" + std::to_string(config.seed);

  const auto n = static_cast<std::size_t>(config.n_frames);
  scene.sequence.frames.resize(n);
  scene.truth.poses.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    const double t = static_cast<double>(f) * config.frame_dt_s;
    FrameInfo& fi = scene.sequence.frames[f];
    fi.frame_id = f;
    fi.timestamp = t;
    fi.pose = Pose::from_yaw(0.0, config.ego_speed_mps * t, 0.0);
    scene.truth.poses[f] = fi.pose;
  }

  std::vector<FrameOutput> rendered(n);
  parallel_for(n, threads, [&](std::size_t f) {
    rendered[f] = render_frame(config, scene.objects, static_cast<int>(f), scene.sequence.frames[f].pose);
  });

  for (std::size_t f = 0; f < n; ++f) {
    const Pose ego_from_world = scene.sequence.frames[f].pose.inverse();
    auto& gt = scene.truth.labels[f];
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
      const int hits = rendered[f].hits[o];
      if (hits < config.gt_min_hits || hits == 0) continue;
      OrientedBox b = transform_box(ego_from_world, scene.objects[o].at(scene.sequence.frames[f].timestamp));
      if (config.gt_min_visible_fraction > 0.0) {
        const int unoccluded = expected_hits(b, {0.0, 0.0}, config.sensor.rays_per_frame, config.sensor.max_range_m);
        if (hits < config.gt_min_visible_fraction * unoccluded) continue;
      }
      b.score = 1.0;
      b.track_id = o;
      gt.push_back(b);
    }
    scene.sequence.clouds.push_back(std::move(rendered[f].cloud));
    scene.point_sources.push_back(std::move(rendered[f].sources));
    scene.object_hits.push_back(std::move(rendered[f].hits));
  }
  return scene;
}

}  // namespace lidisco
