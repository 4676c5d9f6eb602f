#include "lidisco/config.hpp"

#include <set>

#include "lidisco/error.hpp"

namespace lidisco {

namespace {

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("key '") + key + "': " + e.what());
    }
  }

  void get(const char* key, Interval& out) {
    std::vector<double> v{out.min, out.max};
    get(key, v);
    if (v.size() != 2) fail(std::string("key '") + key + "' must be [min, max]");
    out = {v[0], v[1]};
  }

  void get(const char* key, std::optional<double>& out) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    double v = 0.0;
    get(key, v);
    out = v;
  }

  template <typename Fn>
  void child(const char* key, Fn&& fn) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    Reader r(*it, path_ + "." + key);
    fn(r);
    r.finish();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!known_.count(it.key())) fail("unknown key '" + it.key() + "'");
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::InvalidConfig, path_ + ": " + what);
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> known_;
};

Json interval(const Interval& i) { return Json::array({i.min, i.max}); }

void read_pipeline(Reader& r, PipelineParams& p) {
  r.child("ground", [&](Reader& g) {
    g.get("cell_size_m", p.ground.cell_size_m);
    g.get("percentile", p.ground.percentile);
    g.get("clearance_m", p.ground.clearance_m);
  });
  r.child("cluster", [&](Reader& c) {
    c.get("eps_m", p.cluster.eps_m);
    c.get("min_pts", p.cluster.min_pts);
    c.get("near_range_m", p.cluster.near_range_m);
    c.get("min_cluster_size", p.cluster.min_cluster_size);
    c.get("max_footprint_m", p.cluster.max_footprint_m);
    c.get("min_footprint_m", p.cluster.min_footprint_m);
  });
  r.child("boxfit", [&](Reader& b) {
    b.get("w_min", p.boxfit.w_min);
    b.get("h_min", p.boxfit.h_min);
    std::string crit = to_string(p.boxfit.criterion);
    b.get("criterion", crit);
    p.boxfit.criterion = box_fit_criterion_from_string(crit);
  });
  r.child("track", [&](Reader& t) {
    t.get("gate_m", p.track.gate_m);
    t.get("max_misses", p.track.max_misses);
    t.get("min_track_len", p.track.min_track_len);
    t.get("min_confirmed_overlap_iou", p.track.min_confirmed_overlap_iou);
  });
  r.child("detector", [&](Reader& d) {
    d.child("grid", [&](Reader& g) {
      g.get("half_extent_x", p.detector.grid.half_extent_x);
      g.get("half_extent_y", p.detector.grid.half_extent_y);
      g.get("cell_size", p.detector.grid.cell_size);
    });
    d.get("num_bins", p.detector.num_bins);
    d.get("patch_size", p.detector.patch_size);
    d.get("threshold_percentile", p.detector.threshold_percentile);
    d.get("nms_iou", p.detector.nms_iou);
  });
  r.get("train_near_range_m", p.train_near_range_m);
}

void check(const PipelineParams& p) {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (!(p.ground.cell_size_m > 0.0)) bad("ground.cell_size_m must be > 0");
  if (p.ground.percentile < 0.0 || p.ground.percentile > 100.0) bad("ground.percentile must be in [0, 100]");
  if (p.ground.clearance_m < 0.0) bad("ground.clearance_m must be >= 0");
  if (!p.cluster.is_valid()) bad("cluster params invalid (eps_m > 0, min_pts >= 1, near_range_m > 0)");
  if (!(p.boxfit.w_min > 0.0) || !(p.boxfit.h_min > 0.0)) bad("boxfit floors must be > 0");
  if (!p.track.is_valid()) bad("track params invalid (gate_m > 0, min_track_len >= 1, max_misses >= 0)");
  if (!p.detector.grid.is_valid()) bad("detector.grid invalid: " + p.detector.grid.describe());
  if (p.detector.num_bins < 1) bad("detector.num_bins must be >= 1");
  if (p.detector.patch_size < 1 || p.detector.patch_size % 2 == 0) bad("detector.patch_size must be odd");
  if (!(p.detector.nms_iou > 0.0 && p.detector.nms_iou < 1.0)) bad("detector.nms_iou must be in (0, 1)");
  if (p.detector.threshold_percentile < 0.0 || p.detector.threshold_percentile > 100.0)
    bad("detector.threshold_percentile must be in [0, 100]");
  if (!(p.train_near_range_m > 0.0)) bad("train_near_range_m must be > 0");
}

}  // namespace

Json to_json(const PipelineParams& p) {
  Json j;
  j["ground"] = {{"cell_size_m", p.ground.cell_size_m},
                 {"percentile", p.ground.percentile},
                 {"clearance_m", p.ground.clearance_m}};
  j["cluster"] = {{"eps_m", p.cluster.eps_m},
                  {"min_pts", p.cluster.min_pts},
                  {"near_range_m", p.cluster.near_range_m},
                  {"min_cluster_size", p.cluster.min_cluster_size},
                  {"max_footprint_m", p.cluster.max_footprint_m},
                  {"min_footprint_m", p.cluster.min_footprint_m}};
  j["boxfit"] = {{"w_min", p.boxfit.w_min}, {"h_min", p.boxfit.h_min}, {"criterion", to_string(p.boxfit.criterion)}};
  j["track"] = {{"gate_m", p.track.gate_m},
                {"max_misses", p.track.max_misses},
                {"min_track_len", p.track.min_track_len},
                {"min_confirmed_overlap_iou", p.track.min_confirmed_overlap_iou}};
  Json grid = {{"half_extent_x", p.detector.grid.half_extent_x},
               {"half_extent_y", p.detector.grid.half_extent_y},
               {"cell_size", p.detector.grid.cell_size}};
  j["detector"] = {{"grid", grid},
                   {"num_bins", p.detector.num_bins},
                   {"patch_size", p.detector.patch_size},
                   {"threshold_percentile", p.detector.threshold_percentile},
                   {"nms_iou", p.detector.nms_iou}};
  j["train_near_range_m"] = p.train_near_range_m;
  return j;
}

PipelineParams pipeline_params_from_json(const Json& j) {
  PipelineParams p;
  Reader r(j, "params");
  read_pipeline(r, p);
  r.finish();
  check(p);
  return p;
}

Json to_json(const RoundConfig& c) {
  Json j;
  j["n_rounds"] = c.n_rounds;
  j["near_range_schedule"] = c.near_range_schedule;
  j["seed"] = c.seed;
  j["params"] = to_json(c.params);
  return j;
}

RoundConfig round_config_from_json(const Json& j) {
  RoundConfig c;
  Reader r(j, "rounds");
  r.get("n_rounds", c.n_rounds);
  r.get("near_range_schedule", c.near_range_schedule);
  r.get("seed", c.seed);
  r.child("params", [&](Reader& pr) { read_pipeline(pr, c.params); });
  r.finish();
  check(c.params);
  c.validate();
  return c;
}

Json to_json(const SceneConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["n_frames"] = c.n_frames;
  j["frame_dt_s"] = c.frame_dt_s;
  j["n_objects"] = c.n_objects;
  j["length_m"] = interval(c.length_m);
  j["width_m"] = interval(c.width_m);
  j["height_m"] = interval(c.height_m);
  j["speed_mps"] = interval(c.speed_mps);
  j["ego_speed_mps"] = c.ego_speed_mps;
  j["range_m"] = interval(c.range_m);
  j["bearing_rad"] = interval(c.bearing_rad);
  j["mirror_bearing"] = c.mirror_bearing;
  j["yaw_rad"] = interval(c.yaw_rad);
  j["min_gap_m"] = c.min_gap_m;
  j["ego_length_m"] = c.ego_length_m;
  j["ego_width_m"] = c.ego_width_m;
  j["sensor"] = {{"rays_per_frame", c.sensor.rays_per_frame},
                 {"max_range_m", c.sensor.max_range_m},
                 {"angular_noise_rad", c.sensor.angular_noise_rad},
                 {"range_noise_m", c.sensor.range_noise_m},
                 {"dropout_prob", c.sensor.dropout_prob},
                 {"min_hit_height_m", c.sensor.min_hit_height_m}};
  j["ground_density"] = c.ground_density;
  j["ground_z_sigma_m"] = c.ground_z_sigma_m;
  j["clutter_rate"] = c.clutter_rate;
  j["clutter_range_m"] = interval(c.clutter_range_m);
  j["clutter_points"] = interval(c.clutter_points);
  j["clutter_radius_m"] = c.clutter_radius_m;
  j["gt_min_hits"] = c.gt_min_hits;
  j["gt_min_visible_fraction"] = c.gt_min_visible_fraction;
  return j;
}

SceneConfig scene_config_from_json(const Json& j) {
  SceneConfig c;
  Reader r(j, "scene");
  r.get("seed", c.seed);
  r.get("n_frames", c.n_frames);
  r.get("frame_dt_s", c.frame_dt_s);
  r.get("n_objects", c.n_objects);
  r.get("length_m", c.length_m);
  r.get("width_m", c.width_m);
  r.get("height_m", c.height_m);
  r.get("speed_mps", c.speed_mps);
  r.get("ego_speed_mps", c.ego_speed_mps);
  r.get("range_m", c.range_m);
  r.get("bearing_rad", c.bearing_rad);
  r.get("mirror_bearing", c.mirror_bearing);
  r.get("yaw_rad", c.yaw_rad);
  r.get("min_gap_m", c.min_gap_m);
  r.get("ego_length_m", c.ego_length_m);
  r.get("ego_width_m", c.ego_width_m);
  r.child("sensor", [&](Reader& s) {
    s.get("rays_per_frame", c.sensor.rays_per_frame);
    s.get("max_range_m", c.sensor.max_range_m);
    s.get("angular_noise_rad", c.sensor.angular_noise_rad);
    s.get("range_noise_m", c.sensor.range_noise_m);
    s.get("dropout_prob", c.sensor.dropout_prob);
    s.get("min_hit_height_m", c.sensor.min_hit_height_m);
  });
  r.get("ground_density", c.ground_density);
  r.get("ground_z_sigma_m", c.ground_z_sigma_m);
  r.get("clutter_rate", c.clutter_rate);
  r.get("clutter_range_m", c.clutter_range_m);
  r.get("clutter_points", c.clutter_points);
  r.get("clutter_radius_m", c.clutter_radius_m);
  r.get("gt_min_hits", c.gt_min_hits);
  r.get("gt_min_visible_fraction", c.gt_min_visible_fraction);
  r.finish();
  c.validate();
  return c;
}

Json to_json(const EvalParams& p) {
  Json j;
  j["iou_thresholds"] = p.iou_thresholds;
  j["bucket_edges"] = p.bucket_edges;
  j["cap_m"] = p.cap_m;
  j["ego_length_m"] = p.ego_length_m;
  j["ego_width_m"] = p.ego_width_m;
  j["max_range_m"] = p.max_range_m ? Json(*p.max_range_m) : Json(nullptr);
  return j;
}

EvalParams eval_params_from_json(const Json& j) {
  EvalParams p;
  Reader r(j, "eval");
  r.get("iou_thresholds", p.iou_thresholds);
  r.get("bucket_edges", p.bucket_edges);
  r.get("cap_m", p.cap_m);
  r.get("ego_length_m", p.ego_length_m);
  r.get("ego_width_m", p.ego_width_m);
  r.get("max_range_m", p.max_range_m);
  r.finish();
  for (double t : p.iou_thresholds)
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorKind::InvalidConfig, "eval: IoU thresholds must be in (0, 1)");
  return p;
}

}  // namespace lidisco
