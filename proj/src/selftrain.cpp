#include "lidisco/selftrain.hpp"

#include <algorithm>

#include "lidisco/dataio.hpp"
#include "lidisco/error.hpp"
#include "lidisco/eval.hpp"
#include "lidisco/parallel.hpp"

namespace lidisco {

double RoundConfig::near_range(int round) const {
  if (near_range_schedule.empty()) return params.cluster.near_range_m;
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(round), near_range_schedule.size() - 1);
  return near_range_schedule[idx];
}

void RoundConfig::validate() const {
  if (n_rounds < 1) throw Error(ErrorKind::InvalidConfig, "n_rounds must be >= 1");
  for (std::size_t i = 0; i < near_range_schedule.size(); ++i) {
    if (!(near_range_schedule[i] > 0.0)) throw Error(ErrorKind::InvalidConfig, "near_range_schedule entries must be > 0");
    if (i > 0 && near_range_schedule[i] < near_range_schedule[i - 1])
      throw Error(ErrorKind::InvalidConfig, "near_range_schedule must be non-decreasing");
  }
}

PreparedSequence prepare_sequence(const Sequence& seq, const PipelineParams& params, int threads) {
  PreparedSequence out;
  out.frames = seq.frames;
  const std::size_t n = seq.clouds.size();
  out.nonground.resize(n);
  out.grids.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    out.nonground[i] = strip_ground(seq.clouds[i], params.ground);
    out.grids[i] = rasterize_bev(out.nonground[i], params.detector.grid);
  });
  return out;
}

LabelSet cluster_boxes(const PreparedSequence& prepared, const PipelineParams& params, int threads) {
  const std::size_t n = prepared.nonground.size();
  std::vector<std::vector<OrientedBox>> per_frame(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const PointCloud& cloud = prepared.nonground[i];
    for (const auto& c : dbscan_bev(cloud, params.cluster)) {
      std::vector<Point3> pts;
      pts.reserve(c.indices.size());
      for (std::size_t idx : c.indices) pts.push_back(cloud.points[idx]);
      per_frame[i].push_back(fit_oriented_box(pts, params.boxfit));
    }
  });
  LabelSet out;
  for (std::size_t i = 0; i < n; ++i) out[prepared.frames[i].frame_id] = std::move(per_frame[i]);
  return out;
}

LabelSet temporally_filter(const LabelSet& per_frame, std::span<const FrameInfo> frames, const TrackParams& params) {
  std::vector<Track> tracks = run_tracker(per_frame, frames, params);
  for (auto& t : tracks)
    if (t.observations.size() >= params.min_track_len) t = refine_track_size(t);
  return temporal_filter(tracks, frames, params);
}

LabelSet round_zero(const PreparedSequence& prepared, const PipelineParams& params, int threads) {
  return temporally_filter(cluster_boxes(prepared, params, threads), prepared.frames, params.track);
}

LabelSet round_zero(const Sequence& seq, const PipelineParams& params, int threads) {
  return round_zero(prepare_sequence(seq, params, threads), params, threads);
}

LabelSet detect_sequence(const PreparedSequence& prepared, const TemplateModel& model, int threads) {
  const std::size_t n = prepared.grids.size();
  std::vector<std::vector<OrientedBox>> per_frame(n);
  parallel_for(n, threads, [&](std::size_t i) { per_frame[i] = detect(prepared.grids[i], model); });
  LabelSet out;
  for (std::size_t i = 0; i < n; ++i) out[prepared.frames[i].frame_id] = std::move(per_frame[i]);
  return out;
}

TemplateModel train_on_sequence(const PreparedSequence& prepared, const LabelSet& labels, const DetectorParams& params,
                                double near_range_m) {
  std::vector<std::vector<OrientedBox>> per_grid(prepared.grids.size());
  for (std::size_t i = 0; i < prepared.frames.size(); ++i)
    if (auto it = labels.find(prepared.frames[i].frame_id); it != labels.end()) per_grid[i] = it->second;
  return train_templates(prepared.grids, per_grid, params, near_range_m);
}

namespace {

void summarize(RoundArtifacts& a) {
  a.label_count = 0;
  double sum = 0.0;
  for (const auto& [f, boxes] : a.labels) {
    a.label_count += boxes.size();
    for (const auto& b : boxes) sum += b.score;
  }
  a.mean_score = a.label_count == 0 ? 0.0 : sum / static_cast<double>(a.label_count);
}

}  // namespace

RoundArtifacts run_round(const PreparedSequence& prepared, const LabelSet& previous_labels, const RoundConfig& config,
                         int round, int threads) {
  RoundArtifacts a;
  a.round = round;
  const double near = config.near_range(round);
  a.training_labels = filter_by_range(previous_labels, 0.0, near);
  a.model = train_on_sequence(prepared, a.training_labels, config.params.detector, near);
  const LabelSet dets = detect_sequence(prepared, *a.model, threads);
  a.labels = temporally_filter(dets, prepared.frames, config.params.track);
  summarize(a);
  return a;
}

SelfTrainResult self_train(const Sequence& seq, const RoundConfig& config, int threads) {
  config.validate();
  PipelineParams p0 = config.params;
  p0.cluster.near_range_m = config.near_range(0);
  const PreparedSequence prepared = prepare_sequence(seq, config.params, threads);

  SelfTrainResult result;
  RoundArtifacts zero;
  zero.round = 0;
  zero.labels = round_zero(prepared, p0, threads);
  summarize(zero);
  result.rounds.push_back(std::move(zero));

  for (int r = 1; r < config.n_rounds; ++r) {
    try {
      result.rounds.push_back(run_round(prepared, result.rounds.back().labels, config, r, threads));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoLabels) throw;
      result.stop_reason = "round " + std::to_string(r) + ": " + e.what() + "; last completed round " +
                           std::to_string(r - 1);
      break;
    }
  }
  return result;
}

void write_round_artifacts(const std::filesystem::path& dir, const RoundArtifacts& artifacts) {
  const auto round_dir = dir / ("round_" + std::to_string(artifacts.round));
  write_labels(artifacts.labels, round_dir / "labels.jsonl");
  if (artifacts.model) write_model(*artifacts.model, round_dir / "model.json");
  Json s;
  s["round"] = artifacts.round;
  s["label_count"] = artifacts.label_count;
  s["mean_score"] = artifacts.mean_score;
  std::size_t train_count = 0;
  for (const auto& [f, b] : artifacts.training_labels) train_count += b.size();
  s["training_label_count"] = train_count;
  s["template_bins"] = artifacts.model ? artifacts.model->bins.size() : 0;
  if (artifacts.model) s["threshold"] = artifacts.model->threshold;
  write_json_file(s, round_dir / "summary.json");
}

}  // namespace lidisco
