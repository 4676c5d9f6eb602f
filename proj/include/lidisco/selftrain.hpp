#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lidisco/boxfit.hpp"
#include "lidisco/cluster.hpp"
#include "lidisco/core.hpp"
#include "lidisco/detector.hpp"
#include "lidisco/ground.hpp"
#include "lidisco/track.hpp"

namespace lidisco {

/// Every tunable of the labelling pipeline.
struct PipelineParams {
  GroundParams ground;
  ClusterParams cluster;
  BoxFitParams boxfit;
  TrackParams track;
  DetectorParams detector;
  /// Labels farther than this are not used to train templates (CLI `train`).
  double train_near_range_m = 40.0;
};

struct RoundConfig {
  /// Total rounds including the zero-shot round 0.
  int n_rounds = 3;
  /// Entry r is the near range of round r (round 0: clustering; r >= 1: training labels).
  /// The last entry repeats when the schedule is shorter than n_rounds.
  std::vector<double> near_range_schedule{40.0, 60.0, 80.0};
  std::uint64_t seed = 0;
  PipelineParams params;

  double near_range(int round) const;
  void validate() const;
};

struct RoundArtifacts {
  int round = 0;
  LabelSet training_labels;           ///< empty for round 0
  std::optional<TemplateModel> model; ///< never set for round 0
  LabelSet labels;                    ///< post-filter output of the round
  std::size_t label_count = 0;
  double mean_score = 0.0;
};

struct SelfTrainResult {
  std::vector<RoundArtifacts> rounds;
  /// Set when training stopped early; names the round that could not be trained.
  std::optional<std::string> stop_reason;
};

/// Ground-removed sweeps and their BEV rasters, computed once per sequence.
struct PreparedSequence {
  std::vector<FrameInfo> frames;
  std::vector<PointCloud> nonground;
  std::vector<BevGrid> grids;
};

PreparedSequence prepare_sequence(const Sequence& seq, const PipelineParams& params, int threads = 1);

/// Per-frame cluster boxes with no temporal filtering (ego frame, every frame present).
LabelSet cluster_boxes(const PreparedSequence& prepared, const PipelineParams& params, int threads = 1);

/// run_tracker, per-track size refinement, then temporal_filter.
LabelSet temporally_filter(const LabelSet& per_frame, std::span<const FrameInfo> frames, const TrackParams& params);

/// Zero-shot labels: ground removal, near-range clustering, box fitting, tracking,
/// size refinement and temporal filtering. No detector is involved.
LabelSet round_zero(const Sequence& seq, const PipelineParams& params, int threads = 1);
LabelSet round_zero(const PreparedSequence& prepared, const PipelineParams& params, int threads = 1);

/// Raw per-frame detections of `model` on every frame.
LabelSet detect_sequence(const PreparedSequence& prepared, const TemplateModel& model, int threads = 1);

/// Template training on every frame's labels within `near_range_m`.
TemplateModel train_on_sequence(const PreparedSequence& prepared, const LabelSet& labels, const DetectorParams& params,
                                double near_range_m);

/// One self-training round r >= 1, computed only from the previous round's labels.
RoundArtifacts run_round(const PreparedSequence& prepared, const LabelSet& previous_labels, const RoundConfig& config,
                         int round, int threads = 1);

/// Rounds 0 .. n_rounds-1. Stops early (with stop_reason) if a round has no training labels.
SelfTrainResult self_train(const Sequence& seq, const RoundConfig& config, int threads = 1);

/// round_<r>/labels.jsonl, round_<r>/model.json (r >= 1) and round_<r>/summary.json.
void write_round_artifacts(const std::filesystem::path& dir, const RoundArtifacts& artifacts);

}  // namespace lidisco
