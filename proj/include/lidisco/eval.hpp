#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidisco/core.hpp"

namespace lidisco {

/// Recorded ego path in the world frame with a rectangular footprint centred on the pose.
struct EgoTrajectory {
  std::vector<Pose> poses;
  std::vector<double> timestamps;
  double length_m = 4.0;
  double width_m = 2.0;

  static EgoTrajectory from_frames(std::span<const FrameInfo> frames, double length_m = 4.0, double width_m = 2.0);
};

inline constexpr double kDtcArcStep = 0.1;
inline constexpr const char* kDtcVariant =
    "static-actor, logged-ego-path, arc-length stepping 0.1 m, footprint overlap area > 0";

/// Arc length travelled along the ego path, starting at pose `frame_index`, before the
/// ego footprint first overlaps the (static) world-frame object. Positions and headings
/// are linearly interpolated between poses and probed every 0.1 m of arc. Returns cap_m
/// when no overlap occurs within the remaining path or within cap_m.
double distance_to_collision(const EgoTrajectory& traj, const OrientedBox& obj_world, std::size_t frame_index,
                             double cap_m);

struct Match {
  std::size_t det;
  std::size_t gt;
  double iou;
};

struct MatchResult {
  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_dets;
  std::vector<std::size_t> unmatched_gts;
};

/// Greedy matching in (score desc, canonical key) order: each detection takes the
/// highest-IoU unmatched ground truth with IoU >= iou_thresh.
MatchResult match_detections(std::span<const OrientedBox> dets, std::span<const OrientedBox> gts, double iou_thresh);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct ApResult {
  double ap = 0.0;
  std::vector<PrPoint> curve;
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
  std::size_t num_tp = 0;
};

/// All-point interpolated AP over a whole sequence (frames matched independently).
ApResult average_precision_curve(const LabelSet& dets, const LabelSet& gts, double iou_thresh);
double average_precision(const LabelSet& dets, const LabelSet& gts, double iou_thresh);
/// Single-frame convenience overload.
double average_precision(std::span<const OrientedBox> dets, std::span<const OrientedBox> gts, double iou_thresh);

struct DtcBucket {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t gt_count = 0;
  std::size_t gt_matched = 0;
  std::size_t det_count = 0;
  std::size_t det_true = 0;
  std::optional<double> recall;     ///< empty when the bucket holds no ground truth
  std::optional<double> precision;  ///< empty when the bucket holds no detections
};

struct IouReport {
  double iou_thresh = 0.0;
  ApResult ap;
};

struct EvalReport {
  std::vector<IouReport> per_iou;
  bool has_dtc = false;
  std::string dtc_variant;
  double dtc_iou_thresh = 0.0;
  double cap_m = 0.0;
  std::vector<double> bucket_edges;
  std::vector<DtcBucket> buckets;
  std::optional<double> mean_missed_dtc;
  std::size_t total_gt = 0;
  std::size_t total_det = 0;
};

/// Index of the bucket holding `d`; values at or beyond the last edge land in the last bucket.
std::size_t dtc_bucket_index(std::span<const double> edges, double d);

/// Per-DTC-bucket recall/precision. Matched detections inherit their ground truth's
/// bucket; false positives use their own DTC. Throws Error(InvalidBuckets) unless the
/// edges are strictly increasing, start at 0 and end at cap_m.
EvalReport dtc_bucketed_report(const LabelSet& dets, const LabelSet& gts, std::span<const FrameInfo> frames,
                               const EgoTrajectory& traj, std::span<const double> bucket_edges, double iou_thresh,
                               double cap_m);

struct EvalParams {
  std::vector<double> iou_thresholds{0.3, 0.5};
  std::vector<double> bucket_edges{0.0, 10.0, 20.0, 40.0, 100.0};
  double cap_m = 100.0;
  double ego_length_m = 4.0;
  double ego_width_m = 2.0;
  /// When set, ground truth and detections farther than this from the ego are ignored.
  std::optional<double> max_range_m;
};

/// Keeps boxes with BEV range within [min_range, max_range].
LabelSet filter_by_range(const LabelSet& labels, double min_range, double max_range);

/// AP at every threshold, plus the DTC breakdown (at the first threshold) when `with_dtc`.
EvalReport evaluate(const LabelSet& dets, const LabelSet& gts, std::span<const FrameInfo> frames,
                    const EvalParams& params, bool with_dtc);

/// Fixed-width summary table.
std::string format_report(const EvalReport& report);

/// Per-frame recall of `gts` by `dets` at `iou_thresh`, restricted to ground truth whose
/// BEV range lies in [min_range, max_range). Returns 0 when no ground truth qualifies.
double recall_in_range(const LabelSet& dets, const LabelSet& gts, double iou_thresh, double min_range,
                       double max_range);

/// Fraction of detections matched to ground truth (all frames). 0 when there are none.
double precision_of(const LabelSet& dets, const LabelSet& gts, double iou_thresh);

}  // namespace lidisco
