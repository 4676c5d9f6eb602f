#include "lidisco/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "lidisco/error.hpp"

namespace lidisco {

EgoTrajectory EgoTrajectory::from_frames(std::span<const FrameInfo> frames, double length_m, double width_m) {
  EgoTrajectory t;
  for (const auto& f : frames) {
    t.poses.push_back(f.pose);
    t.timestamps.push_back(f.timestamp);
  }
  t.length_m = length_m;
  t.width_m = width_m;
  return t;
}

double distance_to_collision(const EgoTrajectory& traj, const OrientedBox& obj_world, std::size_t frame_index,
                             double cap_m) {
  if (frame_index >= traj.poses.size()) return cap_m;
  const Polygon2 obj = box_to_polygon(obj_world);

  std::vector<Vec2> pos;
  std::vector<double> yaw, arc;
  for (std::size_t i = frame_index; i < traj.poses.size(); ++i) {
    const Pose& p = traj.poses[i];
    pos.push_back({p.translation[0], p.translation[1]});
    yaw.push_back(p.yaw());
    if (arc.empty()) {
      arc.push_back(0.0);
    } else {
      const Vec2 d = pos.back() - pos[pos.size() - 2];
      arc.push_back(arc.back() + std::hypot(d.x, d.y));
    }
  }

  auto overlaps_at = [&](double s) {
    std::size_t seg = 0;
    while (seg + 1 < arc.size() && arc[seg + 1] < s) ++seg;
    Vec2 c = pos[seg];
    double heading = yaw[seg];
    if (seg + 1 < arc.size() && arc[seg + 1] > arc[seg]) {
      const double a = std::clamp((s - arc[seg]) / (arc[seg + 1] - arc[seg]), 0.0, 1.0);
      c = pos[seg] + (pos[seg + 1] - pos[seg]) * a;
      heading = yaw[seg] + a * wrap_angle(yaw[seg + 1] - yaw[seg]);
    }
    OrientedBox ego;
    ego.cx = c.x;
    ego.cy = c.y;
    ego.length = traj.length_m;
    ego.width = traj.width_m;
    ego.yaw = heading;
    return convex_intersection_area(box_to_polygon(ego), obj) > 0.0;
  };

  const double limit = std::min(arc.back(), cap_m);
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * kDtcArcStep;
    if (s > limit) break;
    if (overlaps_at(s)) return s;
  }
  if (limit == arc.back() && overlaps_at(limit)) return limit;
  return cap_m;
}

MatchResult match_detections(std::span<const OrientedBox> dets, std::span<const OrientedBox> gts, double iou_thresh) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score_then_key_less(dets[a], dets[b]); });
  std::vector<char> taken(gts.size(), 0);
  MatchResult out;
  for (std::size_t d : order) {
    std::size_t best = gts.size();
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double iou = bev_iou(dets[d], gts[g]);
      if (iou >= iou_thresh && iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best == gts.size()) {
      out.unmatched_dets.push_back(d);
    } else {
      taken[best] = 1;
      out.matches.push_back({d, best, best_iou});
    }
  }
  std::sort(out.unmatched_dets.begin(), out.unmatched_dets.end());
  for (std::size_t g = 0; g < gts.size(); ++g)
    if (!taken[g]) out.unmatched_gts.push_back(g);
  return out;
}

namespace {

const std::vector<OrientedBox>& boxes_of(const LabelSet& ls, std::uint64_t frame) {
  static const std::vector<OrientedBox> kEmpty;
  auto it = ls.find(frame);
  return it == ls.end() ? kEmpty : it->second;
}

std::vector<std::uint64_t> all_frames(const LabelSet& a, const LabelSet& b) {
  std::vector<std::uint64_t> ids;
  for (const auto& [f, _] : a) ids.push_back(f);
  for (const auto& [f, _] : b) ids.push_back(f);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

struct ScoredHit {
  double score;
  std::uint64_t frame;
  OrientedBox box;
  bool tp;
};

ApResult ap_from_hits(std::vector<ScoredHit> hits, std::size_t num_gt) {
  std::sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.frame != b.frame) return a.frame < b.frame;
    return canonical_key(a.box) < canonical_key(b.box);
  });
  ApResult r;
  r.num_gt = num_gt;
  r.num_det = hits.size();
  std::size_t tp = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i].tp) ++tp;
    const double recall = num_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(num_gt);
    const double precision = static_cast<double>(tp) / static_cast<double>(i + 1);
    r.curve.push_back({recall, precision});
  }
  r.num_tp = tp;
  if (num_gt == 0) return r;
  // Precision envelope, then area under the step function in recall.
  std::vector<double> env(r.curve.size());
  double running = 0.0;
  for (std::size_t i = r.curve.size(); i-- > 0;) {
    running = std::max(running, r.curve[i].precision);
    env[i] = running;
  }
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < r.curve.size(); ++i) {
    r.ap += (r.curve[i].recall - prev_recall) * env[i];
    prev_recall = r.curve[i].recall;
  }
  r.ap = std::clamp(r.ap, 0.0, 1.0);
  return r;
}

}  // namespace

ApResult average_precision_curve(const LabelSet& dets, const LabelSet& gts, double iou_thresh) {
  std::vector<ScoredHit> hits;
  std::size_t num_gt = 0;
  for (std::uint64_t f : all_frames(dets, gts)) {
    const auto& d = boxes_of(dets, f);
    const auto& g = boxes_of(gts, f);
    num_gt += g.size();
    const MatchResult m = match_detections(d, g, iou_thresh);
    std::vector<char> tp(d.size(), 0);
    for (const auto& mm : m.matches) tp[mm.det] = 1;
    for (std::size_t i = 0; i < d.size(); ++i) hits.push_back({d[i].score, f, d[i], tp[i] != 0});
  }
  return ap_from_hits(std::move(hits), num_gt);
}

double average_precision(const LabelSet& dets, const LabelSet& gts, double iou_thresh) {
  return average_precision_curve(dets, gts, iou_thresh).ap;
}

double average_precision(std::span<const OrientedBox> dets, std::span<const OrientedBox> gts, double iou_thresh) {
  LabelSet d, g;
  d[0].assign(dets.begin(), dets.end());
  g[0].assign(gts.begin(), gts.end());
  return average_precision(d, g, iou_thresh);
}

std::size_t dtc_bucket_index(std::span<const double> edges, double d) {
  const std::size_t nb = edges.size() - 1;
  for (std::size_t i = 0; i < nb; ++i)
    if (d < edges[i + 1]) return i;
  return nb - 1;
}

EvalReport dtc_bucketed_report(const LabelSet& dets, const LabelSet& gts, std::span<const FrameInfo> frames,
                               const EgoTrajectory& traj, std::span<const double> bucket_edges, double iou_thresh,
                               double cap_m) {
  if (bucket_edges.size() < 2) throw Error(ErrorKind::InvalidBuckets, "need at least two bucket edges");
  for (std::size_t i = 1; i < bucket_edges.size(); ++i)
    if (!(bucket_edges[i] > bucket_edges[i - 1]))
      throw Error(ErrorKind::InvalidBuckets, "bucket edges must be strictly increasing");
  if (bucket_edges.front() < 0.0) throw Error(ErrorKind::InvalidBuckets, "bucket edges must start at >= 0");
  if (bucket_edges.back() != cap_m) throw Error(ErrorKind::InvalidBuckets, "last bucket edge must equal cap_m");
  if (traj.poses.size() != frames.size())
    throw Error(ErrorKind::InvalidBuckets, "trajectory and frame list differ in length");

  EvalReport rep;
  rep.has_dtc = true;
  rep.dtc_variant = kDtcVariant;
  rep.dtc_iou_thresh = iou_thresh;
  rep.cap_m = cap_m;
  rep.bucket_edges.assign(bucket_edges.begin(), bucket_edges.end());
  rep.buckets.resize(bucket_edges.size() - 1);
  for (std::size_t i = 0; i + 1 < bucket_edges.size(); ++i) {
    rep.buckets[i].lo = bucket_edges[i];
    rep.buckets[i].hi = bucket_edges[i + 1];
  }

  std::unordered_map<std::uint64_t, std::size_t> index_of;
  for (std::size_t i = 0; i < frames.size(); ++i) index_of[frames[i].frame_id] = i;

  double missed_sum = 0.0;
  std::size_t missed = 0;
  for (std::uint64_t f : all_frames(dets, gts)) {
    auto it = index_of.find(f);
    if (it == index_of.end()) continue;
    const std::size_t fi = it->second;
    const Pose& pose = frames[fi].pose;
    const auto& d = boxes_of(dets, f);
    const auto& g = boxes_of(gts, f);
    const MatchResult m = match_detections(d, g, iou_thresh);

    std::vector<double> gt_dtc(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      gt_dtc[k] = distance_to_collision(traj, transform_box(pose, g[k]), fi, cap_m);
      auto& b = rep.buckets[dtc_bucket_index(bucket_edges, gt_dtc[k])];
      ++b.gt_count;
      ++rep.total_gt;
    }
    for (const auto& mm : m.matches) {
      auto& b = rep.buckets[dtc_bucket_index(bucket_edges, gt_dtc[mm.gt])];
      ++b.gt_matched;
      ++b.det_count;
      ++b.det_true;
      ++rep.total_det;
    }
    for (std::size_t k : m.unmatched_dets) {
      const double dd = distance_to_collision(traj, transform_box(pose, d[k]), fi, cap_m);
      ++rep.buckets[dtc_bucket_index(bucket_edges, dd)].det_count;
      ++rep.total_det;
    }
    for (std::size_t k : m.unmatched_gts) {
      missed_sum += gt_dtc[k];
      ++missed;
    }
  }
  for (auto& b : rep.buckets) {
    if (b.gt_count > 0) b.recall = static_cast<double>(b.gt_matched) / static_cast<double>(b.gt_count);
    if (b.det_count > 0) b.precision = static_cast<double>(b.det_true) / static_cast<double>(b.det_count);
  }
  if (missed > 0) rep.mean_missed_dtc = missed_sum / static_cast<double>(missed);
  return rep;
}

LabelSet filter_by_range(const LabelSet& labels, double min_range, double max_range) {
  LabelSet out;
  for (const auto& [f, boxes] : labels) {
    auto& dst = out[f];
    for (const auto& b : boxes) {
      const double r = bev_range(b);
      if (r >= min_range && r <= max_range) dst.push_back(b);
    }
  }
  return out;
}

EvalReport evaluate(const LabelSet& dets_in, const LabelSet& gts_in, std::span<const FrameInfo> frames,
                    const EvalParams& params, bool with_dtc) {
  LabelSet dets = dets_in, gts = gts_in;
  if (params.max_range_m) {
    dets = filter_by_range(dets_in, 0.0, *params.max_range_m);
    gts = filter_by_range(gts_in, 0.0, *params.max_range_m);
  }
  EvalReport rep;
  if (with_dtc && !params.iou_thresholds.empty()) {
    const EgoTrajectory traj = EgoTrajectory::from_frames(frames, params.ego_length_m, params.ego_width_m);
    rep = dtc_bucketed_report(dets, gts, frames, traj, params.bucket_edges, params.iou_thresholds.front(),
                              params.cap_m);
  }
  rep.total_gt = 0;
  rep.total_det = 0;
  for (const auto& [f, b] : gts) rep.total_gt += b.size();
  for (const auto& [f, b] : dets) rep.total_det += b.size();
  for (double t : params.iou_thresholds) rep.per_iou.push_back({t, average_precision_curve(dets, gts, t)});
  return rep;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %10s %10s %10s %10s\n", "IoU", "AP", "recall", "precision", "TP/GT");
  os << line;
  for (const auto& r : report.per_iou) {
    const double recall = r.ap.curve.empty() ? 0.0 : r.ap.curve.back().recall;
    const double precision = r.ap.curve.empty() ? 0.0 : r.ap.curve.back().precision;
    std::snprintf(line, sizeof line, "%-10.2f %10.4f %10.4f %10.4f %5zu/%-5zu\n", r.iou_thresh, r.ap.ap, recall,
                  precision, r.ap.num_tp, r.ap.num_gt);
    os << line;
  }
  if (report.has_dtc) {
    std::snprintf(line, sizeof line, "\nDTC buckets (IoU %.2f, cap %.1f m)\n", report.dtc_iou_thresh, report.cap_m);
    os << line;
    std::snprintf(line, sizeof line, "%-14s %8s %8s %10s %10s\n", "bucket [m]", "GT", "dets", "recall", "precision");
    os << line;
    for (const auto& b : report.buckets) {
      char range[32], rec[16], prec[16];
      std::snprintf(range, sizeof range, "[%.0f, %.0f)", b.lo, b.hi);
      if (b.recall) std::snprintf(rec, sizeof rec, "%.4f", *b.recall);
      else std::snprintf(rec, sizeof rec, "-");
      if (b.precision) std::snprintf(prec, sizeof prec, "%.4f", *b.precision);
      else std::snprintf(prec, sizeof prec, "-");
      std::snprintf(line, sizeof line, "%-14s %8zu %8zu %10s %10s\n", range, b.gt_count, b.det_count, rec, prec);
      os << line;
    }
    if (report.mean_missed_dtc) {
      std::snprintf(line, sizeof line, "mean DTC of missed GT: %.2f m\n", *report.mean_missed_dtc);
      os << line;
    }
  }
  return os.str();
}

double recall_in_range(const LabelSet& dets, const LabelSet& gts, double iou_thresh, double min_range,
                       double max_range) {
  std::size_t total = 0, hit = 0;
  for (const auto& [f, g] : gts) {
    const MatchResult m = match_detections(boxes_of(dets, f), g, iou_thresh);
    std::vector<char> matched(g.size(), 0);
    for (const auto& mm : m.matches) matched[mm.gt] = 1;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double r = bev_range(g[k]);
      if (r < min_range || r >= max_range) continue;
      ++total;
      if (matched[k]) ++hit;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

double precision_of(const LabelSet& dets, const LabelSet& gts, double iou_thresh) {
  std::size_t total = 0, tp = 0;
  for (const auto& [f, d] : dets) {
    const MatchResult m = match_detections(d, boxes_of(gts, f), iou_thresh);
    total += d.size();
    tp += m.matches.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(total);
}

}  // namespace lidisco
