#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lidisco/core.hpp"

namespace lidisco {

struct TrackParams {
  double gate_m = 3.0;
  int max_misses = 2;
  std::size_t min_track_len = 4;
  double min_confirmed_overlap_iou = 0.0;  // reserved, not used by the tracker yet

  bool is_valid() const { return gate_m > 0.0 && min_track_len >= 1 && max_misses >= 0; }
};

enum class TrackState { Tentative, Confirmed, Dead };

struct Observation {
  std::uint64_t frame_id = 0;
  double timestamp = 0.0;
  OrientedBox box;  ///< world frame
  Vec2 ego;         ///< ego position in the world frame at this observation
};

struct Track {
  std::uint64_t id = 0;
  std::vector<Observation> observations;
  TrackState state = TrackState::Tentative;
  double vx = 0.0;
  double vy = 0.0;
  int misses = 0;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  ///< (row, col), ascending by row
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
  double total_cost = 0.0;
};

/// Hungarian assignment over a (possibly rectangular) cost matrix. Entries that are
/// non-finite or exceed `gate` are forbidden. Maximizes the number of allowed pairs,
/// then minimizes their total cost.
Assignment solve_gated_assignment(const std::vector<std::vector<double>>& cost, double gate);

/// Centroid-distance association of predicted track positions to detections.
Assignment associate(std::span<const Vec2> predicted_tracks, std::span<const Vec2> detections, double gate_m);

/// Runs the constant-velocity tracker over all frames. Boxes are lifted to the world
/// frame with each frame's pose. Returns every track ever created, ordered by id.
std::vector<Track> run_tracker(const LabelSet& labels, std::span<const FrameInfo> frames, const TrackParams& params);

/// Observations of tracks with at least min_track_len observations, mapped back to
/// per-frame ego frames. Every frame in `frames` gets an entry.
LabelSet temporal_filter(std::span<const Track> tracks, std::span<const FrameInfo> frames, const TrackParams& params);

/// Replaces every observation's dims with the per-track medians, keeping the box corner
/// nearest the ego fixed.
Track refine_track_size(const Track& track);

}  // namespace lidisco
