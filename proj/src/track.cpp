#include "lidisco/track.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "lidisco/ground.hpp"

namespace lidisco {

namespace {

// Shortest-augmenting-path Hungarian method with potentials on a square matrix.
// Returns row_to_col.
std::vector<std::size_t> hungarian_square(const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

Assignment solve_gated_assignment(const std::vector<std::vector<double>>& cost, double gate) {
  const std::size_t rows = cost.size();
  const std::size_t cols = rows == 0 ? 0 : cost[0].size();
  Assignment out;
  auto allowed = [&](std::size_t r, std::size_t c) { return std::isfinite(cost[r][c]) && cost[r][c] <= gate; };

  double sum_allowed = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (allowed(r, c)) sum_allowed += std::abs(cost[r][c]);

  if (rows > 0 && cols > 0) {
    // Forbidden and padding cells share one penalty larger than any allowed total,
    // so every extra allowed pair beats any saving in cost.
    const double penalty = 2.0 * sum_allowed + 1.0;
    const std::size_t n = std::max(rows, cols);
    std::vector<std::vector<double>> a(n, std::vector<double>(n, penalty));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        if (allowed(r, c)) a[r][c] = cost[r][c];
    const auto row_to_col = hungarian_square(a);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t c = row_to_col[r];
      if (c < cols && allowed(r, c)) {
        out.matches.emplace_back(r, c);
        out.total_cost += cost[r][c];
      }
    }
  }

  std::vector<char> row_used(rows, 0), col_used(cols, 0);
  for (auto [r, c] : out.matches) {
    row_used[r] = 1;
    col_used[c] = 1;
  }
  for (std::size_t r = 0; r < rows; ++r)
    if (!row_used[r]) out.unmatched_rows.push_back(r);
  for (std::size_t c = 0; c < cols; ++c)
    if (!col_used[c]) out.unmatched_cols.push_back(c);
  return out;
}

Assignment associate(std::span<const Vec2> predicted_tracks, std::span<const Vec2> detections, double gate_m) {
  if (predicted_tracks.empty() || detections.empty()) {
    Assignment out;
    for (std::size_t r = 0; r < predicted_tracks.size(); ++r) out.unmatched_rows.push_back(r);
    for (std::size_t c = 0; c < detections.size(); ++c) out.unmatched_cols.push_back(c);
    return out;
  }
  std::vector<std::vector<double>> cost(predicted_tracks.size(), std::vector<double>(detections.size()));
  for (std::size_t r = 0; r < predicted_tracks.size(); ++r)
    for (std::size_t c = 0; c < detections.size(); ++c) {
      const Vec2 d = predicted_tracks[r] - detections[c];
      cost[r][c] = std::hypot(d.x, d.y);
    }
  return solve_gated_assignment(cost, gate_m);
}

namespace {

void update_velocity(Track& t) {
  const auto& obs = t.observations;
  if (obs.size() < 2) return;
  const std::size_t first = obs.size() >= 3 ? obs.size() - 3 : 0;
  const auto& a = obs[first];
  const auto& b = obs.back();
  const double dt = b.timestamp - a.timestamp;
  if (dt <= 0.0) return;
  t.vx = (b.box.cx - a.box.cx) / dt;
  t.vy = (b.box.cy - a.box.cy) / dt;
}

}  // namespace

std::vector<Track> run_tracker(const LabelSet& labels, std::span<const FrameInfo> frames, const TrackParams& params) {
  std::vector<Track> tracks;
  std::uint64_t next_id = 0;

  for (const auto& frame : frames) {
    std::vector<OrientedBox> dets;
    if (auto it = labels.find(frame.frame_id); it != labels.end()) dets = it->second;
    std::sort(dets.begin(), dets.end(),
              [](const OrientedBox& a, const OrientedBox& b) { return canonical_key(a) < canonical_key(b); });

    std::vector<OrientedBox> world;
    std::vector<Vec2> det_xy;
    for (const auto& d : dets) {
      world.push_back(transform_box(frame.pose, d));
      det_xy.push_back({world.back().cx, world.back().cy});
    }

    std::vector<std::size_t> live;
    std::vector<Vec2> predicted;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      if (tracks[i].state == TrackState::Dead) continue;
      const auto& last = tracks[i].observations.back();
      const double dt = frame.timestamp - last.timestamp;
      live.push_back(i);
      predicted.push_back({last.box.cx + tracks[i].vx * dt, last.box.cy + tracks[i].vy * dt});
    }

    const Assignment asg = associate(predicted, det_xy, params.gate_m);
    const Vec2 ego{frame.pose.translation[0], frame.pose.translation[1]};

    for (auto [r, c] : asg.matches) {
      Track& t = tracks[live[r]];
      t.observations.push_back({frame.frame_id, frame.timestamp, world[c], ego});
      t.misses = 0;
      update_velocity(t);
      if (t.observations.size() >= params.min_track_len) t.state = TrackState::Confirmed;
    }
    for (std::size_t r : asg.unmatched_rows) {
      Track& t = tracks[live[r]];
      if (++t.misses > params.max_misses) t.state = TrackState::Dead;
    }
    for (std::size_t c : asg.unmatched_cols) {
      Track t;
      t.id = next_id++;
      t.observations.push_back({frame.frame_id, frame.timestamp, world[c], ego});
      if (t.observations.size() >= params.min_track_len) t.state = TrackState::Confirmed;
      tracks.push_back(std::move(t));
    }
  }
  return tracks;
}

LabelSet temporal_filter(std::span<const Track> tracks, std::span<const FrameInfo> frames, const TrackParams& params) {
  LabelSet out;
  std::unordered_map<std::uint64_t, Pose> ego_from_world;
  for (const auto& f : frames) {
    out[f.frame_id];
    ego_from_world[f.frame_id] = f.pose.inverse();
  }
  std::vector<const Track*> kept;
  for (const auto& t : tracks)
    if (t.observations.size() >= params.min_track_len) kept.push_back(&t);
  std::sort(kept.begin(), kept.end(), [](const Track* a, const Track* b) { return a->id < b->id; });

  for (const Track* t : kept) {
    const double score =
        std::min(1.0, static_cast<double>(t->observations.size()) / (2.0 * static_cast<double>(params.min_track_len)));
    for (const auto& obs : t->observations) {
      auto it = ego_from_world.find(obs.frame_id);
      if (it == ego_from_world.end()) continue;
      OrientedBox b = transform_box(it->second, obs.box);
      b.track_id = t->id;
      b.score = score;
      out[obs.frame_id].push_back(b);
    }
  }
  return out;
}

Track refine_track_size(const Track& track) {
  Track out = track;
  if (track.observations.empty()) return out;
  std::vector<double> ls, ws, hs;
  for (const auto& o : track.observations) {
    ls.push_back(o.box.length);
    ws.push_back(o.box.width);
    hs.push_back(o.box.height);
  }
  const double L = percentile(ls, 50.0);
  const double W = percentile(ws, 50.0);
  const double H = percentile(hs, 50.0);

  for (auto& o : out.observations) {
    OrientedBox& b = o.box;
    if (b.length == L && b.width == W && b.height == H) continue;
    const Vec2 u{std::cos(b.yaw), std::sin(b.yaw)};
    const Vec2 n{-u.y, u.x};
    const Vec2 c{b.cx, b.cy};
    double best = std::numeric_limits<double>::infinity();
    double sl = 1.0, sw = 1.0;
    for (double a : {-1.0, 1.0}) {
      for (double w : {-1.0, 1.0}) {
        const Vec2 corner = c + u * (a * b.length / 2.0) + n * (w * b.width / 2.0);
        const Vec2 d = corner - o.ego;
        const double dist = dot(d, d);
        if (dist < best) {
          best = dist;
          sl = a;
          sw = w;
        }
      }
    }
    const Vec2 corner = c + u * (sl * b.length / 2.0) + n * (sw * b.width / 2.0);
    const Vec2 nc = corner - u * (sl * L / 2.0) - n * (sw * W / 2.0);
    const double bottom = b.cz - b.height / 2.0;
    b.cx = nc.x;
    b.cy = nc.y;
    b.length = L;
    b.width = W;
    b.height = H;
    b.cz = bottom + H / 2.0;
  }
  return out;
}

}  // namespace lidisco
