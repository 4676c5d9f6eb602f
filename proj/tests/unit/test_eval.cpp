#include <doctest.h>

#include <functional>
#include <random>

#include "helpers.hpp"
#include "lidisco/dataio.hpp"
#include "lidisco/error.hpp"
#include "lidisco/eval.hpp"
#include "lidisco/synth.hpp"
#include "oracles.hpp"

using namespace lidisco;

namespace {

/// Ego driving +x at 1 m per frame from the origin.
std::vector<FrameInfo> straight_path(int n, const Pose& world = Pose::identity()) {
  std::vector<FrameInfo> out;
  for (int f = 0; f < n; ++f)
    out.push_back({static_cast<std::uint64_t>(f), 0.1 * f, world.compose(Pose::from_yaw(0.0, double(f), 0.0))});
  return out;
}

OrientedBox scored(OrientedBox b, double s) {
  b.score = s;
  return b;
}

/// Exhaustive one-to-one matching: most matches first, then largest total IoU.
std::pair<std::size_t, double> best_matching(const std::vector<OrientedBox>& d, const std::vector<OrientedBox>& g,
                                             double thresh) {
  std::pair<std::size_t, double> best{0, 0.0};
  std::vector<char> used(g.size(), 0);
  std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t i, std::size_t n, double s) {
    if (i == d.size()) {
      if (n > best.first || (n == best.first && s > best.second)) best = {n, s};
      return;
    }
    rec(i + 1, n, s);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double v = bev_iou(d[i], g[j]);
      if (used[j] || v < thresh) continue;
      used[j] = 1;
      rec(i + 1, n + 1, s + v);
      used[j] = 0;
    }
  };
  rec(0, 0, 0.0);
  return best;
}

}  // namespace

TEST_CASE("DTC analytic case and trivial cases") {
  const EgoTrajectory traj = EgoTrajectory::from_frames(straight_path(100));
  // Contact at 16.0 has zero overlap area, so the first colliding probe is 161 * 0.1; the
  // 1e-9 slack only absorbs the rounding of that product.
  CHECK(std::abs(distance_to_collision(traj, testutil::box(20, 0, 4, 2), 0, 100.0) - 16.0) <= 0.1 + 1e-9);
  CHECK(distance_to_collision(traj, testutil::box(2, 0.5, 4, 2), 0, 100.0) == 0.0);
  CHECK(distance_to_collision(traj, testutil::box(20, 50, 4, 2), 0, 100.0) == 100.0);
  CHECK(distance_to_collision(traj, testutil::box(60, 0, 4, 2), 0, 30.0) == 30.0);  // beyond the cap
  CHECK(distance_to_collision(traj, testutil::box(20, 0, 4, 2), 200, 100.0) == 100.0);
  // starting later along the path shortens the distance by the travelled arc
  CHECK(std::abs(distance_to_collision(traj, testutil::box(20, 0, 4, 2), 5, 100.0) - 11.0) <= 0.1 + 1e-9);
  // touching edges without positive overlap area is no collision
  CHECK(distance_to_collision(traj, testutil::box(20, 2.0, 4, 2), 0, 100.0) == 100.0);
}

TEST_CASE("DTC agrees with the 1 mm oracle within one arc step") {
  const EgoTrajectory traj = EgoTrajectory::from_frames(straight_path(60));
  std::mt19937_64 g(31);
  std::uniform_real_distribution<double> x(-3, 70), y(-4, 4), dim(0.5, 5), yaw(-kPi, kPi);
  for (int k = 0; k < 30; ++k) {
    const OrientedBox b = testutil::box(x(g), y(g), dim(g), dim(g), yaw(g));
    const double got = distance_to_collision(traj, b, 0, 50.0);
    const double ref = oracle::dtc_straight_mm(b, 0.0, 59.0, 4.0, 2.0, 50.0);
    CHECK(got >= ref - 1e-3);
    CHECK(got <= ref + kDtcArcStep + 1e-3);
    CHECK((got == 50.0) == (ref == 50.0));
  }
}

TEST_CASE("DTC is non-increasing as an on-path object approaches") {
  const EgoTrajectory traj = EgoTrajectory::from_frames(straight_path(100));
  double prev = 1e9;
  for (double cx = 70; cx >= -1; cx -= 0.37) {
    const double d = distance_to_collision(traj, testutil::box(cx, 0.4, 3, 1.5, 0.3), 0, 100.0);
    CHECK(d <= prev);
    prev = d;
  }
  CHECK(prev == 0.0);
}

TEST_CASE("DTC is invariant under a joint rigid transform") {
  std::mt19937_64 g(32);
  std::uniform_real_distribution<double> x(0, 60), y(-3, 3), ang(-kPi, kPi), t(-500, 500);
  const auto base = straight_path(80);
  for (int k = 0; k < 20; ++k) {
    const Pose T = Pose::from_yaw(ang(g), t(g), t(g), t(g));
    const OrientedBox b = testutil::box(x(g), y(g), 4, 2, ang(g));
    const double a = distance_to_collision(EgoTrajectory::from_frames(base), b, 0, 100.0);
    const double c = distance_to_collision(EgoTrajectory::from_frames(straight_path(80, T)), transform_box(T, b), 0, 100.0);
    CHECK(std::abs(a - c) <= kDtcArcStep + 1e-9);
  }
}

TEST_CASE("matching examples") {
  const std::vector<OrientedBox> gts{testutil::box(0, 0, 4, 2), testutil::box(3, 0, 4, 2)};
  const auto same = match_detections(gts, gts, 0.5);
  CHECK(same.matches.size() == 2);
  CHECK(match_detections(gts, std::vector<OrientedBox>{}, 0.3).unmatched_dets == std::vector<std::size_t>{0, 1});

  const std::vector<OrientedBox> dets{scored(testutil::box(0.2, 0, 4, 2), 0.9), scored(testutil::box(2.8, 0, 4, 2), 0.8),
                                      scored(testutil::box(1.5, 0, 4, 2), 0.7)};
  const MatchResult m = match_detections(dets, gts, 0.3);
  const auto ref = best_matching(dets, gts, 0.3);
  REQUIRE(m.matches.size() == ref.first);
  double total = 0;
  for (const auto& mm : m.matches) total += mm.iou;
  CHECK(total == doctest::Approx(ref.second).epsilon(1e-12));
  CHECK(m.unmatched_dets == std::vector<std::size_t>{2});
  CHECK(m.unmatched_gts.empty());
}

TEST_CASE("average precision examples") {
  std::vector<OrientedBox> gts{testutil::box(0, 0, 4, 2), testutil::box(10, 0, 4, 2), testutil::box(20, 0, 4, 2)};
  CHECK(average_precision(gts, gts, 0.5) == 1.0);
  CHECK(average_precision(std::vector<OrientedBox>{}, gts, 0.5) == 0.0);

  // score  tp  precision  recall
  // 0.9    1   1/1        1/3
  // 0.8    0   1/2        1/3
  // 0.7    1   2/3        2/3
  // 0.6    0   2/4        2/3
  // 0.5    1   3/5        3/3
  // envelope: 1 on (0,1/3], 2/3 on (1/3,2/3], 3/5 on (2/3,1]  ->  (1 + 2/3 + 3/5) / 3 = 34/45
  const std::vector<OrientedBox> dets{scored(gts[0], 0.9), scored(testutil::box(50, 0, 4, 2), 0.8), scored(gts[1], 0.7),
                                      scored(testutil::box(60, 0, 4, 2), 0.6), scored(gts[2], 0.5)};
  CHECK(average_precision(dets, gts, 0.5) == doctest::Approx(34.0 / 45.0).epsilon(1e-12));
  const LabelSet dl{{0, dets}}, gl{{0, gts}};
  const ApResult curve = average_precision_curve(dl, gl, 0.5);
  CHECK(curve.num_tp == 3);
  CHECK(curve.num_det == 5);
  CHECK(curve.num_gt == 3);
}

TEST_CASE("AP equals the naive oracle and is monotone in the IoU threshold") {
  std::mt19937_64 g(33);
  std::normal_distribution<double> jitter(0, 0.4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 30; ++rep) {
    LabelSet dets, gts;
    std::vector<std::vector<OrientedBox>> dv, gv;
    for (std::uint64_t f = 0; f < 4; ++f) {
      std::vector<OrientedBox> gf, df;
      for (int i = 0; i < 6; ++i) {
        OrientedBox b = testutil::box(8.0 * i, 5.0 * double(f), 4, 2, 0.1 * i);
        gf.push_back(b);
        if (u(g) < 0.8) {
          b.cx += jitter(g);
          b.cy += jitter(g);
          b.yaw += 0.3 * jitter(g);
          df.push_back(scored(canonicalize(b), u(g)));
        }
      }
      for (int i = 0; i < 2; ++i) df.push_back(scored(testutil::box(100 + 10 * i, 0, 4, 2), u(g)));
      gts[f] = gf;
      dets[f] = df;
      gv.push_back(gf);
      dv.push_back(df);
    }
    double prev = 2.0;
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double ap = average_precision(dets, gts, t);
      CHECK(ap == doctest::Approx(oracle::naive_ap(dv, gv, t)).epsilon(1e-12));
      CHECK(ap >= 0.0);
      CHECK(ap <= 1.0);
      CHECK(ap <= prev + 1e-12);
      prev = ap;
    }
  }
}

TEST_CASE("DTC buckets: on-path vs lateral at equal range") {
  const auto frames = straight_path(100);
  const EgoTrajectory traj = EgoTrajectory::from_frames(frames);
  const std::vector<double> edges{0, 20, 100};
  LabelSet gts;
  gts[0] = {testutil::box(15, 0, 4, 2), testutil::box(0, 15, 4, 2)};
  const EvalReport r = dtc_bucketed_report({}, gts, frames, traj, edges, 0.3, 100.0);
  REQUIRE(r.buckets.size() == 2);
  CHECK(r.buckets[0].gt_count == 1);
  CHECK(r.buckets[1].gt_count == 1);
  CHECK(r.buckets[0].recall == 0.0);
  CHECK_FALSE(r.buckets[0].precision.has_value());
  REQUIRE(r.mean_missed_dtc.has_value());
  CHECK(*r.mean_missed_dtc == doctest::Approx((11.0 + 100.0) / 2).epsilon(0.002));
  CHECK(dtc_bucket_index(edges, 100.0) == 1);
  CHECK(dtc_bucket_index(edges, 0.0) == 0);
  CHECK(dtc_bucket_index(edges, 19.999) == 0);
}

TEST_CASE("all ground truth at cap lands in the final bucket") {
  const auto frames = straight_path(50);
  const EgoTrajectory traj = EgoTrajectory::from_frames(frames);
  LabelSet gts;
  for (std::uint64_t f = 0; f < 50; ++f) gts[f] = {testutil::box(f + 10.0, 30, 4, 2), testutil::box(f + 5.0, -40, 4, 2)};
  const std::vector<double> edges{0, 10, 20, 40, 100};
  const EvalReport r = dtc_bucketed_report(gts, gts, frames, traj, edges, 0.5, 100.0);
  for (std::size_t i = 0; i + 1 < r.buckets.size(); ++i) CHECK(r.buckets[i].gt_count == 0);
  CHECK(r.buckets.back().gt_count == 100);
  CHECK(r.buckets.back().recall == 1.0);
}

TEST_CASE("full-recall detections on a synthetic scene give recall 1 in every bucket") {
  SceneConfig cfg;
  cfg.seed = 3;
  cfg.n_frames = 15;
  cfg.bearing_rad = {-0.3, 0.3};
  const SyntheticScene s = generate(cfg);
  const EgoTrajectory traj = EgoTrajectory::from_frames(s.sequence.frames);
  const std::vector<double> edges{0, 10, 20, 40, 100};
  LabelSet dets = s.truth.labels;
  const EvalReport r = dtc_bucketed_report(dets, s.truth.labels, s.sequence.frames, traj, edges, 0.5, 100.0);
  std::size_t gt_sum = 0, det_sum = 0;
  for (const auto& b : r.buckets) {
    if (b.gt_count) CHECK(b.recall == 1.0);
    if (b.det_count) CHECK(b.precision == 1.0);
    gt_sum += b.gt_count;
    det_sum += b.det_count;
  }
  CHECK(gt_sum == r.total_gt);
  CHECK(det_sum == r.total_det);
  CHECK(r.total_gt > 0);
  CHECK_FALSE(r.mean_missed_dtc.has_value());
}

TEST_CASE("invalid bucket edges") {
  const auto frames = straight_path(5);
  const EgoTrajectory traj = EgoTrajectory::from_frames(frames);
  auto kind = [&](std::vector<double> edges, double cap) {
    try {
      dtc_bucketed_report({}, {}, frames, traj, edges, 0.3, cap);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  CHECK(kind({0, 10, 10, 100}, 100) == ErrorKind::InvalidBuckets);
  CHECK(kind({0, 20, 10, 100}, 100) == ErrorKind::InvalidBuckets);
  CHECK(kind({0, 10, 50}, 100) == ErrorKind::InvalidBuckets);
  CHECK(kind({100}, 100) == ErrorKind::InvalidBuckets);
  CHECK(kind({-1, 100}, 100) == ErrorKind::InvalidBuckets);
}

TEST_CASE("evaluate, range filter and report serialization") {
  SceneConfig cfg;
  cfg.seed = 8;
  cfg.n_frames = 10;
  const SyntheticScene s = generate(cfg);
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(0, 1);
  LabelSet dets;
  for (const auto& [f, boxes] : s.truth.labels)
    for (const auto& b : boxes)
      if (u(g) < 0.7) dets[f].push_back(scored(b, u(g)));
  EvalParams p;
  const EvalReport r = evaluate(dets, s.truth.labels, s.sequence.frames, p, true);
  REQUIRE(r.per_iou.size() == 2);
  CHECK(r.per_iou[0].ap.ap <= 1.0);
  CHECK(r.per_iou[0].ap.ap >= r.per_iou[1].ap.ap);
  CHECK(r.has_dtc);
  CHECK(r.dtc_variant == kDtcVariant);
  const Json j = report_to_json(r);
  CHECK(j["per_iou"].size() == 2);
  CHECK(j["dtc"]["buckets"].size() == 4);
  for (const auto& b : r.buckets) {
    if (b.recall) CHECK((*b.recall >= 0.0 && *b.recall <= 1.0));
    if (b.precision) CHECK((*b.precision >= 0.0 && *b.precision <= 1.0));
  }
  CHECK_FALSE(format_report(r).empty());

  const LabelSet near = filter_by_range(s.truth.labels, 0.0, 30.0);
  for (const auto& [f, boxes] : near)
    for (const auto& b : boxes) CHECK(bev_range(b) <= 30.0);
  p.max_range_m = 30.0;
  const EvalReport rn = evaluate(dets, s.truth.labels, s.sequence.frames, p, false);
  CHECK_FALSE(rn.has_dtc);
  CHECK(rn.per_iou[0].ap.num_gt <= r.per_iou[0].ap.num_gt);

  CHECK(recall_in_range(s.truth.labels, s.truth.labels, 0.5, 0.0, 1e9) == 1.0);
  CHECK(recall_in_range({}, {}, 0.5, 0.0, 1e9) == 0.0);
  CHECK(precision_of(s.truth.labels, s.truth.labels, 0.5) == 1.0);
  CHECK(precision_of({}, s.truth.labels, 0.5) == 0.0);
}
