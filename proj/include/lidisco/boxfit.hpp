#pragma once

#include <span>
#include <string>

#include "lidisco/core.hpp"

namespace lidisco {

struct ConvexHull {
  Polygon2 polygon;
  /// Fewer than three non-collinear input points; `polygon` then holds 1 or 2 vertices.
  bool degenerate = false;
};

/// Andrew's monotone chain. CCW, starts at the lexicographically smallest vertex,
/// collinear boundary points dropped.
ConvexHull convex_hull_2d(std::span<const Vec2> points);

enum class BoxFitCriterion {
  MinArea,    ///< rotating calipers over the hull
  Closeness,  ///< L-shape search: maximise point closeness to the nearest rectangle edge
};

struct BoxFitParams {
  double w_min = 0.2;  ///< width floor for degenerate clusters, m
  double h_min = 0.5;  ///< height floor, m
  BoxFitCriterion criterion = BoxFitCriterion::MinArea;
};

const char* to_string(BoxFitCriterion c);
BoxFitCriterion box_fit_criterion_from_string(const std::string& s);

struct Rectangle2 {
  Vec2 center;
  double length = 0.0;  ///< extent along `yaw`
  double width = 0.0;
  double yaw = 0.0;
  double area() const { return length * width; }
};

/// Minimum-area enclosing rectangle of a convex CCW polygon with >= 3 vertices,
/// via rotating calipers over the hull edges.
Rectangle2 min_area_rectangle(const Polygon2& hull);

/// Bounding rectangle at the heading that maximises sum_i 1 / max(d_i, 0.01), d_i being
/// the distance of point i to its nearest rectangle edge. Headings are searched on a
/// 1 degree grid over [0, pi/2), then refined in 0.02 degree steps around the best.
Rectangle2 closeness_rectangle(std::span<const Vec2> points);

/// Oriented box around a cluster: BEV rectangle (per `params.criterion`) BEV rectangle plus z extent.
/// Throws Error(EmptyCluster) on empty input.
OrientedBox fit_oriented_box(std::span<const Point3> points, const BoxFitParams& params = {});

}  // namespace lidisco
