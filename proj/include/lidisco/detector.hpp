#pragma once

#include <span>
#include <string>
#include <vector>

#include "lidisco/core.hpp"

namespace lidisco {

/// BEV raster layout centred on the ego: x in [-half_extent_x, half_extent_x), same for y.
struct GridSpec {
  double half_extent_x = 80.0;
  double half_extent_y = 80.0;
  double cell_size = 0.25;

  int nx() const;
  int ny() const;
  double x0() const { return -half_extent_x; }
  double y0() const { return -half_extent_y; }
  bool is_valid() const;
  std::string describe() const;

  bool operator==(const GridSpec&) const = default;
};

/// Dense log(1 + count) occupancy raster, row-major (index iy * nx + ix).
struct BevGrid {
  GridSpec spec;
  int nx = 0;
  int ny = 0;
  std::vector<double> values;

  double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * nx + ix]; }
};

struct TemplateBin {
  double yaw = 0.0;              ///< bin centre
  std::vector<double> weights;   ///< patch_size^2, row-major, zero mean, unit L2 norm
  double length = 0.0;           ///< nominal dims: medians over contributing labels
  double width = 0.0;
  double height = 0.0;
  std::size_t contributors = 0;
};

struct TemplateModel {
  GridSpec spec;
  int num_bins = 8;    ///< K, bins evenly tile [-pi/2, pi/2)
  int patch_size = 33; ///< P, odd
  std::vector<TemplateBin> bins;  ///< only bins that had contributors
  double threshold = 0.0;         ///< correlation threshold in (-1, 1)
  double nms_iou = 0.2;
};

struct DetectorParams {
  GridSpec grid;
  int num_bins = 8;
  int patch_size = 33;
  double threshold_percentile = 10.0;
  double nms_iou = 0.2;
};

BevGrid rasterize_bev(const PointCloud& cloud, const GridSpec& spec);

/// Yaw bin of a canonical yaw in [-pi/2, pi/2) and the bin's centre.
int yaw_bin(double yaw, int num_bins);
double yaw_bin_center(int bin, int num_bins);

/// Builds a template bank from labels within `near_range_m` of the ego.
/// `labels[i]` are the boxes for `grids[i]`. Throws Error(NoLabels) when none qualify.
TemplateModel train_templates(std::span<const BevGrid> grids, std::span<const std::vector<OrientedBox>> labels,
                              const DetectorParams& params, double near_range_m);

/// Normalized cross-correlation of `weights` against the P x P window centred at (ix, iy),
/// evaluated directly. Zero-variance or out-of-bounds windows score 0.
double window_ncc(const BevGrid& grid, std::span<const double> weights, int patch_size, int ix, int iy);

/// Dense NCC response of one template over every valid window centre; other cells are 0.
std::vector<double> ncc_response(const BevGrid& grid, std::span<const double> weights, int patch_size);

/// Template-bank detection over the full grid. Throws Error(SpecMismatch) when the grid
/// and model specs differ. Output sorted by (score desc, canonical key).
std::vector<OrientedBox> detect(const BevGrid& grid, const TemplateModel& model);

/// Greedy non-maximum suppression in (score desc, canonical key) order.
std::vector<OrientedBox> nms(std::vector<OrientedBox> detections, double iou_thresh);

}  // namespace lidisco
