#include "lidisco/detector.hpp"

#include <algorithm>
#include <sstream>

#include "lidisco/error.hpp"
#include "lidisco/ground.hpp"

namespace lidisco {

namespace {

// Inverted-CDF percentile: the smallest sample whose empirical CDF reaches p. Unlike the
// interpolated form it is unchanged when every sample is repeated the same number of times.
double nearest_rank_percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p / 100.0 * n - 1e-9)));
  return values[std::min(rank, values.size()) - 1];
}

bool is_multiple(double extent, double cell) {
  const double k = extent / cell;
  return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, k);
}

}  // namespace

int GridSpec::nx() const { return static_cast<int>(std::lround(2.0 * half_extent_x / cell_size)); }
int GridSpec::ny() const { return static_cast<int>(std::lround(2.0 * half_extent_y / cell_size)); }

bool GridSpec::is_valid() const {
  return cell_size > 0.0 && half_extent_x > 0.0 && half_extent_y > 0.0 && is_multiple(half_extent_x, cell_size) &&
         is_multiple(half_extent_y, cell_size);
}

std::string GridSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "{half_extent_x=" << half_extent_x << ", half_extent_y=" << half_extent_y << ", cell_size=" << cell_size
     << "}";
  return os.str();
}

BevGrid rasterize_bev(const PointCloud& cloud, const GridSpec& spec) {
  if (!spec.is_valid()) throw Error(ErrorKind::InvalidConfig, "invalid grid spec " + spec.describe());
  BevGrid g;
  g.spec = spec;
  g.nx = spec.nx();
  g.ny = spec.ny();
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(g.nx) * g.ny, 0);
  for (const auto& p : cloud.points) {
    const double fx = std::floor((p.x - spec.x0()) / spec.cell_size);
    const double fy = std::floor((p.y - spec.y0()) / spec.cell_size);
    if (fx < 0 || fy < 0 || fx >= g.nx || fy >= g.ny) continue;
    ++counts[static_cast<std::size_t>(fy) * g.nx + static_cast<std::size_t>(fx)];
  }
  g.values.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) g.values[i] = std::log1p(static_cast<double>(counts[i]));
  return g;
}

int yaw_bin(double yaw, int num_bins) {
  const double width = kPi / num_bins;
  const int k = static_cast<int>(std::floor((yaw + kPi / 2.0) / width));
  return std::clamp(k, 0, num_bins - 1);
}

double yaw_bin_center(int bin, int num_bins) { return -kPi / 2.0 + (bin + 0.5) * kPi / num_bins; }

double window_ncc(const BevGrid& grid, std::span<const double> weights, int patch_size, int ix, int iy) {
  const int h = patch_size / 2;
  if (ix - h < 0 || iy - h < 0 || ix + h >= grid.nx || iy + h >= grid.ny) return 0.0;
  double sum = 0.0, sumsq = 0.0, num = 0.0;
  for (int dy = -h; dy <= h; ++dy) {
    for (int dx = -h; dx <= h; ++dx) {
      const double g = grid.at(ix + dx, iy + dy);
      sum += g;
      sumsq += g * g;
      num += g * weights[static_cast<std::size_t>(dy + h) * patch_size + (dx + h)];
    }
  }
  const double n = static_cast<double>(patch_size) * patch_size;
  const double var = sumsq - sum * sum / n;
  if (sum <= 0.0 || var <= 1e-12 * sumsq) return 0.0;
  return std::clamp(num / std::sqrt(var), -1.0, 1.0);
}

namespace {

struct OccupiedCell {
  int ix;
  int iy;
  double value;
};

// Window sums gathered by scattering each occupied cell into every window centre that
// covers it. Cells are visited in row-major order, so a window's sums are accumulated
// in an order that depends only on the window's content, not on where it sits.
struct WindowStats {
  int nx = 0, ny = 0, half = 0, patch = 0;
  std::vector<OccupiedCell> occupied;
  std::vector<double> sum;
  std::vector<double> sumsq;

  WindowStats(const BevGrid& grid, int patch_size)
      : nx(grid.nx), ny(grid.ny), half(patch_size / 2), patch(patch_size) {
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix)
        if (grid.at(ix, iy) != 0.0) occupied.push_back({ix, iy, grid.at(ix, iy)});
    sum.assign(static_cast<std::size_t>(nx) * ny, 0.0);
    sumsq.assign(sum.size(), 0.0);
    for (const auto& c : occupied) {
      const double g2 = c.value * c.value;
      for (int dy = -half; dy <= half; ++dy) {
        const int py = c.iy - dy;
        if (py < half || py >= ny - half) continue;
        for (int dx = -half; dx <= half; ++dx) {
          const int px = c.ix - dx;
          if (px < half || px >= nx - half) continue;
          const std::size_t idx = static_cast<std::size_t>(py) * nx + px;
          sum[idx] += c.value;
          sumsq[idx] += g2;
        }
      }
    }
  }

  bool valid(int px, int py) const { return px >= half && py >= half && px < nx - half && py < ny - half; }

  /// NCC response map for one template; 0 outside valid windows and for flat windows.
  /// `scored` marks windows with non-zero variance.
  std::vector<double> response(std::span<const double> weights, std::vector<char>* scored) const {
    std::vector<double> num(sum.size(), 0.0);
    for (const auto& c : occupied) {
      for (int dy = -half; dy <= half; ++dy) {
        const int py = c.iy - dy;
        if (py < half || py >= ny - half) continue;
        const double* wrow = weights.data() + static_cast<std::size_t>(dy + half) * patch;
        double* nrow = num.data() + static_cast<std::size_t>(py) * nx;
        for (int dx = -half; dx <= half; ++dx) {
          const int px = c.ix - dx;
          if (px < half || px >= nx - half) continue;
          nrow[px] += c.value * wrow[dx + half];
        }
      }
    }
    const double n = static_cast<double>(patch) * patch;
    if (scored) scored->assign(sum.size(), 0);
    for (std::size_t i = 0; i < num.size(); ++i) {
      const double var = sumsq[i] - sum[i] * sum[i] / n;
      if (sum[i] <= 0.0 || var <= 1e-12 * sumsq[i]) {
        num[i] = 0.0;
        continue;
      }
      num[i] = std::clamp(num[i] / std::sqrt(var), -1.0, 1.0);
      if (scored) (*scored)[i] = 1;
    }
    return num;
  }
};

Vec2 cell_center(const GridSpec& spec, int ix, int iy) {
  return {spec.x0() + (ix + 0.5) * spec.cell_size, spec.y0() + (iy + 0.5) * spec.cell_size};
}

}  // namespace

std::vector<double> ncc_response(const BevGrid& grid, std::span<const double> weights, int patch_size) {
  return WindowStats(grid, patch_size).response(weights, nullptr);
}

TemplateModel train_templates(std::span<const BevGrid> grids, std::span<const std::vector<OrientedBox>> labels,
                              const DetectorParams& params, double near_range_m) {
  if (params.patch_size < 1 || params.patch_size % 2 == 0)
    throw Error(ErrorKind::InvalidConfig, "patch size must be odd");
  if (params.num_bins < 1) throw Error(ErrorKind::InvalidConfig, "num_bins must be >= 1");
  if (grids.size() != labels.size()) throw Error(ErrorKind::InvalidConfig, "one label list per grid required");

  const int P = params.patch_size;
  const int h = P / 2;
  const int K = params.num_bins;
  const std::size_t patch_len = static_cast<std::size_t>(P) * P;

  struct BinAccum {
    std::vector<double> sum;
    std::vector<double> ls, ws, hs;
    std::size_t count = 0;
  };
  std::vector<BinAccum> acc(K);
  struct Contributor {
    std::size_t grid;
    int bin;
    double cx, cy;
  };
  std::vector<Contributor> contributors;

  for (std::size_t gi = 0; gi < grids.size(); ++gi) {
    const BevGrid& g = grids[gi];
    if (!(g.spec == params.grid))
      throw Error(ErrorKind::SpecMismatch, "training grid " + g.spec.describe() + " vs " + params.grid.describe());
    const double cell = g.spec.cell_size;
    for (const auto& box : labels[gi]) {
      if (bev_range(box) > near_range_m) continue;
      const int k = yaw_bin(box.yaw, K);
      const double delta = box.yaw - yaw_bin_center(k, K);
      const double c = std::cos(delta), s = std::sin(delta);
      BinAccum& a = acc[k];
      if (a.sum.empty()) a.sum.assign(patch_len, 0.0);
      for (int v = -h; v <= h; ++v) {
        for (int u = -h; u <= h; ++u) {
          const double ox = u * cell, oy = v * cell;
          const double sx = box.cx + c * ox - s * oy;
          const double sy = box.cy + s * ox + c * oy;
          const double fx = std::floor((sx - g.spec.x0()) / cell);
          const double fy = std::floor((sy - g.spec.y0()) / cell);
          if (fx < 0 || fy < 0 || fx >= g.nx || fy >= g.ny) continue;
          a.sum[static_cast<std::size_t>(v + h) * P + (u + h)] += g.at(static_cast<int>(fx), static_cast<int>(fy));
        }
      }
      a.ls.push_back(box.length);
      a.ws.push_back(box.width);
      a.hs.push_back(box.height);
      ++a.count;
      contributors.push_back({gi, k, box.cx, box.cy});
    }
  }
  if (contributors.empty()) throw Error(ErrorKind::NoLabels, "no labels within near range for template training");

  TemplateModel model;
  model.spec = params.grid;
  model.num_bins = K;
  model.patch_size = P;
  model.nms_iou = params.nms_iou;
  std::vector<int> bin_slot(K, -1);
  for (int k = 0; k < K; ++k) {
    BinAccum& a = acc[k];
    if (a.count == 0) continue;
    std::vector<double> w(patch_len);
    double mean = 0.0;
    for (std::size_t i = 0; i < patch_len; ++i) {
      w[i] = a.sum[i] / static_cast<double>(a.count);
      mean += w[i];
    }
    mean /= static_cast<double>(patch_len);
    double norm = 0.0;
    for (double& x : w) {
      x -= mean;
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) continue;
    for (double& x : w) x /= norm;
    TemplateBin bin;
    bin.yaw = yaw_bin_center(k, K);
    bin.weights = std::move(w);
    bin.length = percentile(a.ls, 50.0);
    bin.width = percentile(a.ws, 50.0);
    bin.height = percentile(a.hs, 50.0);
    bin.contributors = a.count;
    bin_slot[k] = static_cast<int>(model.bins.size());
    model.bins.push_back(std::move(bin));
  }
  if (model.bins.empty()) throw Error(ErrorKind::NoLabels, "every training patch was empty");

  std::vector<double> self_response;
  for (const auto& c : contributors) {
    if (bin_slot[c.bin] < 0) continue;
    const BevGrid& g = grids[c.grid];
    const int ix = static_cast<int>(std::floor((c.cx - g.spec.x0()) / g.spec.cell_size));
    const int iy = static_cast<int>(std::floor((c.cy - g.spec.y0()) / g.spec.cell_size));
    if (ix - h < 0 || iy - h < 0 || ix + h >= g.nx || iy + h >= g.ny) continue;
    self_response.push_back(window_ncc(g, model.bins[bin_slot[c.bin]].weights, P, ix, iy));
  }
  const double theta = self_response.empty() ? 0.0 : nearest_rank_percentile(self_response, params.threshold_percentile);
  model.threshold = std::clamp(theta, -0.999, 0.999);
  return model;
}

std::vector<OrientedBox> detect(const BevGrid& grid, const TemplateModel& model) {
  if (!(grid.spec == model.spec))
    throw Error(ErrorKind::SpecMismatch,
                "grid spec " + grid.spec.describe() + " does not match model spec " + model.spec.describe());
  const WindowStats stats(grid, model.patch_size);
  std::vector<OrientedBox> candidates;
  std::vector<char> scored;
  for (const auto& bin : model.bins) {
    const std::vector<double> resp = stats.response(bin.weights, &scored);
    for (int iy = stats.half; iy < grid.ny - stats.half; ++iy) {
      for (int ix = stats.half; ix < grid.nx - stats.half; ++ix) {
        const std::size_t idx = static_cast<std::size_t>(iy) * grid.nx + ix;
        if (!scored[idx] || resp[idx] <= model.threshold) continue;
        const double r = resp[idx];
        bool is_max = true;
        for (int dy = -1; dy <= 1 && is_max; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int jx = ix + dx, jy = iy + dy;
            if (!stats.valid(jx, jy)) continue;
            const double q = resp[static_cast<std::size_t>(jy) * grid.nx + jx];
            // Plateaus resolve to their first cell in raster order.
            const bool earlier = dy < 0 || (dy == 0 && dx < 0);
            if (q > r || (earlier && q == r)) {
              is_max = false;
              break;
            }
          }
        }
        if (!is_max) continue;
        const Vec2 c = cell_center(grid.spec, ix, iy);
        OrientedBox b;
        b.cx = c.x;
        b.cy = c.y;
        b.length = bin.length;
        b.width = bin.width;
        b.height = bin.height;
        b.cz = bin.height / 2.0;
        b.yaw = bin.yaw;
        b.score = std::clamp((r + 1.0) / 2.0, 0.0, 1.0);
        candidates.push_back(canonicalize(b));
      }
    }
  }
  return nms(std::move(candidates), model.nms_iou);
}

std::vector<OrientedBox> nms(std::vector<OrientedBox> detections, double iou_thresh) {
  std::sort(detections.begin(), detections.end(), score_then_key_less);
  std::vector<OrientedBox> kept;
  for (const auto& d : detections) {
    bool keep = true;
    for (const auto& k : kept) {
      if (bev_iou(d, k) >= iou_thresh) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(d);
  }
  return kept;
}

}  // namespace lidisco
