#pragma once

// SLIC superpixels: grid-seeded local k-means in (colour, position) space with
// a connectivity clean-up pass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "dglseg/error.hpp"
#include "dglseg/image.hpp"

namespace dglseg {

struct SlicParams {
  int superpixels = 500;     // target K
  double compactness = 10.0;
  int iterations = 10;
  // Colour components are compared on a 0..color_scale axis so that the
  // compactness keeps its customary CIELAB-like meaning for [0,1] features.
  double color_scale = 100.0;
};

/// Per-pixel superpixel ids in [0, count) with member lists (row-major linear indices).
class SuperpixelPartition {
 public:
  SuperpixelPartition() = default;

  SuperpixelPartition(int width, int height, std::vector<int> assignment)
      : width_(width), height_(height), assignment_(std::move(assignment)) {
    require(width > 0 && height > 0, ErrorKind::Input, "partition dimensions must be positive");
    require(assignment_.size() == static_cast<std::size_t>(width) * height, ErrorKind::Input,
            "assignment does not cover the image");
    int count = 0;
    for (int id : assignment_) {
      require(id >= 0, ErrorKind::Input, "superpixel ids must be non-negative");
      count = std::max(count, id + 1);
    }
    members_.resize(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
      members_[assignment_[i]].push_back(static_cast<std::uint32_t>(i));
    }
    for (const auto& m : members_) {
      require(!m.empty(), ErrorKind::Input, "superpixel ids must be contiguous");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int count() const noexcept { return static_cast<int>(members_.size()); }
  const std::vector<int>& assignment() const noexcept { return assignment_; }
  int id_at(std::size_t linear) const { return assignment_[linear]; }
  const std::vector<std::uint32_t>& members(int k) const { return members_.at(k); }
  const std::vector<std::vector<std::uint32_t>>& member_lists() const noexcept { return members_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<int> assignment_;
  std::vector<std::vector<std::uint32_t>> members_;
};

namespace detail {

struct SlicCenter {
  std::vector<double> color;
  double row = 0;
  double col = 0;
};

inline double squared_color_distance(std::span<const double> a, std::span<const double> b,
                                     double scale) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = (a[k] - b[k]) * scale;
    d += diff * diff;
  }
  return d;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  std::size_t& weight(std::size_t root) { return size_[root]; }
  // Merges `from` into `into`; both must be roots.
  void attach(std::size_t from, std::size_t into) {
    parent_[from] = into;
    size_[into] += size_[from];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

/// Splits every label into 4-connected components; components smaller than
/// `min_size` are merged into their largest adjacent component. Ids are
/// re-indexed contiguously in raster order of first appearance.
inline std::vector<int> enforce_connectivity(int width, int height, const std::vector<int>& labels,
                                             std::size_t min_size) {
  const std::size_t n = labels.size();
  std::vector<int> component(n, -1);
  std::vector<std::size_t> comp_size;
  std::vector<std::uint32_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] != -1) continue;
    const int id = static_cast<int>(comp_size.size());
    std::size_t size = 0;
    component[start] = id;
    stack.push_back(static_cast<std::uint32_t>(start));
    while (!stack.empty()) {
      const std::uint32_t p = stack.back();
      stack.pop_back();
      ++size;
      const int r = static_cast<int>(p / width), c = static_cast<int>(p % width);
      const int nr[4] = {r - 1, r + 1, r, r};
      const int nc[4] = {c, c, c - 1, c + 1};
      for (int k = 0; k < 4; ++k) {
        if (nr[k] < 0 || nc[k] < 0 || nr[k] >= height || nc[k] >= width) continue;
        const std::size_t q = static_cast<std::size_t>(nr[k]) * width + nc[k];
        if (component[q] == -1 && labels[q] == labels[p]) {
          component[q] = id;
          stack.push_back(static_cast<std::uint32_t>(q));
        }
      }
    }
    comp_size.push_back(size);
  }

  const std::size_t comps = comp_size.size();
  std::vector<std::vector<std::size_t>> adjacent(comps);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * width + c;
      if (c + 1 < width && component[p] != component[p + 1]) {
        adjacent[component[p]].push_back(component[p + 1]);
        adjacent[component[p + 1]].push_back(component[p]);
      }
      if (r + 1 < height && component[p] != component[p + width]) {
        adjacent[component[p]].push_back(component[p + width]);
        adjacent[component[p + width]].push_back(component[p]);
      }
    }
  }
  for (auto& a : adjacent) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  DisjointSets sets(comps);
  for (std::size_t k = 0; k < comps; ++k) sets.weight(k) = comp_size[k];
  std::vector<std::size_t> order(comps);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return comp_size[a] < comp_size[b]; });
  for (std::size_t k : order) {
    const std::size_t root = sets.find(k);
    if (sets.weight(root) >= min_size) continue;
    std::size_t best = root;
    std::size_t best_size = 0;
    // Neighbours of the merged group: scan adjacency of every original member is
    // costly, so scan the component's own adjacency plus the root's.
    for (std::size_t src : {k, root}) {
      for (std::size_t nb : adjacent[src]) {
        const std::size_t nroot = sets.find(nb);
        if (nroot == root) continue;
        const std::size_t w = sets.weight(nroot);
        if (w > best_size || (w == best_size && nroot < best)) {
          best = nroot;
          best_size = w;
        }
      }
    }
    if (best == root) continue;
    sets.attach(root, best);
    // Carry adjacency so later merges through this group see its neighbours.
    adjacent[best].insert(adjacent[best].end(), adjacent[root].begin(), adjacent[root].end());
    if (root != k) adjacent[best].insert(adjacent[best].end(), adjacent[k].begin(), adjacent[k].end());
  }

  std::vector<int> remap(comps, -1);
  std::vector<int> out(n);
  int next = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t root = sets.find(static_cast<std::size_t>(component[p]));
    if (remap[root] == -1) remap[root] = next++;
    out[p] = remap[root];
  }
  return out;
}

}  // namespace detail

/// SLIC over an arbitrary-channel feature image (components in [0,1]).
inline SuperpixelPartition slic(const Image& features, const SlicParams& params) {
  require(!features.empty(), ErrorKind::Input, "cannot compute superpixels of an empty image");
  const int width = features.width();
  const int height = features.height();
  const std::size_t n = features.pixel_count();
  require(params.superpixels >= 1, ErrorKind::Input, "superpixel count must be at least 1");
  require(static_cast<std::size_t>(params.superpixels) <= n, ErrorKind::Input,
          "more superpixels requested than the image has pixels");
  require(params.compactness > 0, ErrorKind::Input, "compactness must be positive");
  require(params.iterations >= 1, ErrorKind::Input, "SLIC needs at least one iteration");

  const double step = std::sqrt(static_cast<double>(n) / params.superpixels);
  const int grid_cols = std::max(1, static_cast<int>(std::lround(width / step)));
  const int grid_rows = std::max(1, static_cast<int>(std::lround(height / step)));
  const double step_c = static_cast<double>(width) / grid_cols;
  const double step_r = static_cast<double>(height) / grid_rows;
  const int channels = features.channels();
  const double scale = params.color_scale;

  auto gradient = [&](int r, int c) {
    if (r <= 0 || c <= 0 || r >= height - 1 || c >= width - 1) {
      return std::numeric_limits<double>::infinity();
    }
    return detail::squared_color_distance(features.at(Pixel{r, c + 1}), features.at(Pixel{r, c - 1}), 1.0) +
           detail::squared_color_distance(features.at(Pixel{r + 1, c}), features.at(Pixel{r - 1, c}), 1.0);
  };

  std::vector<detail::SlicCenter> centers;
  centers.reserve(static_cast<std::size_t>(grid_cols) * grid_rows);
  for (int gr = 0; gr < grid_rows; ++gr) {
    for (int gc = 0; gc < grid_cols; ++gc) {
      int r = std::min(height - 1, static_cast<int>((gr + 0.5) * step_r));
      int c = std::min(width - 1, static_cast<int>((gc + 0.5) * step_c));
      double best = gradient(r, c);
      int br = r, bc = c;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const double g = gradient(r + dr, c + dc);
          if (g < best) {
            best = g;
            br = r + dr;
            bc = c + dc;
          }
        }
      }
      const auto px = features.at(Pixel{br, bc});
      centers.push_back({std::vector<double>(px.begin(), px.end()), static_cast<double>(br),
                         static_cast<double>(bc)});
    }
  }

  const double spatial_weight = (params.compactness / step) * (params.compactness / step);
  const int window = static_cast<int>(std::ceil(step));
  std::vector<int> labels(n, -1);
  std::vector<double> distance(n);
  std::vector<double> sums;
  std::vector<std::size_t> counts;

  for (int iter = 0; iter < params.iterations; ++iter) {
    std::fill(distance.begin(), distance.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& ctr = centers[k];
      const int r0 = std::max(0, static_cast<int>(ctr.row) - window);
      const int r1 = std::min(height - 1, static_cast<int>(ctr.row) + window);
      const int c0 = std::max(0, static_cast<int>(ctr.col) - window);
      const int c1 = std::min(width - 1, static_cast<int>(ctr.col) + window);
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          const std::size_t p = static_cast<std::size_t>(r) * width + c;
          const double dr = r - ctr.row, dc = c - ctr.col;
          const double d = detail::squared_color_distance(features.at(p), ctr.color, scale) +
                           (dr * dr + dc * dc) * spatial_weight;
          if (d < distance[p]) {
            distance[p] = d;
            labels[p] = static_cast<int>(k);
          }
        }
      }
    }

    sums.assign(centers.size() * (channels + 2), 0.0);
    counts.assign(centers.size(), 0);
    for (std::size_t p = 0; p < n; ++p) {
      if (labels[p] < 0) continue;
      const std::size_t k = static_cast<std::size_t>(labels[p]);
      double* s = &sums[k * (channels + 2)];
      const auto px = features.at(p);
      for (int ch = 0; ch < channels; ++ch) s[ch] += px[ch];
      s[channels] += static_cast<double>(p / width);
      s[channels + 1] += static_cast<double>(p % width);
      ++counts[k];
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[k]);
      const double* s = &sums[k * (channels + 2)];
      for (int ch = 0; ch < channels; ++ch) centers[k].color[ch] = s[ch] * inv;
      centers[k].row = s[channels] * inv;
      centers[k].col = s[channels + 1] * inv;
    }
  }

  const auto min_size = static_cast<std::size_t>(
      std::max(1.0, (static_cast<double>(n) / params.superpixels) / 4.0));
  return SuperpixelPartition(width, height,
                             detail::enforce_connectivity(width, height, labels, min_size));
}

/// Fraction of ground-truth boundary pixels lying within `tolerance` pixels
/// (Chebyshev distance) of a superpixel boundary pixel. A pixel is a boundary
/// pixel when a 4-neighbour carries a different id; unlabelled (0) ground-truth
/// pixels are ignored. 1 when the ground truth has no boundary.
inline double boundary_recall(const SuperpixelPartition& partition, const std::vector<int>& gt,
                              int tolerance = 2) {
  const int w = partition.width(), h = partition.height();
  require(gt.size() == partition.assignment().size(), ErrorKind::Input,
          "ground truth does not match the partition size");
  require(tolerance >= 0, ErrorKind::Domain, "boundary tolerance must be >= 0");
  const auto& ids = partition.assignment();
  auto is_edge = [&](const std::vector<int>& v, int r, int c, bool skip_zero) {
    const std::size_t p = static_cast<std::size_t>(r) * w + c;
    if (skip_zero && v[p] == 0) return false;
    const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const int nr = r + dr[k], nc = c + dc[k];
      if (nr < 0 || nc < 0 || nr >= h || nc >= w) continue;
      const int other = v[static_cast<std::size_t>(nr) * w + nc];
      if (skip_zero && other == 0) continue;
      if (other != v[p]) return true;
    }
    return false;
  };
  std::vector<char> sp_edge(ids.size(), 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) sp_edge[static_cast<std::size_t>(r) * w + c] = is_edge(ids, r, c, false);
  std::size_t total = 0, hit = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!is_edge(gt, r, c, true)) continue;
      ++total;
      bool found = false;
      for (int rr = std::max(0, r - tolerance); rr <= std::min(h - 1, r + tolerance) && !found; ++rr)
        for (int cc = std::max(0, c - tolerance); cc <= std::min(w - 1, c + tolerance) && !found; ++cc)
          found = sp_edge[static_cast<std::size_t>(rr) * w + cc] != 0;
      hit += found;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace dglseg
