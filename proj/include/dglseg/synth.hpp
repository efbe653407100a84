#pragma once

// Synthetic images following the piecewise i.i.d. model: every region draws its
// pixel colours independently from its own discrete distribution over a palette.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dglseg/color_quantize.hpp"
#include "dglseg/error.hpp"
#include "dglseg/image.hpp"
#include "dglseg/input_sim.hpp"

namespace dglseg {

struct SyntheticScene {
  Image image;
  RegionAnnotation annotation;
  std::vector<Rgb> palette;
  std::vector<std::vector<double>> distributions;  // one per region, over palette entries
};

/// Palette of 8-bit-exact colours with pairwise distinct hue/saturation cells
/// (8 hues x 3 saturations, full value).
inline std::vector<Rgb> synthetic_palette() {
  std::vector<Rgb> palette;
  for (int h = 0; h < 8; ++h) {
    for (double s : {1.0, 0.7, 0.4}) {
      Rgb c = hsv_to_rgb({h / 8.0 + 1.0 / 32.0, s, 1.0});
      for (double& v : c) v = std::round(v * 255.0) / 255.0;
      palette.push_back(c);
    }
  }
  return palette;
}

/// Region i gets (1 - v) * uniform + v * uniform-on-its-own-block, with disjoint
/// blocks, so every pair of regions is exactly v apart in total variation.
inline std::vector<std::vector<double>> separated_distributions(int regions, double separation,
                                                                std::size_t palette_size) {
  require(regions >= 2, ErrorKind::Input, "need at least two regions");
  require(separation > 0 && separation <= 1, ErrorKind::Input, "separation must lie in (0,1]");
  const std::size_t block = palette_size / static_cast<std::size_t>(regions);
  require(block >= 1, ErrorKind::Input, "palette too small for this many regions");
  const std::size_t used = block * static_cast<std::size_t>(regions);
  std::vector<std::vector<double>> out(regions, std::vector<double>(palette_size, 0.0));
  for (int i = 0; i < regions; ++i) {
    for (std::size_t q = 0; q < used; ++q) out[i][q] = (1.0 - separation) / static_cast<double>(used);
    for (std::size_t q = i * block; q < (i + 1) * block; ++q) out[i][q] += separation / static_cast<double>(block);
  }
  return out;
}

namespace detail {

inline bool inside_ellipse(double r, double c, double cr, double cc, double rr, double rc) {
  const double a = (r - cr) / rr, b = (c - cc) / rc;
  return a * a + b * b <= 1.0;
}

inline bool inside_diamond(double r, double c, double cr, double cc, double half) {
  return std::abs(r - cr) + std::abs(c - cc) <= half;
}

}  // namespace detail

/// Region layout: for M = 4 the four-region arrangement with one two-component
/// region (ellipse top-left = 1, diamond top-right and ellipse bottom-left = 2,
/// rectangle bottom-right = 3, background = 4), jittered by the seed. Other M:
/// background plus M - 1 random ellipses/rectangles.
inline std::vector<int> synthetic_layout(int regions, int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> jitter(-0.04, 0.04);
  std::vector<int> labels(static_cast<std::size_t>(width) * height, regions);
  const double H = height, W = width;
  auto paint = [&](int label, auto&& inside) {
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        if (inside(r + 0.5, c + 0.5)) labels[static_cast<std::size_t>(r) * width + c] = label;
  };
  if (regions == 4) {
    const double e1r = H * (0.29 + jitter(rng)), e1c = W * (0.24 + jitter(rng));
    const double d_r = H * (0.23 + jitter(rng)), d_c = W * (0.75 + jitter(rng));
    const double e2r = H * (0.78 + jitter(rng)), e2c = W * (0.31 + jitter(rng));
    const double rr0 = H * (0.55 + jitter(rng)), rc0 = W * (0.65 + jitter(rng));
    paint(1, [&](double r, double c) { return detail::inside_ellipse(r, c, e1r, e1c, H * 0.22, W * 0.14); });
    paint(2, [&](double r, double c) { return detail::inside_diamond(r, c, d_r, d_c, std::min(H, W) * 0.17); });
    paint(2, [&](double r, double c) { return detail::inside_ellipse(r, c, e2r, e2c, H * 0.13, W * 0.24); });
    paint(3, [&](double r, double c) { return r >= rr0 && r <= H * 0.97 && c >= rc0 && c <= W * 0.97; });
    return labels;
  }
  std::uniform_real_distribution<double> pos(0.2, 0.8), size(0.12, 0.22);
  for (int i = 1; i < regions; ++i) {
    const double cr = H * pos(rng), cc = W * pos(rng);
    const double hr = H * size(rng), hc = W * size(rng);
    if (i % 2) {
      paint(i, [&](double r, double c) { return detail::inside_ellipse(r, c, cr, cc, hr, hc); });
    } else {
      paint(i, [&](double r, double c) { return std::abs(r - cr) <= hr && std::abs(c - cc) <= hc; });
    }
  }
  return labels;
}

/// Draws a synthetic image with exact ground truth. For M != 4 a shape can be
/// hidden by later ones; labels are then remapped to stay contiguous and the
/// scene carries fewer regions.
inline SyntheticScene generate_synthetic(int regions, int width, int height, std::uint64_t seed,
                                         double separation) {
  require(regions >= 2, ErrorKind::Input, "synthetic scenes need M >= 2");
  require(separation > 0 && separation <= 1, ErrorKind::Input, "separation must lie in (0,1]");
  SyntheticScene scene;
  scene.palette = synthetic_palette();
  scene.distributions = separated_distributions(regions, separation, scene.palette.size());
  scene.annotation = RegionAnnotation::from_labels(width, height, synthetic_layout(regions, width, height, seed));

  // Colour draws use a stream independent of the layout stream.
  Rng rng(seed * 0x9E3779B97F4A7C15ull + 1);
  std::vector<std::discrete_distribution<std::size_t>> draw;
  for (const auto& d : scene.distributions) draw.emplace_back(d.begin(), d.end());
  scene.image = Image(width, height, 3);
  const LabelField& gt = scene.annotation.label_field();
  scene.distributions.resize(static_cast<std::size_t>(scene.annotation.regions()));
  for (std::size_t p = 0; p < gt.size(); ++p) {
    const int label = gt.labels[p];
    const Rgb& c = scene.palette[draw[static_cast<std::size_t>(label - 1)](rng)];
    std::copy(c.begin(), c.end(), scene.image.at(p).begin());
  }
  return scene;
}

}  // namespace dglseg
