#pragma once

// Quantized empirical histograms of user-labelled pixel sets and the total
// variation distance between them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dglseg/color_quantize.hpp"
#include "dglseg/error.hpp"
#include "dglseg/image.hpp"

namespace dglseg {

enum class InputSource { GtFraction, BbFraction, SeedSquares, BbPerturbed, Manual };

inline const char* to_string(InputSource s) {
  switch (s) {
    case InputSource::GtFraction: return "gt_fraction";
    case InputSource::BbFraction: return "bb_fraction";
    case InputSource::SeedSquares: return "seed_squares";
    case InputSource::BbPerturbed: return "bb_perturbed";
    case InputSource::Manual: return "manual";
  }
  return "?";
}

/// User-labelled pixels of one region. Region labels are 1-based.
/// Construction validates bounds and removes duplicate coordinates.
class PixelSet {
 public:
  PixelSet() = default;

  PixelSet(int label, std::vector<Pixel> pixels, InputSource source, int width, int height)
      : label_(label), source_(source), pixels_(std::move(pixels)) {
    require(label >= 1, ErrorKind::Input, "region labels start at 1");
    require(!pixels_.empty(), ErrorKind::Input,
            "region " + std::to_string(label) + " has no user-labelled pixels");
    for (const Pixel& p : pixels_) {
      require(p.row >= 0 && p.col >= 0 && p.row < height && p.col < width, ErrorKind::Input,
              "pixel (" + std::to_string(p.row) + "," + std::to_string(p.col) +
                  ") lies outside the image");
    }
    std::sort(pixels_.begin(), pixels_.end());
    pixels_.erase(std::unique(pixels_.begin(), pixels_.end()), pixels_.end());
  }

  int label() const noexcept { return label_; }
  InputSource source() const noexcept { return source_; }
  const std::vector<Pixel>& pixels() const noexcept { return pixels_; }
  std::size_t size() const noexcept { return pixels_.size(); }

 private:
  int label_ = 0;
  InputSource source_ = InputSource::Manual;
  std::vector<Pixel> pixels_;
};

/// Normalised dense histogram over the |X| cells of a quantization spec.
class Histogram {
 public:
  Histogram() = default;

  /// Builds from raw per-cell counts (must be non-negative, not all zero).
  static Histogram from_counts(const QuantizationSpec& spec, std::span<const double> counts) {
    require(counts.size() == spec.alphabet_size(), ErrorKind::Input,
            "count vector does not cover the alphabet");
    double total = 0.0;
    for (double c : counts) {
      require(c >= 0.0 && std::isfinite(c), ErrorKind::Input, "histogram counts must be >= 0");
      total += c;
    }
    require(total > 0.0, ErrorKind::Input, "histogram needs positive total mass");
    Histogram h;
    h.spec_ = spec;
    h.mass_.resize(counts.size());
    for (std::size_t q = 0; q < counts.size(); ++q) h.mass_[q] = counts[q] / total;
    h.support_count_ = static_cast<std::size_t>(std::llround(total));
    if (h.support_count_ == 0) h.support_count_ = 1;
    return h;
  }

  /// Histogram of `cells` (each in [0,|X|)).
  static Histogram from_cells(const QuantizationSpec& spec, std::span<const CellId> cells) {
    require(!cells.empty(), ErrorKind::Input, "cannot build a histogram from zero pixels");
    Histogram h;
    h.spec_ = spec;
    h.mass_.assign(spec.alphabet_size(), 0.0);
    for (CellId c : cells) {
      require(c < h.mass_.size(), ErrorKind::Input, "cell id outside the alphabet");
      h.mass_[c] += 1.0;
    }
    const double inv = 1.0 / static_cast<double>(cells.size());
    for (double& m : h.mass_) m *= inv;
    h.support_count_ = cells.size();
    return h;
  }

  const QuantizationSpec& spec() const noexcept { return spec_; }
  std::span<const double> mass() const noexcept { return mass_; }
  double operator[](std::size_t q) const noexcept { return mass_[q]; }
  std::size_t alphabet_size() const noexcept { return mass_.size(); }
  std::size_t support_count() const noexcept { return support_count_; }

 private:
  QuantizationSpec spec_;
  std::vector<double> mass_;
  std::size_t support_count_ = 0;
};

/// Histogram of a pixel set given a precomputed per-pixel cell map of an image of `width` columns.
inline Histogram build_histogram(const PixelSet& set, std::span<const CellId> cell_of_pixel,
                                 int width, const QuantizationSpec& spec) {
  require(set.size() > 0, ErrorKind::Input, "a region with no user pixels cannot be a hypothesis");
  std::vector<CellId> cells;
  cells.reserve(set.size());
  for (const Pixel& p : set.pixels()) {
    const std::size_t idx = static_cast<std::size_t>(p.row) * width + p.col;
    require(idx < cell_of_pixel.size(), ErrorKind::Input, "pixel set does not fit the image");
    cells.push_back(cell_of_pixel[idx]);
  }
  return Histogram::from_cells(spec, cells);
}

inline Histogram build_histogram(const PixelSet& set, const Image& image,
                                 const QuantizationSpec& spec) {
  require(set.size() > 0, ErrorKind::Input, "a region with no user pixels cannot be a hypothesis");
  const std::vector<CellId> cells = cell_map(image, spec);
  return build_histogram(set, cells, image.width(), spec);
}

/// V(P,Q) = (1/2) sum_q |P(q) - Q(q)|.
inline double total_variation(const Histogram& a, const Histogram& b) {
  require(a.spec() == b.spec(), ErrorKind::Input,
          "total variation needs histograms over the same alphabet");
  double sum = 0.0;
  const auto ma = a.mass();
  const auto mb = b.mass();
  for (std::size_t q = 0; q < ma.size(); ++q) sum += std::abs(ma[q] - mb[q]);
  return std::min(1.0, 0.5 * sum);
}

struct PairwiseMinimum {
  double value = 0.0;
  int i = 0;  // 1-based, i < j
  int j = 0;
};

inline PairwiseMinimum min_pairwise_tv(std::span<const Histogram> hists) {
  require(hists.size() >= 2, ErrorKind::Input, "need at least two histograms");
  PairwiseMinimum best{std::numeric_limits<double>::infinity(), 0, 0};
  for (std::size_t i = 0; i < hists.size(); ++i) {
    for (std::size_t j = i + 1; j < hists.size(); ++j) {
      const double v = total_variation(hists[i], hists[j]);
      if (v < best.value) best = {v, static_cast<int>(i) + 1, static_cast<int>(j) + 1};
    }
  }
  return best;
}

}  // namespace dglseg
