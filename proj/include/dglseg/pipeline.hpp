#pragma once

// End-to-end segmentation: training sets -> nominal histograms -> Scheffe family
// and nominal table -> one DGL decision per superpixel -> label field.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dglseg/color_quantize.hpp"
#include "dglseg/dgl.hpp"
#include "dglseg/error.hpp"
#include "dglseg/histograms.hpp"
#include "dglseg/image.hpp"
#include "dglseg/superpixels.hpp"

namespace dglseg {

/// Feature space the superpixels are clustered in.
enum class SlicSpace { Working, Lab };

struct SegmentConfig {
  QuantizationSpec spec = QuantizationSpec::hsv_hue_saturation(1024);
  SlicParams slic;
  SlicSpace slic_space = SlicSpace::Working;
  int click_cost = 2;
  int threads = 1;
  std::uint64_t memory_budget_bytes = std::uint64_t{4} << 30;
};

struct SegmentationResult {
  SuperpixelPartition partition;
  int regions = 0;                       // M
  std::vector<int> superpixel_labels;    // 1-based, one per superpixel
  std::vector<int> pixel_labels;         // row-major, derived from superpixel_labels
  std::vector<DecisionStats> stats;
  std::vector<bool> overridden;          // set once a user relabels the superpixel
  int clicks = 0;
  SegmentConfig config;

  int width() const noexcept { return partition.width(); }
  int height() const noexcept { return partition.height(); }
  LabelField label_field() const { return {width(), height(), pixel_labels}; }
};

/// The image the superpixels are computed on, per config.slic_space.
inline Image superpixel_features(const Image& image, const SegmentConfig& config) {
  if (config.slic_space == SlicSpace::Lab && image.channels() == 3) {
    Image out(image.width(), image.height(), 3);
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
      const auto px = image.at(i);
      const auto lab = rgb_to_lab_unit({px[0], px[1], px[2]});
      std::copy(lab.begin(), lab.end(), out.at(i).begin());
    }
    return out;
  }
  const auto d = static_cast<int>(config.spec.dimensions());
  return Image(image.width(), image.height(), d, selected_channels(image, config.spec));
}

inline SuperpixelPartition compute_superpixels(const Image& image, const SegmentConfig& config) {
  return slic(superpixel_features(image, config), config.slic);
}

inline void check_memory_budget(const QuantizationSpec& spec, int regions, const SegmentConfig& config) {
  const std::uint64_t cells = spec.alphabet_size();
  const std::uint64_t bytes = cells * sizeof(double) * static_cast<std::uint64_t>(regions) +
                              cells / 8 * pair_count(regions);
  require(bytes <= config.memory_budget_bytes, ErrorKind::Configuration,
          "alphabet of " + std::to_string(cells) + " cells with " + std::to_string(regions) +
              " regions needs ~" + std::to_string(bytes >> 20) + " MiB, over the memory budget");
}

namespace detail {

inline std::vector<PixelSet> ordered_sets(std::span<const PixelSet> sets) {
  std::vector<PixelSet> ordered(sets.begin(), sets.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const PixelSet& a, const PixelSet& b) { return a.label() < b.label(); });
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    require(ordered[k].label() == static_cast<int>(k) + 1, ErrorKind::Input,
            "training sets must carry the labels 1..M exactly once");
    require(ordered[k].size() > 0, ErrorKind::Input,
            "region " + std::to_string(k + 1) + " has no user-labelled pixels");
  }
  return ordered;
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < count; k += workers) fn(k);
    });
  }
}

}  // namespace detail

/// Segments with a precomputed partition (lets callers reuse superpixels across regimes).
inline SegmentationResult segment(const Image& image, const SuperpixelPartition& partition,
                                  std::span<const PixelSet> training, const SegmentConfig& config) {
  require(training.size() >= 2, ErrorKind::Input, "segmentation needs at least two regions");
  require(partition.width() == image.width() && partition.height() == image.height(),
          ErrorKind::Input, "partition does not match the image");
  config.spec.validate();
  const std::vector<PixelSet> sets = detail::ordered_sets(training);
  const int regions = static_cast<int>(sets.size());
  check_memory_budget(config.spec, regions, config);

  const std::vector<CellId> cells = cell_map(image, config.spec);
  std::vector<Histogram> nominals;
  nominals.reserve(sets.size());
  for (const PixelSet& s : sets) nominals.push_back(build_histogram(s, cells, image.width(), config.spec));
  const ScheffeFamily family = build_scheffe_sets(nominals);
  nominals.shrink_to_fit();
  const NominalTable table = build_nominal_table(nominals, family);
  nominals.clear();

  SegmentationResult result;
  result.partition = partition;
  result.regions = regions;
  result.config = config;
  const auto count = static_cast<std::size_t>(partition.count());
  result.superpixel_labels.assign(count, 0);
  result.stats.resize(count);
  result.overridden.assign(count, false);

  detail::parallel_for(count, config.threads, [&](std::size_t k) {
    const auto& members = partition.members(static_cast<int>(k));
    std::vector<CellId> sample;
    sample.reserve(members.size());
    for (auto p : members) sample.push_back(cells[p]);
    result.stats[k] = classify(sample, family, table);
    result.superpixel_labels[k] = result.stats[k].chosen_label;
  });

  result.pixel_labels.resize(partition.assignment().size());
  for (std::size_t p = 0; p < result.pixel_labels.size(); ++p) {
    result.pixel_labels[p] = result.superpixel_labels[partition.id_at(p)];
  }
  return result;
}

inline SegmentationResult segment(const Image& image, std::span<const PixelSet> training,
                                  const SegmentConfig& config) {
  require(training.size() >= 2, ErrorKind::Input, "segmentation needs at least two regions");
  return segment(image, compute_superpixels(image, config), training, config);
}

/// Overrides superpixel k's label in place and charges the configured click cost.
inline void relabel_superpixel(SegmentationResult& result, int k, int new_label) {
  require(k >= 0 && k < result.partition.count(), ErrorKind::Input,
          "superpixel id " + std::to_string(k) + " does not exist");
  require(new_label >= 1 && new_label <= result.regions, ErrorKind::Input,
          "label " + std::to_string(new_label) + " outside 1.." + std::to_string(result.regions));
  result.superpixel_labels[k] = new_label;
  result.overridden[k] = true;
  for (auto p : result.partition.members(k)) result.pixel_labels[p] = new_label;
  result.clicks += result.config.click_cost;
}

inline SegmentationResult relabeled(SegmentationResult result, int k, int new_label) {
  relabel_superpixel(result, k, new_label);
  return result;
}

}  // namespace dglseg
