#pragma once

// Simulated user inputs derived from ground-truth annotations: random fractions
// of mask or box pixels, perturbed boxes and seed squares.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dglseg/error.hpp"
#include "dglseg/histograms.hpp"
#include "dglseg/image.hpp"

namespace dglseg {

/// All randomness in input simulation uses this generator; region i of a run
/// seeded with s draws from its own stream seeded with s ^ i.
using Rng = std::mt19937_64;

inline Rng region_stream(std::uint64_t seed, int region) {
  return Rng(seed ^ static_cast<std::uint64_t>(region));
}

/// Ground-truth label field with labels remapped to the contiguous range [1,M].
class RegionAnnotation {
 public:
  RegionAnnotation() = default;

  /// Labels > 0 are remapped to 1..M in order of first appearance (raster order)
  /// unless they already are exactly 1..M.
  static RegionAnnotation from_labels(int width, int height, std::vector<int> labels,
                                      const WarningSink& warnings = {}) {
    require(width > 0 && height > 0, ErrorKind::Input, "annotation dimensions must be positive");
    require(labels.size() == static_cast<std::size_t>(width) * height, ErrorKind::Input,
            "label field does not match its dimensions");
    std::map<int, int> remap;
    for (int v : labels) {
      require(v >= 0, ErrorKind::Input, "labels must be non-negative");
      if (v > 0 && !remap.contains(v)) {
        remap[v] = static_cast<int>(remap.size()) + 1;
      }
    }
    require(!remap.empty(), ErrorKind::Input, "annotation contains no labelled pixels");
    // Maps already using exactly 1..M keep their labels; others are remapped.
    const bool contiguous = remap.rbegin()->first == static_cast<int>(remap.size());
    if (contiguous) {
      for (auto& [value, label] : remap) label = value;
    } else {
      warn(warnings, "annotation labels remapped to the contiguous range 1.." + std::to_string(remap.size()));
    }

    RegionAnnotation a;
    a.width_ = width;
    a.height_ = height;
    a.regions_ = static_cast<int>(remap.size());
    a.region_pixels_.resize(remap.size());
    for (std::size_t p = 0; p < labels.size(); ++p) {
      if (labels[p] == 0) continue;
      labels[p] = remap[labels[p]];
      a.region_pixels_[labels[p] - 1].push_back(static_cast<std::uint32_t>(p));
    }
    a.labels_.width = width;
    a.labels_.height = height;
    a.labels_.labels = std::move(labels);
    return a;
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int regions() const noexcept { return regions_; }
  const LabelField& label_field() const noexcept { return labels_; }
  /// Linear indices of GT_i, i 1-based.
  const std::vector<std::uint32_t>& region(int i) const { return region_pixels_.at(i - 1); }

  std::vector<Pixel> region_pixels(int i) const {
    std::vector<Pixel> out;
    out.reserve(region(i).size());
    for (auto p : region(i)) out.push_back({static_cast<int>(p / width_), static_cast<int>(p % width_)});
    return out;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int regions_ = 0;
  LabelField labels_;
  std::vector<std::vector<std::uint32_t>> region_pixels_;
};

/// Axis-aligned box with inclusive corners (r1, c1) and (r2, c2).
struct BoundingBox {
  int r1 = 0, c1 = 0, r2 = 0, c2 = 0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

  std::vector<Pixel> pixels() const {
    std::vector<Pixel> out;
    out.reserve(static_cast<std::size_t>(r2 - r1 + 1) * (c2 - c1 + 1));
    for (int r = r1; r <= r2; ++r)
      for (int c = c1; c <= c2; ++c) out.push_back({r, c});
    return out;
  }
};

struct GtFraction { double percent = 100; };
struct BbFraction { double percent = 100; };
struct SeedSquares { int seeds = 10; int side = 50; };
struct BbPerturbed { double perturb_percent = 10; double fill_percent = 100; };
struct ManualInput { std::vector<PixelSet> sets; };

struct InputRegime {
  std::variant<GtFraction, BbFraction, SeedSquares, BbPerturbed, ManualInput> kind;
  std::uint64_t rng_seed = 0;

  void validate() const {
    std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, GtFraction> || std::is_same_v<T, BbFraction>) {
            require(k.percent > 0 && k.percent <= 100, ErrorKind::Input, "f must lie in (0,100]");
          } else if constexpr (std::is_same_v<T, SeedSquares>) {
            require(k.seeds >= 1 && k.side >= 1, ErrorKind::Input, "need t >= 1 and l >= 1");
          } else if constexpr (std::is_same_v<T, BbPerturbed>) {
            require(k.perturb_percent >= 0, ErrorKind::Input, "p must be >= 0");
            require(k.fill_percent > 0 && k.fill_percent <= 100, ErrorKind::Input,
                    "f must lie in (0,100]");
          }
        },
        kind);
  }
};

namespace detail {
inline std::string trim_number(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}
}  // namespace detail

/// Short regime family name used in reports: gt, bb, seeds, bbpert, manual.
inline std::string regime_family(const InputRegime& r) {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GtFraction>) return "gt";
        else if constexpr (std::is_same_v<T, BbFraction>) return "bb";
        else if constexpr (std::is_same_v<T, SeedSquares>) return "seeds";
        else if constexpr (std::is_same_v<T, BbPerturbed>) return "bbpert";
        else return "manual";
      },
      r.kind);
}

/// The swept parameter of a regime: f, f, t, p respectively.
inline double regime_parameter(const InputRegime& r) {
  return std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GtFraction> || std::is_same_v<T, BbFraction>) return k.percent;
        else if constexpr (std::is_same_v<T, SeedSquares>) return k.seeds;
        else if constexpr (std::is_same_v<T, BbPerturbed>) return k.perturb_percent;
        else return 0.0;
      },
      r.kind);
}

/// Round-trippable text form: gt:50, bb:25, seeds:15:50, bbpert:10:100, manual.
inline std::string describe(const InputRegime& r) {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GtFraction>) return "gt:" + detail::trim_number(k.percent);
        else if constexpr (std::is_same_v<T, BbFraction>) return "bb:" + detail::trim_number(k.percent);
        else if constexpr (std::is_same_v<T, SeedSquares>)
          return "seeds:" + std::to_string(k.seeds) + ":" + std::to_string(k.side);
        else if constexpr (std::is_same_v<T, BbPerturbed>)
          return "bbpert:" + detail::trim_number(k.perturb_percent) + ":" +
                 detail::trim_number(k.fill_percent);
        else return "manual";
      },
      r.kind);
}

inline InputRegime parse_regime(const std::string& text, std::uint64_t seed = 0) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  auto number = [&](std::size_t k, double fallback) {
    if (k >= parts.size()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(parts[k], &used);
      require(used == parts[k].size(), ErrorKind::Input, "bad number in regime '" + text + "'");
      return v;
    } catch (const std::logic_error&) {
      fail(ErrorKind::Input, "bad number in regime '" + text + "'");
    }
  };
  InputRegime r;
  r.rng_seed = seed;
  const std::string& name = parts[0];
  if (name == "gt" && parts.size() <= 2) r.kind = GtFraction{number(1, 100)};
  else if (name == "bb" && parts.size() <= 2) r.kind = BbFraction{number(1, 100)};
  else if (name == "seeds" && parts.size() <= 3)
    r.kind = SeedSquares{static_cast<int>(number(1, 10)), static_cast<int>(number(2, 50))};
  else if (name == "bbpert" && parts.size() <= 3) r.kind = BbPerturbed{number(1, 10), number(2, 100)};
  else if (name == "manual" && parts.size() == 1) r.kind = ManualInput{};
  else fail(ErrorKind::Input, "unknown regime '" + text + "'");
  r.validate();
  return r;
}

inline BoundingBox tight_bbox(std::span<const Pixel> region) {
  require(!region.empty(), ErrorKind::Input, "bounding box of an empty region");
  BoundingBox b{region[0].row, region[0].col, region[0].row, region[0].col};
  for (const Pixel& p : region) {
    b.r1 = std::min(b.r1, p.row);
    b.c1 = std::min(b.c1, p.col);
    b.r2 = std::max(b.r2, p.row);
    b.c2 = std::max(b.c2, p.col);
  }
  return b;
}

/// Uniform sample of `count` pixels without replacement (all of them if count >= size).
inline std::vector<Pixel> sample_without_replacement(std::vector<Pixel> pixels, std::size_t count,
                                                     Rng& rng) {
  if (count >= pixels.size()) return pixels;
  // Partial Fisher-Yates: the first `count` slots become the sample.
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pixels.size() - 1);
    std::swap(pixels[k], pixels[pick(rng)]);
  }
  pixels.resize(count);
  return pixels;
}

/// Uniform sample without replacement of max(1, floor(|pixels| f / 100)) pixels.
inline std::vector<Pixel> sample_fraction(std::vector<Pixel> pixels, double percent, Rng& rng) {
  require(percent > 0 && percent <= 100, ErrorKind::Input, "f must lie in (0,100]");
  require(!pixels.empty(), ErrorKind::Input, "cannot sample from an empty pixel list");
  const auto wanted = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(pixels.size()) * percent / 100.0)));
  return sample_without_replacement(std::move(pixels), wanted, rng);
}

/// Each corner coordinate is drawn uniformly within +-(extent * p / 200) of its
/// original value, rounded, clamped to the image and re-ordered if inverted.
inline BoundingBox perturb_bbox(const BoundingBox& box, double percent, Rng& rng, int width,
                                int height) {
  require(percent >= 0, ErrorKind::Input, "p must be >= 0");
  require(box.r1 <= box.r2 && box.c1 <= box.c2, ErrorKind::Input, "bounding box corners are inverted");
  const double row_half = (box.r2 - box.r1) * percent / 200.0;
  const double col_half = (box.c2 - box.c1) * percent / 200.0;
  auto draw = [&rng](int centre, double half, int limit) {
    std::uniform_real_distribution<double> u(centre - half, centre + half);
    const double v = half > 0 ? u(rng) : centre;
    return std::clamp(static_cast<int>(std::lround(v)), 0, limit - 1);
  };
  BoundingBox out;
  out.r1 = draw(box.r1, row_half, height);
  out.c1 = draw(box.c1, col_half, width);
  out.r2 = draw(box.r2, row_half, height);
  out.c2 = draw(box.c2, col_half, width);
  if (out.r1 > out.r2) std::swap(out.r1, out.r2);
  if (out.c1 > out.c2) std::swap(out.c1, out.c2);
  return out;
}

/// Pixels of the side x side square anchored at `seed` (rows seed.row - side/2 ..
/// + side - 1, same for columns), clipped to the image.
inline std::vector<Pixel> seed_square(Pixel seed, int side, int width, int height) {
  require(side >= 1, ErrorKind::Input, "seed square side must be >= 1");
  const int r0 = std::max(0, seed.row - side / 2);
  const int c0 = std::max(0, seed.col - side / 2);
  const int r1 = std::min(height - 1, seed.row - side / 2 + side - 1);
  const int c1 = std::min(width - 1, seed.col - side / 2 + side - 1);
  std::vector<Pixel> out;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) out.push_back({r, c});
  return out;
}

/// Union of side x side squares around `seeds` seed pixels drawn without replacement
/// from the region. Squares may spill outside the region.
inline std::vector<Pixel> seed_squares(std::vector<Pixel> region, int seeds, int side, Rng& rng,
                                       int width, int height, const WarningSink& warnings = {}) {
  require(seeds >= 1, ErrorKind::Input, "need at least one seed");
  require(!region.empty(), ErrorKind::Input, "cannot plant seeds in an empty region");
  if (static_cast<std::size_t>(seeds) > region.size()) {
    warn(warnings, "requested " + std::to_string(seeds) + " seeds but the region has only " +
                       std::to_string(region.size()) + " pixels");
    seeds = static_cast<int>(region.size());
  }
  const std::vector<Pixel> centres =
      sample_without_replacement(std::move(region), static_cast<std::size_t>(seeds), rng);
  std::vector<Pixel> out;
  for (const Pixel& c : centres) {
    auto sq = seed_square(c, side, width, height);
    out.insert(out.end(), sq.begin(), sq.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// One PixelSet per annotated region, built according to the regime.
inline std::vector<PixelSet> training_sets(const RegionAnnotation& annotation,
                                           const InputRegime& regime,
                                           const WarningSink& warnings = {}) {
  regime.validate();
  const int width = annotation.width();
  const int height = annotation.height();
  if (const auto* manual = std::get_if<ManualInput>(&regime.kind)) {
    require(!manual->sets.empty(), ErrorKind::Input, "manual regime carries no pixel sets");
    return manual->sets;
  }
  std::vector<PixelSet> sets;
  for (int i = 1; i <= annotation.regions(); ++i) {
    Rng rng = region_stream(regime.rng_seed, i);
    std::vector<Pixel> gt = annotation.region_pixels(i);
    std::vector<Pixel> chosen;
    InputSource source = InputSource::Manual;
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, GtFraction>) {
            chosen = sample_fraction(std::move(gt), k.percent, rng);
            source = InputSource::GtFraction;
          } else if constexpr (std::is_same_v<T, BbFraction>) {
            chosen = sample_fraction(tight_bbox(gt).pixels(), k.percent, rng);
            source = InputSource::BbFraction;
          } else if constexpr (std::is_same_v<T, BbPerturbed>) {
            const BoundingBox box = perturb_bbox(tight_bbox(gt), k.perturb_percent, rng, width, height);
            chosen = sample_fraction(box.pixels(), k.fill_percent, rng);
            source = InputSource::BbPerturbed;
          } else if constexpr (std::is_same_v<T, SeedSquares>) {
            chosen = seed_squares(std::move(gt), k.seeds, k.side, rng, width, height, warnings);
            source = InputSource::SeedSquares;
          }
        },
        regime.kind);
    require(!chosen.empty(), ErrorKind::Input,
            "regime produced no pixels for region " + std::to_string(i));
    sets.emplace_back(i, std::move(chosen), source, width, height);
  }
  return sets;
}

}  // namespace dglseg
