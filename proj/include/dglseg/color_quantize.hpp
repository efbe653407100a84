#pragma once

// Colour-space conversion and mapping of intensities to cells of a discrete
// product alphabet X = X_1 x ... x X_d'.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dglseg/error.hpp"
#include "dglseg/image.hpp"

namespace dglseg {

using CellId = std::uint32_t;
using Rgb = std::array<double, 3>;
using Hsv = std::array<double, 3>;

enum class ColorSpace { Rgb, Hsv, Gray };

inline std::string to_string(ColorSpace cs) {
  switch (cs) {
    case ColorSpace::Rgb: return "rgb";
    case ColorSpace::Hsv: return "hsv";
    case ColorSpace::Gray: return "gray";
  }
  return "?";
}

inline ColorSpace parse_color_space(const std::string& name) {
  if (name == "rgb" || name == "RGB") return ColorSpace::Rgb;
  if (name == "hsv" || name == "HSV") return ColorSpace::Hsv;
  if (name == "gray" || name == "GRAY" || name == "grey") return ColorSpace::Gray;
  fail(ErrorKind::Configuration, "unknown colour space '" + name + "'");
}

inline int color_space_channels(ColorSpace cs) { return cs == ColorSpace::Gray ? 1 : 3; }

/// Which working-space channels are quantized, and into how many equidistant bins.
struct QuantizationSpec {
  ColorSpace color_space = ColorSpace::Hsv;
  std::vector<int> channel_selection{0, 1};
  std::vector<int> bins_per_channel{1024, 1024};

  static QuantizationSpec hsv_hue_saturation(int bins) {
    return {ColorSpace::Hsv, {0, 1}, {bins, bins}};
  }
  static QuantizationSpec rgb(int bins) {
    return {ColorSpace::Rgb, {0, 1, 2}, {bins, bins, bins}};
  }
  static QuantizationSpec gray(int bins) { return {ColorSpace::Gray, {0}, {bins}}; }

  std::size_t dimensions() const noexcept { return channel_selection.size(); }

  std::uint64_t alphabet_size() const noexcept {
    std::uint64_t size = 1;
    for (int b : bins_per_channel) size *= static_cast<std::uint64_t>(b);
    return size;
  }

  void validate() const {
    require(!channel_selection.empty(), ErrorKind::Configuration,
            "quantization needs at least one channel");
    require(channel_selection.size() == bins_per_channel.size(), ErrorKind::Configuration,
            "one bin count is needed per selected channel");
    const int available = color_space_channels(color_space);
    for (std::size_t k = 0; k < channel_selection.size(); ++k) {
      const int ch = channel_selection[k];
      require(ch >= 0 && ch < available, ErrorKind::Configuration,
              "channel index " + std::to_string(ch) + " is not valid for " +
                  to_string(color_space));
      for (std::size_t j = 0; j < k; ++j) {
        require(channel_selection[j] != ch, ErrorKind::Configuration,
                "channel selection must not repeat channels");
      }
      require(bins_per_channel[k] >= 2, ErrorKind::Configuration,
              "every channel needs at least 2 bins");
    }
    require(alphabet_size() <= (std::uint64_t{1} << 32), ErrorKind::Configuration,
            "alphabet exceeds 2^32 cells");
  }

  friend bool operator==(const QuantizationSpec&, const QuantizationSpec&) = default;
};

inline std::string describe(const QuantizationSpec& spec) {
  std::string out = to_string(spec.color_space) + "[";
  for (std::size_t k = 0; k < spec.dimensions(); ++k) {
    if (k) out += ',';
    out += std::to_string(spec.channel_selection[k]) + ":" + std::to_string(spec.bins_per_channel[k]);
  }
  return out + "]";
}

/// Hexcone RGB -> HSV. Hue is scaled to [0,1); achromatic pixels get hue 0.
inline Hsv rgb_to_hsv(const Rgb& rgb) {
  for (double c : rgb) {
    require(c >= 0.0 && c <= 1.0, ErrorKind::Domain, "RGB component outside [0,1]");
  }
  const auto [r, g, b] = rgb;
  const double hi = std::max({r, g, b});
  const double lo = std::min({r, g, b});
  const double delta = hi - lo;
  double h = 0.0;
  if (delta > 0.0) {
    if (hi == r) {
      h = (g - b) / delta;
      if (h < 0.0) h += 6.0;
    } else if (hi == g) {
      h = (b - r) / delta + 2.0;
    } else {
      h = (r - g) / delta + 4.0;
    }
    h /= 6.0;
    if (h >= 1.0) h -= 1.0;
  }
  const double s = hi > 0.0 ? delta / hi : 0.0;
  return {h, s, hi};
}

inline Rgb hsv_to_rgb(const Hsv& hsv) {
  const auto [h, s, v] = hsv;
  const double h6 = (h - std::floor(h)) * 6.0;
  const int sector = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

inline double rgb_to_gray(const Rgb& rgb) {
  return std::clamp(0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2], 0.0, 1.0);
}

/// sRGB -> CIELAB (D65), rescaled so every component lies in [0,1]:
/// L/100, (a+128)/255, (b+128)/255.
inline std::array<double, 3> rgb_to_lab_unit(const Rgb& rgb) {
  auto linear = [](double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double r = linear(rgb[0]), g = linear(rgb[1]), b = linear(rgb[2]);
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b);
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  auto f = [](double t) {
    return t > 0.008856 ? std::cbrt(t) : (7.787 * t + 16.0 / 116.0);
  };
  const double fx = f(x), fy = f(y), fz = f(z);
  const double l = 116.0 * fy - 16.0;
  const double a = 500.0 * (fx - fy);
  const double bb = 200.0 * (fy - fz);
  return {std::clamp(l / 100.0, 0.0, 1.0), std::clamp((a + 128.0) / 255.0, 0.0, 1.0),
          std::clamp((bb + 128.0) / 255.0, 0.0, 1.0)};
}

/// Converts an RGB or grayscale image into the requested colour space.
inline Image convert_color_space(const Image& image, ColorSpace target) {
  const int ch = image.channels();
  require(ch == 1 || ch == 3, ErrorKind::Input, "images must have 1 or 3 channels");
  if (target == ColorSpace::Gray) {
    if (ch == 1) return image;
    Image out(image.width(), image.height(), 1);
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
      const auto px = image.at(i);
      out.at(i)[0] = rgb_to_gray({px[0], px[1], px[2]});
    }
    return out;
  }
  require(ch == 3, ErrorKind::Input,
          "a grayscale image cannot be quantized in " + to_string(target));
  if (target == ColorSpace::Rgb) return image;
  Image out(image.width(), image.height(), 3);
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const auto px = image.at(i);
    const Hsv hsv = rgb_to_hsv({px[0], px[1], px[2]});
    std::copy(hsv.begin(), hsv.end(), out.at(i).begin());
  }
  return out;
}

/// Equidistant floor binning with the upper edge clamped into the last bin,
/// composed row-major (first selected channel most significant).
inline CellId cell_index(std::span<const double> intensity, const QuantizationSpec& spec) {
  require(intensity.size() == spec.dimensions(), ErrorKind::Input,
          "intensity vector length does not match the quantization spec");
  std::uint64_t cell = 0;
  for (std::size_t k = 0; k < intensity.size(); ++k) {
    const double v = intensity[k];
    require(v >= 0.0 && v <= 1.0, ErrorKind::Domain, "intensity outside [0,1]");
    const int bins = spec.bins_per_channel[k];
    const int b = std::min(static_cast<int>(std::floor(v * bins)), bins - 1);
    cell = cell * static_cast<std::uint64_t>(bins) + static_cast<std::uint64_t>(b);
  }
  return static_cast<CellId>(cell);
}

/// Working-space channels selected by `spec`, one d'-vector per pixel (interleaved).
inline std::vector<double> selected_channels(const Image& image, const QuantizationSpec& spec) {
  spec.validate();
  const Image working = convert_color_space(image, spec.color_space);
  const std::size_t d = spec.dimensions();
  std::vector<double> out(working.pixel_count() * d);
  for (std::size_t i = 0; i < working.pixel_count(); ++i) {
    const auto px = working.at(i);
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] = px[spec.channel_selection[k]];
  }
  return out;
}

/// Cell id of every pixel, row-major.
inline std::vector<CellId> cell_map(const Image& image, const QuantizationSpec& spec) {
  const std::vector<double> values = selected_channels(image, spec);
  const std::size_t d = spec.dimensions();
  std::vector<CellId> cells(image.pixel_count());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    cells[i] = cell_index(std::span<const double>(values.data() + i * d, d), spec);
  }
  return cells;
}

/// Shrinks the alphabet to at most `pixel_budget` cells by giving every channel
/// floor(budget^(1/d')) bins. Specs already within budget come back unchanged.
inline QuantizationSpec reduce_alphabet(const QuantizationSpec& spec, std::uint64_t pixel_budget) {
  spec.validate();
  require(pixel_budget >= 2, ErrorKind::Configuration, "pixel budget must be at least 2");
  if (spec.alphabet_size() <= pixel_budget) return spec;

  const auto d = static_cast<unsigned>(spec.dimensions());
  auto power = [d](std::uint64_t base) {
    std::uint64_t p = 1;
    for (unsigned k = 0; k < d; ++k) {
      if (p > (std::uint64_t{1} << 62) / std::max<std::uint64_t>(base, 1)) return ~std::uint64_t{0};
      p *= base;
    }
    return p;
  };
  auto root = static_cast<std::uint64_t>(std::floor(std::pow(static_cast<double>(pixel_budget), 1.0 / d)));
  while (root > 0 && power(root) > pixel_budget) --root;
  while (power(root + 1) <= pixel_budget) ++root;
  require(root >= 2, ErrorKind::Configuration,
          "pixel budget " + std::to_string(pixel_budget) + " cannot give 2 bins to each of " +
              std::to_string(d) + " channels");

  QuantizationSpec reduced = spec;
  std::fill(reduced.bins_per_channel.begin(), reduced.bins_per_channel.end(), static_cast<int>(root));
  return reduced;
}

}  // namespace dglseg
