#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dglseg/error.hpp"

namespace dglseg {

/// Row/column coordinate of a pixel. Ordering is row-major.
struct Pixel {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Dense interleaved image with intensities normalised to [0,1].
///
/// Pixel (r, c) channel k lives at data[(r * width + c) * channels + k].
class Image {
 public:
  Image() = default;

  Image(int width, int height, int channels)
      : width_(width), height_(height), channels_(channels) {
    require(width > 0 && height > 0, ErrorKind::Input,
            "image dimensions must be positive");
    require(channels >= 1, ErrorKind::Input, "image needs at least one channel");
    data_.assign(static_cast<std::size_t>(width) * height * channels, 0.0);
  }

  Image(int width, int height, int channels, std::vector<double> data)
      : Image(width, height, channels) {
    require(data.size() == data_.size(), ErrorKind::Input,
            "image buffer size does not match dimensions");
    for (double v : data) {
      require(v >= 0.0 && v <= 1.0, ErrorKind::Domain,
              "image intensities must lie in [0,1]");
    }
    data_ = std::move(data);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(Pixel p) const noexcept {
    return p.row >= 0 && p.col >= 0 && p.row < height_ && p.col < width_;
  }
  std::size_t index(Pixel p) const noexcept {
    return static_cast<std::size_t>(p.row) * width_ + p.col;
  }
  Pixel pixel_at(std::size_t linear) const noexcept {
    return {static_cast<int>(linear / width_), static_cast<int>(linear % width_)};
  }

  std::span<const double> at(std::size_t linear) const noexcept {
    return {data_.data() + linear * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<double> at(std::size_t linear) noexcept {
    return {data_.data() + linear * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<const double> at(Pixel p) const noexcept { return at(index(p)); }
  std::span<double> at(Pixel p) noexcept { return at(index(p)); }

  const std::vector<double>& data() const noexcept { return data_; }
  std::span<double> mutable_data() noexcept { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Per-pixel integer label field; 0 means "unlabelled".
struct LabelField {
  int width = 0;
  int height = 0;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  int operator()(int row, int col) const { return labels[static_cast<std::size_t>(row) * width + col]; }
};

}  // namespace dglseg
