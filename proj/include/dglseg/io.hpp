#pragma once

// Image and label-map files: 8-bit PNG (via libpng) and binary/ASCII PNM.
// Label maps are written as palette PNGs whose indices are the region ids.

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "dglseg/color_quantize.hpp"
#include "dglseg/error.hpp"
#include "dglseg/image.hpp"
#include "dglseg/input_sim.hpp"

namespace dglseg {

/// Decoded 8-bit raster, before normalisation.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;      // 1 or 3
  bool indexed = false;  // palette PNG: values are palette indices
  std::vector<std::uint8_t> values;
};

namespace detail {

struct PngReadState {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->offset + length > st->size) png_error(png, "truncated PNG data");
  std::memcpy(out, st->data + st->offset, length);
  st->offset += length;
}

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

inline void png_flush_noop(png_structp) {}

[[noreturn]] inline void png_error_to_exception(png_structp, png_const_charp msg) {
  throw Error(ErrorKind::Io, std::string("PNG: ") + msg);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

/// keep_indices: palette PNGs return raw indices as a single channel.
inline Raster decode_png(const std::uint8_t* data, std::size_t size, bool keep_indices) {
  if (size < 8 || png_sig_cmp(data, 0, 8) != 0) fail(ErrorKind::Io, "not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_to_exception, png_warning_ignore);
  if (!png) fail(ErrorKind::Io, "libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  PngReadState state{data, size, 0};
  png_set_read_fn(png, &state, png_read_from_memory);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  Raster raster;
  raster.width = static_cast<int>(width);
  raster.height = static_cast<int>(height);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) {
    if (keep_indices) {
      if (depth < 8) png_set_packing(png);
      raster.indexed = true;
    } else {
      png_set_palette_to_rgb(png);
    }
  }
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (!(color == PNG_COLOR_TYPE_PALETTE && keep_indices)) {
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int out_channels = png_get_channels(png, info);
  if (out_channels != 1 && out_channels != 3) fail(ErrorKind::Io, "unsupported PNG channel layout");
  raster.channels = out_channels;
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  if (row_bytes != static_cast<std::size_t>(width) * out_channels) {
    fail(ErrorKind::Io, "unsupported PNG row layout");
  }
  raster.values.resize(row_bytes * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = raster.values.data() + r * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return raster;
}

inline std::vector<std::uint8_t> encode_png(const Raster& raster,
                                            const std::vector<std::array<std::uint8_t, 3>>* palette) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_to_exception, png_warning_ignore);
  if (!png) fail(ErrorKind::Io, "libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  std::vector<std::uint8_t> out;
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  int color = raster.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  if (palette) color = PNG_COLOR_TYPE_PALETTE;
  png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width),
               static_cast<png_uint_32>(raster.height), 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> entries;
  if (palette) {
    for (const auto& c : *palette) entries.push_back({c[0], c[1], c[2]});
    png_set_PLTE(png, info, entries.data(), static_cast<int>(entries.size()));
  }
  png_write_info(png, info);
  const std::size_t row_bytes = static_cast<std::size_t>(raster.width) * raster.channels;
  for (int r = 0; r < raster.height; ++r) {
    png_write_row(png, const_cast<png_bytep>(raster.values.data() + r * row_bytes));
  }
  png_write_end(png, nullptr);
  return out;
}

/// P2/P3/P5/P6 with maxval <= 255.
inline Raster decode_pnm(const std::uint8_t* data, std::size_t size) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < size) {
      if (data[pos] == '#') {
        while (pos < size && data[pos] != '\n') ++pos;
      } else if (std::isspace(data[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    if (pos >= size || !std::isdigit(data[pos])) fail(ErrorKind::Io, "malformed PNM header");
    long v = 0;
    while (pos < size && std::isdigit(data[pos])) {
      v = v * 10 + (data[pos++] - '0');
      if (v > (1L << 24)) fail(ErrorKind::Io, "PNM value too large");
    }
    return static_cast<int>(v);
  };
  if (size < 2 || data[0] != 'P') fail(ErrorKind::Io, "not a PNM stream");
  const char kind = static_cast<char>(data[1]);
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    fail(ErrorKind::Io, "unsupported PNM variant");
  }
  pos = 2;
  Raster raster;
  raster.width = read_int();
  raster.height = read_int();
  const int maxval = read_int();
  if (raster.width <= 0 || raster.height <= 0) fail(ErrorKind::Io, "PNM has empty dimensions");
  if (maxval <= 0 || maxval > 255) fail(ErrorKind::Io, "only 8-bit PNM files are supported");
  raster.channels = (kind == '3' || kind == '6') ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(raster.width) * raster.height * raster.channels;
  raster.values.resize(count);
  auto rescale = [maxval](int v) {
    return static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
  };
  if (kind == '5' || kind == '6') {
    ++pos;  // single whitespace after maxval
    if (pos + count > size) fail(ErrorKind::Io, "truncated PNM data");
    for (std::size_t k = 0; k < count; ++k) raster.values[k] = rescale(data[pos + k]);
  } else {
    for (std::size_t k = 0; k < count; ++k) {
      const int v = read_int();
      if (v > maxval) fail(ErrorKind::Io, "PNM sample exceeds maxval");
      raster.values[k] = rescale(v);
    }
  }
  return raster;
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "failed writing '" + path + "'");
}

inline bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

inline Raster decode_raster(const std::vector<std::uint8_t>& bytes, bool keep_indices,
                            const std::string& origin) {
  try {
    if (has_png_signature(bytes)) return decode_png(bytes.data(), bytes.size(), keep_indices);
    if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes.data(), bytes.size());
  } catch (const Error& e) {
    fail(ErrorKind::Io, origin + ": " + e.what());
  }
  fail(ErrorKind::Io, origin + ": unsupported image format (expected PNG or PNM)");
}

}  // namespace detail

inline Image image_from_raster(const Raster& raster) {
  Image image(raster.width, raster.height, raster.channels);
  auto data = image.mutable_data();
  for (std::size_t k = 0; k < raster.values.size(); ++k) data[k] = raster.values[k] / 255.0;
  return image;
}

/// Decodes PNG or PNM bytes into an image with intensities v / 255.
inline Image decode_image(const std::vector<std::uint8_t>& bytes, const std::string& origin = "image") {
  return image_from_raster(detail::decode_raster(bytes, false, origin));
}

inline Image load_image(const std::string& path) {
  return decode_image(detail::read_file(path), path);
}

/// 8-bit RGB (or gray) PNG of an image, intensities rounded to v * 255.
inline std::vector<std::uint8_t> encode_png(const Image& image) {
  require(image.channels() == 1 || image.channels() == 3, ErrorKind::Input,
          "only 1- or 3-channel images can be written as PNG");
  Raster raster{image.width(), image.height(), image.channels(), false, {}};
  raster.values.reserve(image.data().size());
  for (double v : image.data()) {
    raster.values.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return detail::encode_png(raster, nullptr);
}

inline void save_png(const std::string& path, const Image& image) {
  detail::write_file(path, encode_png(image));
}

/// Label maps: single-channel 8-bit PNG (gray or palette indices) or PGM.
inline RegionAnnotation decode_label_map(const std::vector<std::uint8_t>& bytes,
                                         const std::string& origin = "label map",
                                         const WarningSink& warnings = {}) {
  const Raster raster = detail::decode_raster(bytes, true, origin);
  require(raster.channels == 1, ErrorKind::Input, origin + ": label maps must be single-channel");
  std::vector<int> labels(raster.values.begin(), raster.values.end());
  return RegionAnnotation::from_labels(raster.width, raster.height, std::move(labels), warnings);
}

inline RegionAnnotation load_label_map(const std::string& path, const WarningSink& warnings = {}) {
  return decode_label_map(detail::read_file(path), path, warnings);
}

/// Distinct colours for label indices; index 0 (unlabelled) is black.
inline std::vector<std::array<std::uint8_t, 3>> label_palette(int max_label) {
  std::vector<std::array<std::uint8_t, 3>> palette{{0, 0, 0}};
  for (int k = 1; k <= max_label; ++k) {
    // golden-angle hue walk
    const double h = std::fmod(0.61803398875 * k, 1.0);
    const double s = k % 2 ? 0.85 : 0.6;
    const auto rgb = hsv_to_rgb({h, s, 0.95});
    palette.push_back({static_cast<std::uint8_t>(rgb[0] * 255), static_cast<std::uint8_t>(rgb[1] * 255),
                       static_cast<std::uint8_t>(rgb[2] * 255)});
  }
  return palette;
}

inline std::vector<std::uint8_t> encode_label_map(const LabelField& field) {
  require(field.size() == static_cast<std::size_t>(field.width) * field.height, ErrorKind::Input,
          "label field does not match its dimensions");
  int max_label = 0;
  Raster raster{field.width, field.height, 1, true, {}};
  raster.values.reserve(field.size());
  for (int v : field.labels) {
    require(v >= 0 && v <= 255, ErrorKind::Input, "label maps support labels 0..255 only");
    max_label = std::max(max_label, v);
    raster.values.push_back(static_cast<std::uint8_t>(v));
  }
  const auto palette = label_palette(max_label);
  return detail::encode_png(raster, &palette);
}

inline void save_label_map(const std::string& path, const LabelField& field) {
  detail::write_file(path, encode_label_map(field));
}

}  // namespace dglseg
