#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <vector>

#include "greenmat/grid.hpp"

namespace greenmat {

// 8-bit PNG, v / 255 on load and round(v * 255) on save. Gray PNGs carry
// mattes; RGB and RGBA carry images.

namespace png_detail {

struct ImageGuard {
  png_image img;
  ImageGuard() {
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
  }
  ~ImageGuard() { png_image_free(&img); }
  ImageGuard(const ImageGuard&) = delete;
  ImageGuard& operator=(const ImageGuard&) = delete;
};

inline png_uint_32 format_for(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 3: return PNG_FORMAT_RGB;
    case 4: return PNG_FORMAT_RGBA;
    default: throw Error("png: unsupported channel count");
  }
}

inline std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace png_detail

/// Loads a PNG converted to `channels` (1, 3 or 4); libpng handles the
/// colour-type conversion.
inline Image load_png(const std::filesystem::path& path, int channels) {
  png_detail::ImageGuard g;
  if (!png_image_begin_read_from_file(&g.img, path.string().c_str())) {
    throw Error("cannot read PNG " + path.string() + ": " + g.img.message);
  }
  g.img.format = png_detail::format_for(channels);
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(g.img));
  if (!png_image_finish_read(&g.img, nullptr, buf.data(), 0, nullptr)) {
    throw Error("cannot decode PNG " + path.string() + ": " + g.img.message);
  }
  std::vector<float> data(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) data[i] = static_cast<float>(buf[i]) / 255.0f;
  return Image(static_cast<int>(g.img.height), static_cast<int>(g.img.width), channels, std::move(data));
}

inline AlphaMatte load_matte_png(const std::filesystem::path& path) {
  return grid_cast<MattePolicy>(load_png(path, 1));
}

template <class P>
void save_png(const std::filesystem::path& path, const Grid<P>& g) {
  if (g.empty()) throw Error("png: refusing to write an empty image");
  png_detail::ImageGuard guard;
  guard.img.width = static_cast<png_uint_32>(g.width());
  guard.img.height = static_cast<png_uint_32>(g.height());
  guard.img.format = png_detail::format_for(g.channels());
  std::vector<std::uint8_t> buf(g.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = png_detail::to_byte(static_cast<float>(g.data()[i]));
  if (!png_image_write_to_file(&guard.img, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw Error("cannot write PNG " + path.string() + ": " + guard.img.message);
  }
}

/// Combines colour and alpha into a 4-channel image.
inline Image to_rgba(const Image& rgb, const AlphaMatte& alpha) {
  require_channels(rgb, 3, "to_rgba");
  require_same_shape(rgb, alpha, "to_rgba");
  std::vector<float> out(rgb.pixels() * 4);
  for (std::size_t i = 0; i < rgb.pixels(); ++i) {
    for (int c = 0; c < 3; ++c) out[4 * i + c] = rgb.data()[3 * i + c];
    out[4 * i + 3] = alpha.data()[i];
  }
  return Image(rgb.height(), rgb.width(), 4, std::move(out));
}

}  // namespace greenmat
