#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "greenmat/grid.hpp"

namespace greenmat {

inline constexpr Rgb kCanvasGreen{0.0, 1.0, 0.0};

/// Placement of a pasted object. Colours are unit RGB.
struct CompositeSpec {
  int offset_row = 0;
  int offset_col = 0;
  double scale = 1.0;
  Rgb canvas_color = kCanvasGreen;

  void validate() const {
    if (!(scale > 0.0 && scale <= 16.0)) throw Error("CompositeSpec: scale must lie in (0, 16]");
    for (double v : {canvas_color.r, canvas_color.g, canvas_color.b}) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error("CompositeSpec: canvas colour must lie in [0, 1]");
    }
  }
};

/// out = a * fg + (1 - a) * canvas
inline Image composite_on_green(const Image& fg, const AlphaMatte& alpha, const Rgb& canvas = kCanvasGreen) {
  require_channels(fg, 3, "composite_on_green");
  require_same_shape(fg, alpha, "composite_on_green");
  const double bg[3] = {canvas.r, canvas.g, canvas.b};
  for (double v : bg) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error("composite_on_green: canvas colour must lie in [0, 1]");
  }
  std::vector<float> out(fg.size());
  for (std::size_t i = 0; i < fg.pixels(); ++i) {
    const double a = alpha.data()[i];
    for (int c = 0; c < 3; ++c) out[3 * i + c] = clamp_unit(a * fg.data()[3 * i + c] + (1.0 - a) * bg[c]);
  }
  return Image(fg.height(), fg.width(), 3, std::move(out));
}

namespace composer_detail {

// Bilinear resample of an interleaved buffer to (out_h, out_w) with
// half-pixel-centred sampling and clamped edges.
inline std::vector<double> bilinear(std::span<const float> src, int h, int w, int c, int out_h, int out_w) {
  std::vector<double> out(static_cast<std::size_t>(out_h) * out_w * c);
  const double sy = static_cast<double>(h) / out_h, sx = static_cast<double>(w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, h - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, w - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - x0;
      for (int ch = 0; ch < c; ++ch) {
        auto at = [&](int yy, int xx) { return static_cast<double>(src[(static_cast<std::size_t>(yy) * w + xx) * c + ch]); };
        const double top = at(y0, x0) * (1.0 - tx) + at(y0, x1) * tx;
        const double bot = at(y1, x0) * (1.0 - tx) + at(y1, x1) * tx;
        out[(static_cast<std::size_t>(y) * out_w + x) * c + ch] = top * (1.0 - ty) + bot * ty;
      }
    }
  }
  return out;
}

}  // namespace composer_detail

/// Scales fg and alpha by spec.scale (bilinear, identical sampling for both),
/// places the top-left corner at spec.offset and blends over bg. Parts that
/// land outside bg are clipped; no overlap leaves bg unchanged.
inline Image composite_paste(const Image& fg, const AlphaMatte& alpha, const Image& bg, const CompositeSpec& spec) {
  spec.validate();
  require_channels(fg, 3, "composite_paste");
  require_channels(bg, 3, "composite_paste");
  require_same_shape(fg, alpha, "composite_paste");
  if (fg.empty()) return bg;
  const int out_h = std::max(1, static_cast<int>(std::lround(fg.height() * spec.scale)));
  const int out_w = std::max(1, static_cast<int>(std::lround(fg.width() * spec.scale)));
  const auto color = composer_detail::bilinear(fg.data(), fg.height(), fg.width(), 3, out_h, out_w);
  const auto a = composer_detail::bilinear(alpha.data(), alpha.height(), alpha.width(), 1, out_h, out_w);

  std::vector<float> out(bg.data().begin(), bg.data().end());
  for (int y = 0; y < out_h; ++y) {
    const int by = y + spec.offset_row;
    if (by < 0 || by >= bg.height()) continue;
    for (int x = 0; x < out_w; ++x) {
      const int bx = x + spec.offset_col;
      if (bx < 0 || bx >= bg.width()) continue;
      const std::size_t s = static_cast<std::size_t>(y) * out_w + x;
      const std::size_t d = static_cast<std::size_t>(by) * bg.width() + bx;
      const double al = a[s];
      for (int c = 0; c < 3; ++c) out[3 * d + c] = clamp_unit(al * color[3 * s + c] + (1.0 - al) * out[3 * d + c]);
    }
  }
  return Image(bg.height(), bg.width(), 3, std::move(out));
}

namespace composer_detail {

inline double radial_profile(double d, double radius, double ramp) {
  if (d <= radius) return 1.0;
  if (ramp <= 0.0) return 0.0;
  return std::clamp(1.0 - (d - radius) / ramp, 0.0, 1.0);
}

}  // namespace composer_detail

/// Square matte with a disc centred at ((size-1)/2, (size-1)/2): 1 within
/// `radius`, then a linear falloff to 0 over `ramp` pixels.
inline AlphaMatte make_soft_disc(int size, double radius, double ramp) {
  if (size < 1 || radius < 0.0 || ramp < 0.0 || !(radius + ramp < size / 2.0)) {
    throw Error("make_soft_disc: invalid geometry");
  }
  const double c = (size - 1) / 2.0;
  std::vector<float> m(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      m[static_cast<std::size_t>(y) * size + x] =
          static_cast<float>(composer_detail::radial_profile(std::hypot(y - c, x - c), radius, ramp));
    }
  }
  return AlphaMatte(size, size, 1, std::move(m));
}

/// Annulus between `inner` and `outer` radii with linear ramps of width
/// `ramp` on both edges.
inline AlphaMatte make_soft_ring(int size, double inner, double outer, double ramp) {
  if (size < 1 || ramp < 0.0 || !(inner - ramp >= 0.0) || !(inner < outer) || !(outer + ramp < size / 2.0)) {
    throw Error("make_soft_ring: invalid geometry");
  }
  const double c = (size - 1) / 2.0;
  std::vector<float> m(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double d = std::hypot(y - c, x - c);
      const double outside = composer_detail::radial_profile(d, outer, ramp);
      // Mirror of the outer profile about the inner radius.
      const double inside = ramp <= 0.0 ? (d >= inner ? 1.0 : 0.0) : std::clamp(1.0 - (inner - d) / ramp, 0.0, 1.0);
      m[static_cast<std::size_t>(y) * size + x] = static_cast<float>(std::min(outside, inside));
    }
  }
  return AlphaMatte(size, size, 1, std::move(m));
}

/// Solid-colour foreground the size of `alpha`.
inline Image solid_image(int height, int width, const Rgb& color) {
  std::vector<float> v(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t i = 0; i < v.size(); i += 3) {
    v[i] = clamp_unit(color.r);
    v[i + 1] = clamp_unit(color.g);
    v[i + 2] = clamp_unit(color.b);
  }
  return Image(height, width, 3, std::move(v));
}

}  // namespace greenmat
