#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "greenmat/grid.hpp"

namespace greenmat {

namespace detail_resample {

struct Tap {
  int index;
  double weight;
};

// Per-output-sample taps along one axis. Shrinking averages the covered input
// interval by overlap length; growing interpolates linearly between
// half-pixel-centred samples with clamped ends.
inline std::vector<std::vector<Tap>> axis_taps(int in, int out) {
  std::vector<std::vector<Tap>> taps(out);
  if (in == out) {
    for (int i = 0; i < out; ++i) taps[i].push_back({i, 1.0});
    return taps;
  }
  const double scale = static_cast<double>(in) / out;
  if (out < in) {
    for (int i = 0; i < out; ++i) {
      const double lo = i * scale;
      const double hi = (i + 1) * scale;
      const int first = static_cast<int>(std::floor(lo));
      const int last = std::min(in - 1, static_cast<int>(std::ceil(hi)) - 1);
      for (int j = first; j <= last; ++j) {
        const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
        if (overlap > 0.0) taps[i].push_back({j, overlap / scale});
      }
    }
    return taps;
  }
  for (int i = 0; i < out; ++i) {
    const double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
    const int j0 = static_cast<int>(std::floor(src));
    const int j1 = std::min(j0 + 1, in - 1);
    const double f = src - j0;
    taps[i].push_back({j0, 1.0 - f});
    if (f > 0.0) taps[i].push_back({j1, f});
  }
  return taps;
}

// Separable resample of an interleaved H x W x C buffer.
inline std::vector<double> resample_buffer(std::span<const float> src, int h, int w, int c,
                                           int out_h, int out_w) {
  const auto row_taps = axis_taps(h, out_h);
  const auto col_taps = axis_taps(w, out_w);

  std::vector<double> tmp(static_cast<std::size_t>(out_h) * w * c, 0.0);
  for (int y = 0; y < out_h; ++y) {
    for (const Tap& t : row_taps[y]) {
      const float* s = src.data() + static_cast<std::size_t>(t.index) * w * c;
      double* d = tmp.data() + static_cast<std::size_t>(y) * w * c;
      for (int i = 0; i < w * c; ++i) d[i] += t.weight * s[i];
    }
  }
  std::vector<double> out(static_cast<std::size_t>(out_h) * out_w * c, 0.0);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double* d = out.data() + (static_cast<std::size_t>(y) * out_w + x) * c;
      for (const Tap& t : col_taps[x]) {
        const double* s = tmp.data() + (static_cast<std::size_t>(y) * w + t.index) * c;
        for (int ch = 0; ch < c; ++ch) d[ch] += t.weight * s[ch];
      }
    }
  }
  return out;
}

}  // namespace detail_resample

/// Resamples a matte to (out_h, out_w): area averaging along shrinking axes,
/// bilinear interpolation along growing ones.
template <class P>
Grid<P> resize_area(const Grid<P>& src, int out_h, int out_w) {
  if (src.empty()) throw Error("empty input");
  if (out_h < 1 || out_w < 1) throw Error("resize_area: output size must be at least 1x1");
  const auto buf = detail_resample::resample_buffer(src.data(), src.height(), src.width(),
                                                    src.channels(), out_h, out_w);
  std::vector<float> out(buf.size());
  std::transform(buf.begin(), buf.end(), out.begin(), clamp_unit);
  return Grid<P>(out_h, out_w, src.channels(), std::move(out));
}

/// BT.601 luma.
inline Image to_gray(const Image& img) {
  require_channels(img, 3, "to_gray");
  std::vector<float> out(img.pixels());
  const auto d = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double luma = 0.299 * d[3 * i] + 0.587 * d[3 * i + 1] + 0.114 * d[3 * i + 2];
    out[i] = clamp_unit(luma);
  }
  return Image(img.height(), img.width(), 1, std::move(out));
}

/// Min-max normalises one latent channel into a gray image so latent-space
/// features can flow through the image-space edge operators. A flat channel
/// maps to all zeros.
inline Image latent_channel_to_gray(const LatentGrid& z, int channel) {
  if (channel < 0 || channel >= z.channels()) throw Error("latent_channel_to_gray: channel out of range");
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < z.pixels(); ++i) {
    const double v = z.data()[i * z.channels() + channel];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<float> out(z.pixels(), 0.0f);
  if (hi > lo) {
    for (std::size_t i = 0; i < z.pixels(); ++i) {
      out[i] = clamp_unit((z.data()[i * z.channels() + channel] - lo) / (hi - lo));
    }
  }
  return Image(z.height(), z.width(), 1, std::move(out));
}

}  // namespace greenmat
