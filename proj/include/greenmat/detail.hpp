#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "greenmat/grid.hpp"

namespace greenmat {

struct SobelResponse {
  int height = 0;
  int width = 0;
  std::vector<double> gx;
  std::vector<double> gy;
};

namespace sobel_detail {

// Correlation kernels: gx grows left to right, gy top to bottom.
inline constexpr int kX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
inline constexpr int kY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

inline int clampi(int v, int hi) { return std::clamp(v, 0, hi); }

}  // namespace sobel_detail

/// 3x3 Sobel responses with replicate border padding.
inline SobelResponse sobel_response(const Image& gray) {
  require_channels(gray, 1, "sobel_response");
  if (gray.empty()) throw Error("sobel_response: image smaller than 1x1");
  const int h = gray.height(), w = gray.width();
  SobelResponse r{h, w, std::vector<double>(gray.pixels()), std::vector<double>(gray.pixels())};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sx = 0.0, sy = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = sobel_detail::clampi(y + dy, h - 1);
        for (int dx = -1; dx <= 1; ++dx) {
          const double v = gray.at(yy, sobel_detail::clampi(x + dx, w - 1));
          sx += sobel_detail::kX[dy + 1][dx + 1] * v;
          sy += sobel_detail::kY[dy + 1][dx + 1] * v;
        }
      }
      r.gx[static_cast<std::size_t>(y) * w + x] = sx;
      r.gy[static_cast<std::size_t>(y) * w + x] = sy;
    }
  }
  return r;
}

/// |gx + gy| * I * M in double precision.
inline std::vector<double> high_frequency_values(const Image& gray, const AlphaMatte& mask) {
  require_channels(gray, 1, "high_frequency");
  require_same_shape(gray, mask, "high_frequency");
  const SobelResponse s = sobel_response(gray);
  std::vector<double> out(gray.pixels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::abs(s.gx[i] + s.gy[i]) * gray.data()[i] * mask.data()[i];
  }
  return out;
}

/// Edge prior restricted to the object: |gx + gy| * I * M.
inline HighFreqMap high_frequency(const Image& gray, const AlphaMatte& mask) {
  const auto v = high_frequency_values(gray, mask);
  return HighFreqMap(gray.height(), gray.width(), 1, std::vector<float>(v.begin(), v.end()));
}

/// Mean absolute difference between two edge maps.
inline double detail_loss(const HighFreqMap& a, const HighFreqMap& b) {
  require_same_shape(a, b, "detail_loss");
  if (a.empty()) throw Error("detail_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
  }
  return acc / static_cast<double>(a.size());
}

/// detail_loss(high_frequency(gray, mask), target) without rounding the edge
/// map to float.
inline double detail_loss_from_gray(const Image& gray, const AlphaMatte& mask, const HighFreqMap& target) {
  require_same_shape(gray, target, "detail_loss");
  const auto hf = high_frequency_values(gray, mask);
  double acc = 0.0;
  for (std::size_t i = 0; i < hf.size(); ++i) acc += std::abs(hf[i] - target.data()[i]);
  return acc / static_cast<double>(hf.size());
}

/// Gradient of detail_loss(high_frequency(gray, mask), target) with respect
/// to the gray image, chained through the Sobel responses. Kinks of |.|
/// contribute zero.
inline std::vector<double> detail_loss_grad(const Image& gray, const AlphaMatte& mask, const HighFreqMap& target) {
  require_same_shape(gray, target, "detail_loss_grad");
  const auto hf = high_frequency_values(gray, mask);
  const SobelResponse s = sobel_response(gray);
  const int h = gray.height(), w = gray.width();
  const double n = static_cast<double>(gray.pixels());
  auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };

  std::vector<double> grad(gray.pixels(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const double outer = sign(hf[p] - target.data()[p]) / n;
      if (outer == 0.0) continue;
      const double resp = s.gx[p] + s.gy[p];
      const double im = static_cast<double>(gray.data()[p]) * mask.data()[p];
      // d|resp| * I * M / dI_p through the pointwise factor.
      grad[p] += outer * std::abs(resp) * mask.data()[p];
      // ... and through the response, scattered back over the stencil.
      const double through = outer * sign(resp) * im;
      if (through == 0.0) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = sobel_detail::clampi(y + dy, h - 1);
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = sobel_detail::clampi(x + dx, w - 1);
          const int k = sobel_detail::kX[dy + 1][dx + 1] + sobel_detail::kY[dy + 1][dx + 1];
          grad[static_cast<std::size_t>(yy) * w + xx] += through * k;
        }
      }
    }
  }
  return grad;
}

}  // namespace greenmat
