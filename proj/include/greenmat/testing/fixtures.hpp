#pragma once

// Random fixture generators shared by the verification suite, the unit tests
// and the acceptance runner. Every generator is a pure function of the Rng.

#include <cmath>
#include <vector>

#include "greenmat/attention.hpp"
#include "greenmat/composer.hpp"
#include "greenmat/detail.hpp"
#include "greenmat/grid.hpp"
#include "greenmat/rng.hpp"

namespace greenmat::testing {

inline std::vector<float> uniform_values(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

inline AlphaMatte random_matte(Rng& rng, int h, int w, double lo = 0.0, double hi = 1.0) {
  return AlphaMatte(h, w, 1, uniform_values(rng, static_cast<std::size_t>(h) * w, lo, hi));
}

inline Image random_image(Rng& rng, int h, int w, int channels, double lo = 0.0, double hi = 1.0) {
  return Image(h, w, channels, uniform_values(rng, static_cast<std::size_t>(h) * w * channels, lo, hi));
}

inline LatentGrid random_latent(Rng& rng, int h, int w, int c) {
  std::vector<double> v(static_cast<std::size_t>(h) * w * c);
  for (double& x : v) x = rng.normal();
  return LatentGrid(h, w, c, std::move(v));
}

// Offsets each base value by +-[min_gap, max_gap], picking the sign that keeps
// the result inside [0, 1].
inline std::vector<float> offset_away(Rng& rng, std::span<const float> base, double min_gap, double max_gap) {
  std::vector<float> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double gap = rng.uniform(min_gap, max_gap);
    double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    if (base[i] + sign * gap > 1.0 || base[i] + sign * gap < 0.0) sign = -sign;
    out[i] = static_cast<float>(base[i] + sign * gap);
  }
  return out;
}

/// Attention layers (8x8 and 4x4) that sit at least `gap` away from 1 - M
/// at every pixel, for a mask with values in [0.3, 0.7].
struct GreenLossInstance {
  AlphaMatte mask;
  std::vector<AttentionMap> layers;
};

inline GreenLossInstance green_loss_instance(Rng& rng, double gap = 0.1) {
  GreenLossInstance inst{random_matte(rng, 8, 8, 0.3, 0.7), {}};
  for (int size : {8, 4}) {
    const AlphaMatte m = resize_area(inst.mask, size, size);
    std::vector<float> target(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) target[i] = 1.0f - m.data()[i];
    inst.layers.emplace_back(size, size, 1, offset_away(rng, target, gap, gap + 0.2));
  }
  return inst;
}

/// Gray image, mask and target edge map with every |gx + gy| and every
/// |H - target| at least `gap` from zero.
struct DetailInstance {
  Image gray;
  AlphaMatte mask;
  HighFreqMap target;
};

inline DetailInstance detail_instance(Rng& rng, int size = 8, double gap = 0.1) {
  for (;;) {
    Image gray = random_image(rng, size, size, 1, 0.1, 0.9);
    const SobelResponse s = sobel_response(gray);
    bool ok = true;
    for (std::size_t i = 0; i < s.gx.size() && ok; ++i) ok = std::abs(s.gx[i] + s.gy[i]) >= gap;
    if (!ok) continue;
    AlphaMatte mask = random_matte(rng, size, size, 0.3, 1.0);
    const HighFreqMap h = high_frequency(gray, mask);
    std::vector<float> target(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double off = rng.uniform(gap, gap + 0.3);
      const double sign = (h.data()[i] < gap + 0.3 || rng.uniform() < 0.5) ? 1.0 : -1.0;
      target[i] = static_cast<float>(h.data()[i] + sign * off);
    }
    return {std::move(gray), std::move(mask), HighFreqMap(size, size, 1, std::move(target))};
  }
}

/// Prediction in [0.1, 0.9] with every |pred - gt| in [gap, gap + 0.3].
inline std::pair<AlphaMatte, AlphaMatte> latent_loss_instance(Rng& rng, int size = 8, double gap = 0.1) {
  AlphaMatte pred = random_matte(rng, size, size, 0.1, 0.9);
  AlphaMatte gt(size, size, 1, offset_away(rng, pred.data(), gap, gap + 0.3));
  return {std::move(pred), std::move(gt)};
}

/// Soft-edged synthetic foreground composited on pure green, with the
/// binarized ground truth as the coarse mask. Even indices are discs, odd
/// ones rings; ramp width cycles through 2..8 px. The foreground colour is at
/// least `min_green_distance` (unit RGB) from green and carries a gentle
/// horizontal shading.
struct GreenScreenFixture {
  AlphaMatte alpha;
  Image composite;
  AlphaMatte coarse;
  double ramp = 0.0;
  Rgb color;
};

inline GreenScreenFixture green_screen_fixture(Rng& rng, int index, int size = 512,
                                               double min_green_distance = 120.0 / 255.0) {
  GreenScreenFixture f;
  f.ramp = 2.0 + index % 7;
  const double half = size / 2.0;
  if (index % 2 == 0) {
    const double radius = rng.uniform(0.25, 0.75) * (half - f.ramp - 8.0);
    f.alpha = make_soft_disc(size, radius, f.ramp);
  } else {
    const double outer = rng.uniform(0.55, 0.85) * (half - f.ramp - 8.0);
    const double inner = rng.uniform(0.3, 0.6) * outer;
    f.alpha = make_soft_ring(size, inner, outer, f.ramp);
  }
  const Rgb green = kCanvasGreen;
  do {
    f.color = {rng.uniform(), rng.uniform(), rng.uniform()};
  } while (std::sqrt((f.color.r - green.r) * (f.color.r - green.r) + (f.color.g - green.g) * (f.color.g - green.g) +
                     (f.color.b - green.b) * (f.color.b - green.b)) < min_green_distance + 0.05);
  // +-0.05 shading keeps every pixel at least min_green_distance from green.
  std::vector<float> fg(static_cast<std::size_t>(size) * size * 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double shade = 0.05 * (2.0 * x / (size - 1) - 1.0) / std::sqrt(3.0);
      float* px = &fg[(static_cast<std::size_t>(y) * size + x) * 3];
      px[0] = clamp_unit(f.color.r + shade);
      px[1] = clamp_unit(f.color.g + shade);
      px[2] = clamp_unit(f.color.b + shade);
    }
  }
  f.composite = composite_on_green(Image(size, size, 3, std::move(fg)), f.alpha);
  std::vector<float> coarse(f.alpha.size());
  for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = f.alpha.data()[i] >= 0.5f ? 1.0f : 0.0f;
  f.coarse = AlphaMatte(size, size, 1, std::move(coarse));
  return f;
}

}  // namespace greenmat::testing
