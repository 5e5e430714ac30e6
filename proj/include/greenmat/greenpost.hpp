#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <vector>

#include "greenmat/grid.hpp"
#include "greenmat/kmeans.hpp"
#include "greenmat/rng.hpp"

namespace greenmat {

/// Reference canvas colour in 0..255 RGB.
struct GreenReference {
  Rgb rgb{0.0, 255.0, 0.0};

  GreenReference() = default;
  explicit GreenReference(Rgb c) : rgb(c) {
    for (double v : {c.r, c.g, c.b}) {
      if (!(v >= 0.0 && v <= 255.0)) throw Error("GreenReference: components must lie in [0, 255]");
    }
  }
};

inline constexpr int kGsgDefaultK = 5;
inline constexpr int kBackgroundDefaultK = 3;

/// Green-screen generation quality: Euclidean distance (0..255 RGB) between
/// the dominant K-means colour of the whole image and the reference green.
/// Lower is better.
inline double gsg_score(const Image& img, const GreenReference& ref = {}, int k = kGsgDefaultK,
                        Rng rng = Rng(0), const KMeansOptions& opt = {}) {
  const auto clusters = kmeans_colors(img, std::min<std::size_t>(k, img.pixels()), rng, opt);
  return rgb_distance(dominant_color(clusters), ref.rgb);
}

/// Clusters the colours where coarse < 0.5 and paints every pixel with
/// coarse >= 0.5 in the dominant background colour. Background pixels keep
/// their own values.
inline Image estimate_clean_background(const Image& img, const AlphaMatte& coarse, int k = kBackgroundDefaultK,
                                       Rng rng = Rng(0)) {
  require_channels(img, 3, "estimate_clean_background");
  require_same_shape(img, coarse, "estimate_clean_background");
  std::vector<float> bg;
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    if (coarse.data()[i] < 0.5f) {
      bg.insert(bg.end(), img.data().begin() + 3 * i, img.data().begin() + 3 * i + 3);
    }
  }
  if (bg.empty()) throw Error("no background prior");
  const int n = static_cast<int>(bg.size() / 3);
  const Image samples(n, 1, 3, std::move(bg));
  const Rgb fill = dominant_color(kmeans_colors(samples, std::min(k, n), rng));

  std::vector<float> out(img.data().begin(), img.data().end());
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    if (coarse.data()[i] >= 0.5f) {
      out[3 * i] = clamp_unit(fill.r / 255.0);
      out[3 * i + 1] = clamp_unit(fill.g / 255.0);
      out[3 * i + 2] = clamp_unit(fill.b / 255.0);
    }
  }
  return Image(img.height(), img.width(), 3, std::move(out));
}

struct RefineParams {
  int kmeans_k = kBackgroundDefaultK;
  std::uint64_t seed = 0;
  // Colour difference (unit RGB) treated as fully opaque when no foreground
  // colour estimate is available: 100/255 per channel on the diagonal.
  double saturation_distance = 100.0 / 255.0 * std::numbers::sqrt3;
  int smooth_iters = 2;
  double fg_core_threshold = 0.9;
  // Width in pixels of the unknown band on either side of the coarse edge.
  int band_radius = 10;
  // Below this |F - B| (unit RGB) the foreground cannot be told apart from
  // the canvas and the pixel falls back to the saturation rule.
  double min_contrast = 0.1;

  void validate() const {
    if (kmeans_k < 1) throw Error("RefineParams: kmeans_k must be at least 1");
    if (!(saturation_distance > 0.0)) throw Error("RefineParams: saturation_distance must be positive");
    if (smooth_iters < 0) throw Error("RefineParams: smooth_iters must be non-negative");
    if (!(fg_core_threshold > 0.0 && fg_core_threshold <= 1.0)) {
      throw Error("RefineParams: fg_core_threshold must lie in (0, 1]");
    }
    if (band_radius < 0) throw Error("RefineParams: band_radius must be non-negative");
    if (!(min_contrast >= 0.0)) throw Error("RefineParams: min_contrast must be non-negative");
  }
};

struct RefineResult {
  AlphaMatte alpha;
  Image background;
  std::size_t core_pixels = 0;
  // Unknown-band pixels whose foreground estimate sits on the canvas colour
  // (e.g. a green object); their alpha is unreliable.
  std::size_t low_contrast_pixels = 0;
};

namespace greenpost_detail {

inline constexpr int kUnreached = std::numeric_limits<int>::max();

// Multi-source BFS over 8-neighbours. Returns chessboard distance to the
// nearest source and, per pixel, the index of that source.
struct Propagation {
  std::vector<int> dist;
  std::vector<std::size_t> source;
};

inline Propagation propagate(int h, int w, const std::vector<char>& is_source) {
  const std::size_t n = static_cast<std::size_t>(h) * w;
  Propagation p{std::vector<int>(n, kUnreached), std::vector<std::size_t>(n, 0)};
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_source[i]) {
      p.dist[i] = 0;
      p.source[i] = i;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int y = static_cast<int>(i / w), x = static_cast<int>(i % w);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int yy = y + dy, xx = x + dx;
        if ((dy == 0 && dx == 0) || yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
        const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
        if (p.dist[j] != kUnreached) continue;
        p.dist[j] = p.dist[i] + 1;
        p.source[j] = p.source[i];
        queue.push_back(j);
      }
    }
  }
  return p;
}

}  // namespace greenpost_detail

/// Turns a coarse mask into a soft matte using the known canvas.
///
/// The clean background plate B comes from estimate_clean_background with the
/// coarse foreground dilated by band_radius. Foreground colour F is taken from
/// the nearest core pixel (coarse >= fg_core_threshold, more than band_radius
/// from the coarse background). Inside the unknown band the compositing
/// relation I = aF + (1 - a)B is solved by projecting I - B onto F - B. Where
/// |F - B| is below min_contrast the raw background difference
/// clamp(|I - B| / saturation_distance, 0, 1) is used instead, forced to 1
/// where coarse >= fg_core_threshold and the difference saturates. Finally a 3x3
/// box filter runs smooth_iters times over pixels with 0 < a < 1.
inline RefineResult green_post_detailed(const Image& img, const AlphaMatte& coarse, const RefineParams& params = {}) {
  params.validate();
  require_channels(img, 3, "green_post");
  require_same_shape(img, coarse, "green_post");
  const int h = img.height(), w = img.width();
  const std::size_t n = img.pixels();
  const auto I = img.data();
  const auto C = coarse.data();

  std::vector<char> fg(n), bg(n);
  for (std::size_t i = 0; i < n; ++i) {
    fg[i] = C[i] >= 0.5f;
    bg[i] = !fg[i];
  }
  const auto to_fg = greenpost_detail::propagate(h, w, fg);
  const auto to_bg = greenpost_detail::propagate(h, w, bg);

  // Plate: fill the coarse foreground plus the outer half of the band.
  std::vector<float> plate_mask(n);
  bool any_bg = false;
  for (std::size_t i = 0; i < n; ++i) {
    plate_mask[i] = to_fg.dist[i] <= params.band_radius ? 1.0f : 0.0f;
    any_bg = any_bg || plate_mask[i] == 0.0f;
  }
  Image plate = any_bg ? estimate_clean_background(img, AlphaMatte(h, w, 1, plate_mask), params.kmeans_k,
                                                   Rng(params.seed))
                       : estimate_clean_background(img, coarse, params.kmeans_k, Rng(params.seed));
  const auto B = plate.data();

  std::vector<char> core(n, 0);
  std::size_t core_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = C[i] >= params.fg_core_threshold && to_bg.dist[i] > params.band_radius;
    core_count += core[i];
  }
  if (core_count == 0) {
    for (std::size_t i = 0; i < n; ++i) {
      core[i] = C[i] >= params.fg_core_threshold;
      core_count += core[i];
    }
  }
  const auto to_core = greenpost_detail::propagate(h, w, core);

  RefineResult result;
  result.core_pixels = core_count;
  std::vector<double> alpha(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (plate_mask[i] == 0.0f && any_bg) continue;  // untouched background, I == B
    if (core[i]) {
      alpha[i] = 1.0;
      continue;
    }
    double d[3], v[3];
    double dd = 0.0, vv = 0.0, dv = 0.0;
    const bool have_fg = to_core.dist[i] != greenpost_detail::kUnreached;
    const std::size_t s = to_core.source[i];
    for (int c = 0; c < 3; ++c) {
      d[c] = static_cast<double>(I[3 * i + c]) - B[3 * i + c];
      v[c] = have_fg ? static_cast<double>(I[3 * s + c]) - B[3 * i + c] : 0.0;
      dd += d[c] * d[c];
      vv += v[c] * v[c];
      dv += d[c] * v[c];
    }
    if (std::sqrt(vv) >= params.min_contrast) {
      alpha[i] = std::clamp(dv / vv, 0.0, 1.0);
      continue;
    }
    // No usable foreground colour: saturating background difference, with
    // confident coarse pixels forced opaque once the difference saturates.
    const double diff = std::sqrt(dd);
    alpha[i] = C[i] >= params.fg_core_threshold && diff > params.saturation_distance
                   ? 1.0
                   : std::clamp(diff / params.saturation_distance, 0.0, 1.0);
    ++result.low_contrast_pixels;
  }

  std::vector<char> band(n);
  for (std::size_t i = 0; i < n; ++i) band[i] = alpha[i] > 0.0 && alpha[i] < 1.0;
  for (int it = 0; it < params.smooth_iters; ++it) {
    std::vector<double> next = alpha;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (!band[i]) continue;
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -1; dx <= 1; ++dx) acc += alpha[static_cast<std::size_t>(yy) * w + std::clamp(x + dx, 0, w - 1)];
        }
        next[i] = acc / 9.0;
      }
    }
    alpha = std::move(next);
  }

  std::vector<float> out(n);
  std::transform(alpha.begin(), alpha.end(), out.begin(), clamp_unit);
  result.alpha = AlphaMatte(h, w, 1, std::move(out));
  result.background = std::move(plate);
  return result;
}

inline AlphaMatte green_post(const Image& img, const AlphaMatte& coarse, const RefineParams& params = {}) {
  return green_post_detailed(img, coarse, params).alpha;
}

}  // namespace greenmat
