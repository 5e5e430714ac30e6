#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "greenmat/grid.hpp"
#include "greenmat/rng.hpp"

namespace greenmat {

/// Result of colour clustering. Centroids live in 0..255 RGB space.
struct ColorClusters {
  int k = 0;
  std::vector<Rgb> centroids;
  std::vector<std::size_t> counts;
  std::vector<int> assignment;  // per input pixel
  double inertia = 0.0;
  // Inertia of the seeding, then after every centroid update of the
  // winning restart.
  std::vector<double> inertia_history;
  int iterations = 0;
};

struct KMeansOptions {
  int max_iter = 100;
  double tol = 1e-4;  // max centroid movement, 0..255 units
  int restarts = 10;
};

namespace kmeans_detail {

inline double dist2(const Rgb& a, const Rgb& b) {
  const double dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
  return dr * dr + dg * dg + db * db;
}

struct WeightedPoints {
  std::vector<Rgb> points;
  std::vector<double> weights;
  std::vector<std::size_t> pixel_to_point;
};

// Collapses identical colours into weighted points, ordered by colour, so
// the clustering never depends on pixel order.
inline WeightedPoints unique_colors(const Image& img) {
  const std::size_t n = img.pixels();
  const auto d = img.data();
  auto key = [&](std::size_t i) { return std::array<float, 3>{d[3 * i], d[3 * i + 1], d[3 * i + 2]}; };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  WeightedPoints wp;
  wp.pixel_to_point.resize(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const std::size_t i = order[idx];
    if (idx == 0 || key(order[idx - 1]) != key(i)) {
      const auto c = key(i);
      wp.points.push_back({c[0] * 255.0, c[1] * 255.0, c[2] * 255.0});
      wp.weights.push_back(0.0);
    }
    wp.weights.back() += 1.0;
    wp.pixel_to_point[i] = wp.points.size() - 1;
  }
  return wp;
}

inline std::size_t pick_weighted(Rng& rng, const std::vector<double>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double target = rng.uniform() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (target < w[i]) return i;
    target -= w[i];
  }
  // Rounding can walk past the end; return the last positive entry.
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0.0) return i;
  }
  return 0;
}

struct Run {
  std::vector<Rgb> centroids;
  std::vector<int> labels;  // per weighted point
  std::vector<double> history;
  double inertia = 0.0;
  int iterations = 0;
};

inline int nearest(const Rgb& p, const std::vector<Rgb>& c, double* d2_out = nullptr) {
  int best = 0;
  double bd = dist2(p, c[0]);
  for (int j = 1; j < static_cast<int>(c.size()); ++j) {
    const double d = dist2(p, c[j]);
    if (d < bd) {
      bd = d;
      best = j;
    }
  }
  if (d2_out) *d2_out = bd;
  return best;
}

inline Run lloyd(const WeightedPoints& wp, int k, Rng& rng, const KMeansOptions& opt) {
  const std::size_t n = wp.points.size();
  Run run;
  // k-means++ seeding, weighted by multiplicity.
  run.centroids.push_back(wp.points[pick_weighted(rng, wp.weights)]);
  std::vector<double> d2(n);
  while (static_cast<int>(run.centroids.size()) < k) {
    std::vector<double> score(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest(wp.points[i], run.centroids, &d2[i]);
      score[i] = d2[i] * wp.weights[i];
      total += score[i];
    }
    // Fewer distinct colours than k: duplicates are allowed.
    run.centroids.push_back(wp.points[pick_weighted(rng, total > 0.0 ? score : wp.weights)]);
  }

  run.labels.assign(n, 0);
  auto assign = [&] {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d;
      run.labels[i] = nearest(wp.points[i], run.centroids, &d);
      inertia += d * wp.weights[i];
    }
    return inertia;
  };
  run.history.push_back(assign());

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    std::vector<Rgb> sums(k);
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const int l = run.labels[i];
      sums[l].r += wp.points[i].r * wp.weights[i];
      sums[l].g += wp.points[i].g * wp.weights[i];
      sums[l].b += wp.points[i].b * wp.weights[i];
      mass[l] += wp.weights[i];
    }
    std::vector<Rgb> next(k);
    std::vector<bool> taken(n, false);
    for (int j = 0; j < k; ++j) {
      if (mass[j] > 0.0) {
        next[j] = {sums[j].r / mass[j], sums[j].g / mass[j], sums[j].b / mass[j]};
        continue;
      }
      // Empty cluster: move it onto the point farthest from its own centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = taken[i] ? -1.0 : dist2(wp.points[i], run.centroids[run.labels[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      taken[far] = true;
      next[j] = wp.points[far];
    }
    double moved = 0.0;
    for (int j = 0; j < k; ++j) moved = std::max(moved, std::sqrt(dist2(next[j], run.centroids[j])));
    run.centroids = std::move(next);
    ++run.iterations;

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += dist2(wp.points[i], run.centroids[run.labels[i]]) * wp.weights[i];
    run.history.push_back(inertia);
    // Stop right after an update so centroids stay the means of their members.
    if (moved < opt.tol || iter + 1 == opt.max_iter) break;
    run.history.back() = assign();
  }
  run.inertia = run.history.back();
  return run;
}

// Single-point transfers (Hartigan's rule): move a point to another cluster
// whenever that lowers the total inertia once both means are updated. Every
// fixed point of this pass is also a fixed point of Lloyd's iteration, but
// many of Lloyd's local minima are not fixed points here.
inline void transfer_refine(const WeightedPoints& wp, int k, Run& run) {
  const std::size_t n = wp.points.size();
  std::vector<Rgb> sums(k);
  std::vector<double> mass(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int l = run.labels[i];
    sums[l].r += wp.points[i].r * wp.weights[i];
    sums[l].g += wp.points[i].g * wp.weights[i];
    sums[l].b += wp.points[i].b * wp.weights[i];
    mass[l] += wp.weights[i];
  }
  auto mean = [&](int j) {
    if (mass[j] > 0.0) run.centroids[j] = {sums[j].r / mass[j], sums[j].g / mass[j], sums[j].b / mass[j]};
  };
  for (int j = 0; j < k; ++j) mean(j);

  for (std::size_t pass = 0; pass < 4 * n + 4; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int a = run.labels[i];
      const double w = wp.weights[i];
      if (mass[a] <= w) continue;
      const Rgb& p = wp.points[i];
      const double out_cost = w * mass[a] / (mass[a] - w) * dist2(p, run.centroids[a]);
      int to = a;
      double best_gain = 1e-9 * std::max(1.0, out_cost);
      for (int b = 0; b < k; ++b) {
        if (b == a) continue;
        const double in_cost = mass[b] > 0.0 ? w * mass[b] / (mass[b] + w) * dist2(p, run.centroids[b]) : 0.0;
        if (out_cost - in_cost > best_gain) {
          best_gain = out_cost - in_cost;
          to = b;
        }
      }
      if (to == a) continue;
      sums[a] = {sums[a].r - p.r * w, sums[a].g - p.g * w, sums[a].b - p.b * w};
      sums[to] = {sums[to].r + p.r * w, sums[to].g + p.g * w, sums[to].b + p.b * w};
      mass[a] -= w;
      mass[to] += w;
      run.labels[i] = to;
      mean(a);
      mean(to);
      changed = true;
    }
    if (!changed) break;
    double inertia = 0.0;
    for (std::size_t j = 0; j < n; ++j) inertia += dist2(wp.points[j], run.centroids[run.labels[j]]) * wp.weights[j];
    // Guard against rounding: keep the history monotone.
    run.history.push_back(std::min(inertia, run.history.back()));
  }
  run.inertia = run.history.back();
}

}  // namespace kmeans_detail

/// Lloyd's algorithm with k-means++ seeding over the colours of a 3-channel
/// image, polished with single-point transfers. The best of `opt.restarts` seedings (lowest inertia) is returned.
/// When the image has fewer distinct colours than k, duplicate centroids with
/// zero members are allowed.
inline ColorClusters kmeans_colors(const Image& img, int k, Rng& rng, const KMeansOptions& opt = {}) {
  require_channels(img, 3, "kmeans_colors");
  if (img.empty()) throw Error("kmeans_colors: empty input");
  if (k < 1) throw Error("kmeans_colors: k must be at least 1");
  if (static_cast<std::size_t>(k) > img.pixels()) throw Error("kmeans_colors: k exceeds pixel count");
  if (opt.restarts < 1 || opt.max_iter < 0) throw Error("kmeans_colors: invalid options");

  const auto wp = kmeans_detail::unique_colors(img);
  kmeans_detail::Run best;
  for (int r = 0; r < opt.restarts; ++r) {
    auto run = kmeans_detail::lloyd(wp, k, rng, opt);
    kmeans_detail::transfer_refine(wp, k, run);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }

  ColorClusters out;
  out.k = k;
  out.centroids = best.centroids;
  out.counts.assign(k, 0);
  out.assignment.resize(img.pixels());
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    const int l = best.labels[wp.pixel_to_point[i]];
    out.assignment[i] = l;
    ++out.counts[l];
  }
  out.inertia = best.inertia;
  out.inertia_history = std::move(best.history);
  out.iterations = best.iterations;
  return out;
}

inline ColorClusters kmeans_colors(const Image& img, int k, Rng& rng, int max_iter, double tol) {
  KMeansOptions opt;
  opt.max_iter = max_iter;
  opt.tol = tol;
  return kmeans_colors(img, k, rng, opt);
}

/// Centroid of the most populated cluster; ties go to the lower index.
inline Rgb dominant_color(const ColorClusters& c) {
  if (c.centroids.empty()) throw Error("dominant_color: empty input");
  std::size_t best = 0;
  for (std::size_t j = 1; j < c.counts.size(); ++j) {
    if (c.counts[j] > c.counts[best]) best = j;
  }
  return c.centroids[best];
}

inline double rgb_distance(const Rgb& a, const Rgb& b) { return std::sqrt(kmeans_detail::dist2(a, b)); }

}  // namespace greenmat
