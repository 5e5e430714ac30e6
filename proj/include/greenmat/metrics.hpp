#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenmat/grid.hpp"

namespace greenmat {

// Matting evaluation metrics. SAD, Grad and Conn follow the benchmark habit
// of reporting sums divided by 1000; the *_raw variants return the plain sums.

inline constexpr double kMetricScale = 1000.0;
inline constexpr double kGradSigma = 1.4;
inline constexpr double kConnStep = 0.1;

inline double sad_raw(const AlphaMatte& pred, const AlphaMatte& gt) {
  require_same_shape(pred, gt, "sad");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(static_cast<double>(pred.data()[i]) - gt.data()[i]);
  return acc;
}

inline double sad(const AlphaMatte& pred, const AlphaMatte& gt) { return sad_raw(pred, gt) / kMetricScale; }

inline double mse(const AlphaMatte& pred, const AlphaMatte& gt) {
  require_same_shape(pred, gt, "mse");
  if (pred.empty()) throw Error("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred.data()[i]) - gt.data()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

namespace metrics_detail {

// 1-D factors of the Gaussian-derivative kernel used by the standard Grad
// metric: support half-width ceil(sigma * sqrt(-2 ln(sqrt(2 pi) sigma 0.01))),
// 2-D kernel g(row) * g'(col) scaled to unit L2 norm.
struct GaussDerivative {
  int half = 0;
  std::vector<double> smooth;  // g(u)
  std::vector<double> deriv;   // g'(u) / norm
};

inline GaussDerivative gauss_derivative(double sigma) {
  GaussDerivative k;
  const double eps = 1e-2;
  k.half = static_cast<int>(std::ceil(sigma * std::sqrt(-2.0 * std::log(std::sqrt(2.0 * std::numbers::pi) * sigma * eps))));
  double ss = 0.0, dd = 0.0;
  for (int u = -k.half; u <= k.half; ++u) {
    const double g = std::exp(-u * u / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    k.smooth.push_back(g);
    k.deriv.push_back(-u * g / (sigma * sigma));
    ss += g * g;
    dd += k.deriv.back() * k.deriv.back();
  }
  const double norm = std::sqrt(ss * dd);
  for (double& v : k.deriv) v /= norm;
  return k;
}

// Convolution along one axis with replicate borders.
inline std::vector<double> convolve_axis(const std::vector<double>& src, int h, int w, const std::vector<double>& kernel,
                                         bool along_x) {
  const int half = static_cast<int>(kernel.size() / 2);
  std::vector<double> out(src.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t) {
        const double k = kernel[t + half];
        const int yy = along_x ? y : std::clamp(y - t, 0, h - 1);
        const int xx = along_x ? std::clamp(x - t, 0, w - 1) : x;
        acc += k * src[static_cast<std::size_t>(yy) * w + xx];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

inline std::vector<double> gradient_magnitude(const AlphaMatte& m, const GaussDerivative& k) {
  const std::vector<double> src(m.data().begin(), m.data().end());
  const int h = m.height(), w = m.width();
  const auto gx = convolve_axis(convolve_axis(src, h, w, k.smooth, false), h, w, k.deriv, true);
  const auto gy = convolve_axis(convolve_axis(src, h, w, k.smooth, true), h, w, k.deriv, false);
  std::vector<double> mag(src.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
  return mag;
}

// 4-connected labelling in row-major scan order; returns the pixels of the
// largest component (ties: the component discovered first).
inline std::vector<char> largest_component(const std::vector<char>& on, int h, int w) {
  const std::size_t n = on.size();
  std::vector<int> label(n, -1);
  std::vector<std::size_t> stack;
  int best_label = -1;
  std::size_t best_size = 0;
  int next = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (!on[start] || label[start] >= 0) continue;
    std::size_t size = 0;
    label[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int y = static_cast<int>(i / w), x = static_cast<int>(i % w);
      const std::size_t nb[4] = {y > 0 ? i - w : n, y + 1 < h ? i + w : n, x > 0 ? i - 1 : n, x + 1 < w ? i + 1 : n};
      for (std::size_t j : nb) {
        if (j < n && on[j] && label[j] < 0) {
          label[j] = next;
          stack.push_back(j);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best_label = next;
    }
    ++next;
  }
  std::vector<char> omega(n, 0);
  for (std::size_t i = 0; i < n; ++i) omega[i] = best_label >= 0 && label[i] == best_label;
  return omega;
}

}  // namespace metrics_detail

/// Sum of squared differences of Gaussian-derivative gradient magnitudes.
inline double grad_metric_raw(const AlphaMatte& pred, const AlphaMatte& gt, double sigma = kGradSigma) {
  require_same_shape(pred, gt, "grad_metric");
  if (!(sigma > 0.0)) throw Error("grad_metric: sigma must be positive");
  const auto k = metrics_detail::gauss_derivative(sigma);
  const auto a = metrics_detail::gradient_magnitude(pred, k);
  const auto b = metrics_detail::gradient_magnitude(gt, k);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

inline double grad_metric(const AlphaMatte& pred, const AlphaMatte& gt, double sigma = kGradSigma) {
  return grad_metric_raw(pred, gt, sigma) / kMetricScale;
}

/// Connectivity error: thresholds step, 2 step, ..., 1; at each, the largest
/// 4-connected component of the jointly-above-threshold region defines where
/// connectivity is still intact. A pixel's level l is the last threshold
/// before it dropped out (1 if never). phi = 1 - d [d >= 0.15] with
/// d = alpha - l, summed as |phi_pred - phi_gt|.
inline double conn_metric_raw(const AlphaMatte& pred, const AlphaMatte& gt, double step = kConnStep) {
  require_same_shape(pred, gt, "conn_metric");
  if (!(step > 0.0 && step < 1.0)) throw Error("conn_metric: step must lie in (0, 1)");
  const int h = pred.height(), w = pred.width();
  const std::size_t n = pred.size();
  const int count = static_cast<int>(std::floor(1.0 / step + 1e-9));
  std::vector<double> level(n, -1.0);
  std::vector<char> on(n);
  for (int i = 1; i <= count; ++i) {
    const double theta = i * step;
    for (std::size_t p = 0; p < n; ++p) on[p] = pred.data()[p] >= theta && gt.data()[p] >= theta;
    const auto omega = metrics_detail::largest_component(on, h, w);
    const double prev = (i - 1) * step;
    for (std::size_t p = 0; p < n; ++p) {
      if (level[p] == -1.0 && !omega[p]) level[p] = prev;
    }
  }
  double acc = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double l = level[p] == -1.0 ? 1.0 : level[p];
    const double dp = pred.data()[p] - l, dg = gt.data()[p] - l;
    const double phi_p = 1.0 - (dp >= 0.15 ? dp : 0.0);
    const double phi_g = 1.0 - (dg >= 0.15 ? dg : 0.0);
    acc += std::abs(phi_p - phi_g);
  }
  return acc;
}

inline double conn_metric(const AlphaMatte& pred, const AlphaMatte& gt, double step = kConnStep) {
  return conn_metric_raw(pred, gt, step) / kMetricScale;
}

struct MetricValues {
  double sad = 0.0;
  double mse = 0.0;
  double grad = 0.0;
  double conn = 0.0;
};

struct ImageMetrics {
  std::string name;
  MetricValues reported;  // SAD/Grad/Conn divided by 1000
  MetricValues raw;       // plain sums (mse is identical in both)
};

struct MetricParams {
  double sigma = kGradSigma;
  double conn_step = kConnStep;
};

inline ImageMetrics evaluate_pair(std::string name, const AlphaMatte& pred, const AlphaMatte& gt,
                                  const MetricParams& p = {}) {
  ImageMetrics m;
  m.name = std::move(name);
  m.raw.sad = sad_raw(pred, gt);
  m.raw.mse = mse(pred, gt);
  m.raw.grad = grad_metric_raw(pred, gt, p.sigma);
  m.raw.conn = conn_metric_raw(pred, gt, p.conn_step);
  m.reported = {m.raw.sad / kMetricScale, m.raw.mse, m.raw.grad / kMetricScale, m.raw.conn / kMetricScale};
  return m;
}

struct MetricsReport {
  MetricValues summary;  // mean of per_image reported values
  std::vector<ImageMetrics> per_image;

  static MetricsReport from(std::vector<ImageMetrics> items) {
    MetricsReport r;
    r.per_image = std::move(items);
    if (r.per_image.empty()) return r;
    for (const auto& m : r.per_image) {
      r.summary.sad += m.reported.sad;
      r.summary.mse += m.reported.mse;
      r.summary.grad += m.reported.grad;
      r.summary.conn += m.reported.conn;
    }
    const double n = static_cast<double>(r.per_image.size());
    r.summary.sad /= n;
    r.summary.mse /= n;
    r.summary.grad /= n;
    r.summary.conn /= n;
    return r;
  }

  nlohmann::json to_json() const {
    auto values = [](const MetricValues& v) {
      return nlohmann::json{{"sad", v.sad}, {"mse", v.mse}, {"grad", v.grad}, {"conn", v.conn}};
    };
    nlohmann::json j;
    j["summary"] = values(summary);
    j["per_image"] = nlohmann::json::array();
    for (const auto& m : per_image) {
      auto item = values(m.reported);
      item["name"] = m.name;
      item["raw"] = values(m.raw);
      j["per_image"].push_back(std::move(item));
    }
    return j;
  }

  std::string to_table() const {
    std::size_t name_w = 7;
    for (const auto& m : per_image) name_w = std::max(name_w, m.name.size());
    std::string out;
    char line[512];
    auto row = [&](const std::string& name, const MetricValues& v) {
      std::snprintf(line, sizeof line, "%-*s %12.6f %12.6f %12.6f %12.6f\n", static_cast<int>(name_w), name.c_str(),
                    v.sad, v.mse, v.grad, v.conn);
      out += line;
    };
    std::snprintf(line, sizeof line, "%-*s %12s %12s %12s %12s\n", static_cast<int>(name_w), "image", "SAD", "MSE",
                  "Grad", "Conn");
    out += line;
    for (const auto& m : per_image) row(m.name, m.reported);
    row("mean", summary);
    return out;
  }
};

}  // namespace greenmat
