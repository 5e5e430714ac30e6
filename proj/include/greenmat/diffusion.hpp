#pragma once

#include <cmath>
#include <vector>

#include "greenmat/grid.hpp"
#include "greenmat/tensor_io.hpp"

namespace greenmat {

/// DDPM coefficient tables. Index t is zero-based: alpha_bar[0] = alpha[0].
class NoiseSchedule {
 public:
  static constexpr int kDefaultSteps = 1000;
  static constexpr double kDefaultBetaStart = 1e-4;
  static constexpr double kDefaultBetaEnd = 0.02;

  /// Linear beta ramp from beta_start to beta_end over `steps` entries.
  static NoiseSchedule linear(int steps = kDefaultSteps, double beta_start = kDefaultBetaStart,
                              double beta_end = kDefaultBetaEnd) {
    if (steps < 1) throw Error("build_schedule: T must be at least 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
      throw Error("build_schedule: require 0 < beta_start <= beta_end < 1");
    }
    NoiseSchedule s;
    s.beta_.resize(steps);
    s.alpha_.resize(steps);
    s.alpha_bar_.resize(steps);
    double running = 1.0;
    for (int t = 0; t < steps; ++t) {
      const double frac = steps == 1 ? 0.0 : static_cast<double>(t) / (steps - 1);
      s.beta_[t] = beta_start + (beta_end - beta_start) * frac;
      s.alpha_[t] = 1.0 - s.beta_[t];
      running *= s.alpha_[t];
      s.alpha_bar_[t] = running;
    }
    return s;
  }

  int steps() const { return static_cast<int>(beta_.size()); }
  const std::vector<double>& beta() const { return beta_; }
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<double>& alpha_bar() const { return alpha_bar_; }

  double alpha_bar_at(int t) const {
    if (t < 0 || t >= steps()) throw Error("timestep out of range");
    return alpha_bar_[t];
  }

 private:
  NoiseSchedule() = default;

  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

inline NoiseSchedule build_schedule(int steps, double beta_start, double beta_end) {
  return NoiseSchedule::linear(steps, beta_start, beta_end);
}

/// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps
inline LatentGrid add_noise(const LatentGrid& z0, const LatentGrid& eps, int t, const NoiseSchedule& s) {
  if (z0.height() != eps.height() || z0.width() != eps.width() || z0.channels() != eps.channels()) {
    throw Error("add_noise: shape mismatch");
  }
  const double ab = s.alpha_bar_at(t);
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  std::vector<double> out(z0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * z0.data()[i] + b * eps.data()[i];
  return LatentGrid(z0.height(), z0.width(), z0.channels(), std::move(out));
}

/// Inverts add_noise given a noise prediction:
/// z0_hat = (z_t - sqrt(1 - abar_t) eps_pred) / sqrt(abar_t)
inline LatentGrid estimate_z0(const LatentGrid& zt, const LatentGrid& eps_pred, int t, const NoiseSchedule& s) {
  if (zt.height() != eps_pred.height() || zt.width() != eps_pred.width() ||
      zt.channels() != eps_pred.channels()) {
    throw Error("estimate_z0: shape mismatch");
  }
  const double ab = s.alpha_bar_at(t);
  if (ab < 1e-12) throw Error("degenerate schedule");
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  std::vector<double> out(zt.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (zt.data()[i] - b * eps_pred.data()[i]) / a;
  return LatentGrid(zt.height(), zt.width(), zt.channels(), std::move(out));
}

/// Mean squared error between predicted and true noise.
inline double noise_loss(const LatentGrid& eps_pred, const LatentGrid& eps) {
  if (eps_pred.size() != eps.size() || !eps_pred.same_shape(eps) || eps.empty()) {
    throw Error("noise_loss: shape mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = eps_pred.data()[i] - eps.data()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(eps.size());
}

/// d noise_loss / d eps_pred = 2 (eps_pred - eps) / N
inline std::vector<double> noise_loss_grad(const LatentGrid& eps_pred, const LatentGrid& eps) {
  if (eps_pred.size() != eps.size() || !eps_pred.same_shape(eps) || eps.empty()) {
    throw Error("noise_loss: shape mismatch");
  }
  std::vector<double> g(eps.size());
  const double n = static_cast<double>(eps.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * (eps_pred.data()[i] - eps.data()[i]) / n;
  return g;
}

/// Unweighted sum of the four training objectives.
inline double total_loss(double l_noise, double l_g, double l_detail, double l_latent) {
  if (!std::isfinite(l_noise) || !std::isfinite(l_g) || !std::isfinite(l_detail) || !std::isfinite(l_latent)) {
    throw Error("total_loss: non-finite input");
  }
  return l_noise + l_g + l_detail + l_latent;
}

/// Schedule tables as rank-1 GMT1 tensors keyed "beta", "alpha", "alpha_bar".
inline void export_schedule(const NoiseSchedule& s, const std::filesystem::path& dir) {
  save_tensor(dir / "beta.gmt", vector_tensor(s.beta()));
  save_tensor(dir / "alpha.gmt", vector_tensor(s.alpha()));
  save_tensor(dir / "alpha_bar.gmt", vector_tensor(s.alpha_bar()));
}

}  // namespace greenmat
