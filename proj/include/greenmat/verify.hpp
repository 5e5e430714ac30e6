#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenmat/attention.hpp"
#include "greenmat/detail.hpp"
#include "greenmat/diffusion.hpp"
#include "greenmat/grad_check.hpp"
#include "greenmat/kmeans.hpp"
#include "greenmat/matting_head.hpp"
#include "greenmat/metrics.hpp"
#include "greenmat/testing/fixtures.hpp"
#include "greenmat/testing/oracles.hpp"

namespace greenmat {

// Self-check suite behind `greenmat verify`: analytic gradients against
// central differences, the noising round trip, loss identities and metric
// oracles.

struct CheckResult {
  std::string name;
  double tolerance = 0.0;
  double observed = 0.0;
  bool passed = false;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int instances = 5;
  // Negative control: flips the sign of the dice part of the latent-loss
  // gradient so the corresponding check must fail.
  bool corrupt_dice_gradient = false;
};

namespace verify_detail {

template <class F>
CheckResult timed(std::string name, double tol, F&& observe) {
  const auto t0 = std::chrono::steady_clock::now();
  const double obs = observe();
  const auto t1 = std::chrono::steady_clock::now();
  return {std::move(name), tol, obs, obs <= tol, std::chrono::duration<double>(t1 - t0).count()};
}

inline constexpr double kStep = 1e-3;

}  // namespace verify_detail

/// estimate_z0(add_noise(z0, eps, t), eps, t) against z0 over random triples
/// on the default schedule; worst per-element relative error.
inline CheckResult check_z0_roundtrip(std::uint64_t seed, int triples = 100) {
  return verify_detail::timed("z0 round trip", 1e-5, [&] {
    Rng rng(seed);
    const auto sched = NoiseSchedule::linear();
    double worst = 0.0;
    for (int i = 0; i < triples; ++i) {
      const auto z0 = testing::random_latent(rng, 4, 4, 4);
      const auto eps = testing::random_latent(rng, 4, 4, 4);
      const int t = static_cast<int>(rng.below(sched.steps()));
      const auto back = estimate_z0(add_noise(z0, eps, t, sched), eps, t, sched);
      for (std::size_t j = 0; j < z0.size(); ++j) {
        worst = std::max(worst, std::abs(back.data()[j] - z0.data()[j]) / std::max(std::abs(z0.data()[j]), 1e-12));
      }
    }
    return worst;
  });
}

inline CheckResult check_noise_gradient(std::uint64_t seed, int instances) {
  return verify_detail::timed("noise loss gradient", 1e-3, [&] {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
      const auto pred = testing::random_latent(rng, 8, 8, 1);
      const auto eps = testing::random_latent(rng, 8, 8, 1);
      const auto g = noise_loss_grad(pred, eps);
      auto loss = [&](std::span<const double> x) {
        return noise_loss(LatentGrid(8, 8, 1, std::vector<double>(x.begin(), x.end())), eps);
      };
      worst = std::max(worst, grad_check<double>(loss, pred.data(), g, verify_detail::kStep).max_rel_error);
    }
    return worst;
  });
}

inline CheckResult check_green_gradient(std::uint64_t seed, int instances) {
  return verify_detail::timed("green control loss gradient", 1e-3, [&] {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
      const auto inst = testing::green_loss_instance(rng);
      const AttentionStack stack(inst.layers);
      const auto grads = green_control_loss_grad(stack, inst.mask);
      for (std::size_t l = 0; l < inst.layers.size(); ++l) {
        auto loss = [&](std::span<const float> x) {
          auto layers = inst.layers;
          layers[l] = AttentionMap(layers[l].height(), layers[l].width(), 1, std::vector<float>(x.begin(), x.end()));
          return green_control_loss(AttentionStack(std::move(layers)), inst.mask);
        };
        worst = std::max(worst, grad_check<float>(loss, inst.layers[l].data(), grads[l], verify_detail::kStep).max_rel_error);
      }
    }
    return worst;
  });
}

inline CheckResult check_detail_gradient(std::uint64_t seed, int instances) {
  return verify_detail::timed("detail loss gradient", 1e-3, [&] {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
      const auto inst = testing::detail_instance(rng);
      const auto g = detail_loss_grad(inst.gray, inst.mask, inst.target);
      auto loss = [&](std::span<const float> x) {
        const Image gray(inst.gray.height(), inst.gray.width(), 1, std::vector<float>(x.begin(), x.end()));
        return detail_loss_from_gray(gray, inst.mask, inst.target);
      };
      worst = std::max(worst, grad_check<float>(loss, inst.gray.data(), g, verify_detail::kStep).max_rel_error);
    }
    return worst;
  });
}

inline CheckResult check_latent_gradient(std::uint64_t seed, int instances, bool corrupt_dice) {
  return verify_detail::timed("latent mask loss gradient", 1e-3, [&] {
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < instances; ++k) {
      const auto [pred, gt] = testing::latent_loss_instance(rng);
      auto g = latent_mask_loss_grad(pred, gt);
      if (corrupt_dice) {
        const double n = static_cast<double>(pred.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double l1 = pred.data()[i] > gt.data()[i] ? 1.0 / n : -1.0 / n;
          g[i] = l1 - (g[i] - l1);
        }
      }
      auto loss = [&](std::span<const float> x) {
        return latent_mask_loss(AlphaMatte(pred.height(), pred.width(), 1, std::vector<float>(x.begin(), x.end())), gt);
      };
      worst = std::max(worst, grad_check<float>(loss, pred.data(), g, verify_detail::kStep).max_rel_error);
    }
    return worst;
  });
}

/// Every loss at its perfect-alignment input; worst absolute value.
inline CheckResult check_loss_identities(std::uint64_t seed) {
  return verify_detail::timed("loss identities", 1e-6, [&] {
    Rng rng(seed);
    double worst = 0.0;
    const auto eps = testing::random_latent(rng, 8, 8, 4);
    worst = std::max(worst, noise_loss(eps, eps));

    const auto mask = testing::random_matte(rng, 16, 16);
    std::vector<AttentionMap> layers;
    for (int size : {16, 8, 4}) {
      const auto m = resize_area(mask, size, size);
      std::vector<float> a(m.size());
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = 1.0f - m.data()[i];
      layers.emplace_back(size, size, 1, std::move(a));
    }
    worst = std::max(worst, green_control_loss(AttentionStack(std::move(layers)), mask));

    const auto gray = testing::random_image(rng, 8, 8, 1);
    const auto hf = high_frequency(gray, testing::random_matte(rng, 8, 8));
    worst = std::max(worst, detail_loss(hf, hf));

    std::vector<float> binary(64);
    for (float& v : binary) v = rng.uniform() < 0.5 ? 1.0f : 0.0f;
    binary[0] = 1.0f;
    const AlphaMatte b(8, 8, 1, binary);
    worst = std::max(worst, latent_mask_loss(b, b));

    const double parts[4] = {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    const double sum = parts[0] + parts[1] + parts[2] + parts[3];
    if (total_loss(parts[0], parts[1], parts[2], parts[3]) != sum) worst = std::max(worst, 1.0);
    return worst;
  });
}

/// Library metrics against the brute-force oracles on random 16x16 pairs;
/// worst absolute difference of the raw sums.
inline CheckResult check_metric_oracles(std::uint64_t seed, int pairs = 20) {
  return verify_detail::timed("metric oracles (grad, conn, sad, mse)", 1e-6, [&] {
    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < pairs; ++i) {
      const auto pred = testing::random_matte(rng, 16, 16);
      const auto gt = testing::random_matte(rng, 16, 16);
      worst = std::max(worst, std::abs(grad_metric_raw(pred, gt) - oracle::grad_error_dense(pred, gt, kGradSigma)));
      worst = std::max(worst, std::abs(conn_metric_raw(pred, gt) - oracle::conn_error_bruteforce(pred, gt, kConnStep)));
      // Same accumulation order, so these must agree bit for bit.
      if (sad_raw(pred, gt) != oracle::sum_abs_diff(pred.data(), gt.data())) worst = std::max(worst, 1.0);
      if (mse(pred, gt) != oracle::mean_sq_diff(pred.data(), gt.data())) worst = std::max(worst, 1.0);
    }
    return worst;
  });
}

/// kmeans_colors inertia minus the exhaustive 2-partition optimum over
/// random point sets of up to 8 colours.
inline CheckResult check_kmeans_optimum(std::uint64_t seed, int fixtures = 10) {
  return verify_detail::timed("k-means global optimum (k=2, n<=8)", 1e-6, [&] {
    Rng rng(seed);
    double worst = 0.0;
    for (int f = 0; f < fixtures; ++f) {
      const int n = 3 + static_cast<int>(rng.below(6));
      const auto img = testing::random_image(rng, 1, n, 3);
      std::vector<std::array<double, 3>> pts;
      for (int i = 0; i < n; ++i) pts.push_back({img.at(0, i, 0) * 255.0, img.at(0, i, 1) * 255.0, img.at(0, i, 2) * 255.0});
      const double best = oracle::best_two_partition_sse(pts);
      Rng krng(seed + 1000 + f);
      const double got = kmeans_colors(img, 2, krng).inertia;
      worst = std::max(worst, (got - best) / std::max(1.0, best));
    }
    return worst;
  });
}

inline std::vector<CheckResult> run_verification(const VerifyOptions& opt = {}) {
  return {check_z0_roundtrip(opt.seed),
          check_noise_gradient(opt.seed + 1, opt.instances),
          check_green_gradient(opt.seed + 2, opt.instances),
          check_detail_gradient(opt.seed + 3, opt.instances),
          check_latent_gradient(opt.seed + 4, opt.instances, opt.corrupt_dice_gradient),
          check_loss_identities(opt.seed + 5),
          check_metric_oracles(opt.seed + 6),
          check_kmeans_optimum(opt.seed + 7)};
}

inline nlohmann::json to_json(const std::vector<CheckResult>& results) {
  nlohmann::json j;
  j["checks"] = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    j["checks"].push_back({{"name", r.name}, {"tolerance", r.tolerance}, {"observed", r.observed},
                           {"passed", r.passed}, {"seconds", r.seconds}});
    all = all && r.passed;
  }
  j["passed"] = all;
  return j;
}

}  // namespace greenmat
