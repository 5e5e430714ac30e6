#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenmat/grid.hpp"
#include "greenmat/rng.hpp"
#include "greenmat/tensor_io.hpp"

namespace greenmat {

// Two 3x3 convolutions (128 -> 64 -> 1), each followed by SiLU, then a
// sigmoid so the output is a valid matte.
class MattingHeadWeights {
 public:
  static constexpr int kIn = 128;
  static constexpr int kHidden = 64;

  MattingHeadWeights(Tensor conv1_w, Tensor conv1_b, Tensor conv2_w, Tensor conv2_b)
      : conv1_w_(std::move(conv1_w)), conv1_b_(std::move(conv1_b)),
        conv2_w_(std::move(conv2_w)), conv2_b_(std::move(conv2_b)) {
    expect_shape(conv1_w_, {kHidden, kIn, 3, 3}, "conv1.w");
    expect_shape(conv1_b_, {kHidden}, "conv1.b");
    expect_shape(conv2_w_, {1, kHidden, 3, 3}, "conv2.w");
    expect_shape(conv2_b_, {1}, "conv2.b");
  }

  static MattingHeadWeights zeros() {
    return {{{kHidden, kIn, 3, 3}, std::vector<float>(kHidden * kIn * 9, 0.0f)},
            {{kHidden}, std::vector<float>(kHidden, 0.0f)},
            {{1, kHidden, 3, 3}, std::vector<float>(kHidden * 9, 0.0f)},
            {{1}, {0.0f}}};
  }

  /// Uniform weights in [-scale, scale], handy for fixtures.
  static MattingHeadWeights random(Rng& rng, double scale) {
    auto fill = [&](std::vector<std::uint32_t> shape) {
      Tensor t{std::move(shape), {}};
      t.data.resize(t.element_count());
      for (float& v : t.data) v = static_cast<float>(rng.uniform(-scale, scale));
      return t;
    };
    return {fill({kHidden, kIn, 3, 3}), fill({kHidden}), fill({1, kHidden, 3, 3}), fill({1})};
  }

  const Tensor& conv1_w() const { return conv1_w_; }
  const Tensor& conv1_b() const { return conv1_b_; }
  const Tensor& conv2_w() const { return conv2_w_; }
  const Tensor& conv2_b() const { return conv2_b_; }

  /// Manifest: {"conv1.w": file, "conv1.b": file, "conv2.w": file, "conv2.b": file},
  /// paths relative to the manifest.
  static MattingHeadWeights load(const std::filesystem::path& manifest_path) {
    const auto bytes = read_file_bytes(manifest_path);
    const auto m = nlohmann::json::parse(bytes.begin(), bytes.end());
    const auto dir = manifest_path.parent_path();
    auto get = [&](const char* key) { return load_tensor(dir / m.at(key).get<std::string>()); };
    return {get("conv1.w"), get("conv1.b"), get("conv2.w"), get("conv2.b")};
  }

  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    save_tensor(dir / "conv1_w.gmt", conv1_w_);
    save_tensor(dir / "conv1_b.gmt", conv1_b_);
    save_tensor(dir / "conv2_w.gmt", conv2_w_);
    save_tensor(dir / "conv2_b.gmt", conv2_b_);
    const nlohmann::json m = {{"conv1.w", "conv1_w.gmt"}, {"conv1.b", "conv1_b.gmt"},
                              {"conv2.w", "conv2_w.gmt"}, {"conv2.b", "conv2_b.gmt"}};
    const std::string text = m.dump(2) + "\n";
    write_file_bytes(dir / "weights.json",
                     std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
  }

 private:
  static void expect_shape(const Tensor& t, std::vector<std::uint32_t> shape, const char* name) {
    if (t.shape != shape || t.data.size() != t.element_count()) {
      throw Error(std::string("matting head: ") + name + " has the wrong shape");
    }
    for (float v : t.data) {
      if (!std::isfinite(v)) throw Error(std::string("matting head: ") + name + " has a non-finite weight");
    }
  }

  Tensor conv1_w_, conv1_b_, conv2_w_, conv2_b_;
};

namespace head_detail {

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// 3x3, stride 1, zero padding 1. `in` is H x W x Cin interleaved; weights
// are [Cout, Cin, 3, 3]. Returns H x W x Cout.
inline std::vector<double> conv3x3(std::span<const double> in, int h, int w, int cin, const Tensor& weight,
                                   const Tensor& bias) {
  const int cout = static_cast<int>(weight.shape[0]);
  // Repack to [ky][kx][cin][cout] so the innermost loop runs over outputs.
  std::vector<double> packed(9ull * cin * cout);
  for (int o = 0; o < cout; ++o)
    for (int i = 0; i < cin; ++i)
      for (int k = 0; k < 9; ++k)
        packed[(static_cast<std::size_t>(k) * cin + i) * cout + o] = weight.data[(static_cast<std::size_t>(o) * cin + i) * 9 + k];

  std::vector<double> out(static_cast<std::size_t>(h) * w * cout);
  std::vector<double> acc(cout);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int o = 0; o < cout; ++o) acc[o] = bias.data[o];
      for (int ky = 0; ky < 3; ++ky) {
        const int yy = y + ky - 1;
        if (yy < 0 || yy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int xx = x + kx - 1;
          if (xx < 0 || xx >= w) continue;
          const double* src = in.data() + (static_cast<std::size_t>(yy) * w + xx) * cin;
          const double* wk = packed.data() + static_cast<std::size_t>(ky * 3 + kx) * cin * cout;
          for (int i = 0; i < cin; ++i) {
            const double v = src[i];
            const double* wrow = wk + static_cast<std::size_t>(i) * cout;
            for (int o = 0; o < cout; ++o) acc[o] += v * wrow[o];
          }
        }
      }
      std::copy(acc.begin(), acc.end(), out.begin() + (static_cast<std::ptrdiff_t>(y) * w + x) * cout);
    }
  }
  return out;
}

}  // namespace head_detail

/// Coarse matte from 128-channel decoder features.
inline AlphaMatte matting_forward(const LatentGrid& features, const MattingHeadWeights& w) {
  if (features.channels() != MattingHeadWeights::kIn) {
    throw Error("matting_forward: expected 128 channels, got " + std::to_string(features.channels()));
  }
  if (features.height() < 3 || features.width() < 3) throw Error("matting_forward: spatial size below 3x3");
  const int h = features.height(), wd = features.width();
  auto hidden = head_detail::conv3x3(features.data(), h, wd, MattingHeadWeights::kIn, w.conv1_w(), w.conv1_b());
  for (double& v : hidden) v = head_detail::silu(v);
  const auto logits = head_detail::conv3x3(hidden, h, wd, MattingHeadWeights::kHidden, w.conv2_w(), w.conv2_b());
  std::vector<float> out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(head_detail::sigmoid(head_detail::silu(logits[i])));
  }
  return AlphaMatte(h, wd, 1, std::move(out));
}

inline constexpr double kDiceEpsilon = 1e-6;

/// Pixel-mean L1 plus soft dice (intersection as elementwise product).
inline double latent_mask_loss(const AlphaMatte& pred, const AlphaMatte& gt) {
  require_same_shape(pred, gt, "latent_mask_loss");
  if (pred.empty()) throw Error("latent_mask_loss: empty input");
  double l1 = 0.0, inter = 0.0, sizes = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred.data()[i], g = gt.data()[i];
    l1 += std::abs(p - g);
    inter += p * g;
    sizes += p + g;
  }
  const double n = static_cast<double>(pred.size());
  return l1 / n + 1.0 - (2.0 * inter + kDiceEpsilon) / (sizes + kDiceEpsilon);
}

/// d latent_mask_loss / d pred.
inline std::vector<double> latent_mask_loss_grad(const AlphaMatte& pred, const AlphaMatte& gt) {
  require_same_shape(pred, gt, "latent_mask_loss");
  if (pred.empty()) throw Error("latent_mask_loss: empty input");
  double inter = 0.0, sizes = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += static_cast<double>(pred.data()[i]) * gt.data()[i];
    sizes += static_cast<double>(pred.data()[i]) + gt.data()[i];
  }
  const double n = static_cast<double>(pred.size());
  const double num = 2.0 * inter + kDiceEpsilon;
  const double den = sizes + kDiceEpsilon;
  std::vector<double> g(pred.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = static_cast<double>(pred.data()[i]) - gt.data()[i];
    const double l1 = d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0);
    g[i] = l1 - (2.0 * gt.data()[i] * den - num) / (den * den);
  }
  return g;
}

}  // namespace greenmat
