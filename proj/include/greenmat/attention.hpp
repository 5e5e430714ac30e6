#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenmat/grid.hpp"
#include "greenmat/resample.hpp"
#include "greenmat/tensor_io.hpp"

namespace greenmat {

/// Projected text-token keys, one row of `dim` values per token.
class TokenEmbeddings {
 public:
  TokenEmbeddings(int tokens, int dim, std::vector<double> data)
      : tokens_(tokens), dim_(dim), data_(std::move(data)) {
    if (tokens < 1 || dim < 1) throw Error("TokenEmbeddings: need at least one token and one dimension");
    if (data_.size() != static_cast<std::size_t>(tokens) * dim) {
      throw Error("TokenEmbeddings: data length does not match dimensions");
    }
    if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
      throw Error("TokenEmbeddings: non-finite value");
    }
  }

  int tokens() const { return tokens_; }
  int dim() const { return dim_; }
  std::span<const double> row(int j) const { return {data_.data() + static_cast<std::size_t>(j) * dim_, static_cast<std::size_t>(dim_)}; }

 private:
  int tokens_;
  int dim_;
  std::vector<double> data_;
};

/// Per-pixel softmax weights over tokens, (H*W) x tokens, row-major.
struct TokenAttention {
  int height = 0;
  int width = 0;
  int tokens = 0;
  std::vector<double> weights;

  double at(std::size_t pixel, int token) const { return weights[pixel * tokens + token]; }
};

/// Softmax(Q K^T / sqrt(d)) with Q taken per pixel from the channels of
/// `queries`.
inline TokenAttention cross_attention(const LatentGrid& queries, const TokenEmbeddings& keys, int d) {
  if (d < 1) throw Error("cross_attention: d must be at least 1");
  if (queries.channels() != d || keys.dim() != d) throw Error("cross_attention: dim mismatch");
  TokenAttention out{queries.height(), queries.width(), keys.tokens(), {}};
  out.weights.resize(queries.pixels() * keys.tokens());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> logits(keys.tokens());
  for (std::size_t p = 0; p < queries.pixels(); ++p) {
    const double* q = queries.data().data() + p * d;
    for (int j = 0; j < keys.tokens(); ++j) {
      const auto k = keys.row(j);
      double dot = 0.0;
      for (int i = 0; i < d; ++i) dot += q[i] * k[i];
      logits[j] = dot * scale;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& l : logits) {
      l = std::exp(l - peak);
      z += l;
    }
    for (int j = 0; j < keys.tokens(); ++j) out.weights[p * keys.tokens() + j] = logits[j] / z;
  }
  return out;
}

/// Column j of the attention matrix reshaped to an H x W map.
inline AttentionMap token_map(const TokenAttention& attn, int j, int height, int width) {
  if (j < 0 || j >= attn.tokens) throw Error("token_map: token index out of range");
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (height < 1 || width < 1 || n * attn.tokens != attn.weights.size()) {
    throw Error("token_map: grid size does not match attention rows");
  }
  std::vector<float> m(n);
  for (std::size_t p = 0; p < n; ++p) m[p] = clamp_unit(attn.at(p, j));
  return AttentionMap(height, width, 1, std::move(m));
}

/// One token's map per cross-attention layer; layers may differ in size.
class AttentionStack {
 public:
  explicit AttentionStack(std::vector<AttentionMap> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw Error("empty stack");
    for (const auto& l : layers_) {
      if (l.empty()) throw Error("AttentionStack: empty layer");
    }
  }

  std::size_t size() const { return layers_.size(); }
  const AttentionMap& operator[](std::size_t l) const { return layers_[l]; }
  const std::vector<AttentionMap>& layers() const { return layers_; }

 private:
  std::vector<AttentionMap> layers_;
};

/// Mean over layers of the pixel-mean |A_l - (1 - M_l)|, where M_l is the
/// mask area-resampled to layer l's grid.
inline double green_control_loss(const AttentionStack& stack, const AlphaMatte& mask) {
  if (mask.empty()) throw Error("green_control_loss: empty mask");
  double total = 0.0;
  for (const AttentionMap& layer : stack.layers()) {
    const AlphaMatte m = resize_area(mask, layer.height(), layer.width());
    double acc = 0.0;
    for (std::size_t i = 0; i < layer.size(); ++i) {
      acc += std::abs(static_cast<double>(layer.data()[i]) - (1.0 - m.data()[i]));
    }
    total += acc / static_cast<double>(layer.size());
  }
  return total / static_cast<double>(stack.size());
}

/// Subgradient of green_control_loss with respect to every layer's map,
/// sign(A - (1 - M)) / (u * H_l * W_l); zero at ties.
inline std::vector<std::vector<double>> green_control_loss_grad(const AttentionStack& stack, const AlphaMatte& mask) {
  if (mask.empty()) throw Error("green_control_loss: empty mask");
  std::vector<std::vector<double>> grads;
  grads.reserve(stack.size());
  const double u = static_cast<double>(stack.size());
  for (const AttentionMap& layer : stack.layers()) {
    const AlphaMatte m = resize_area(mask, layer.height(), layer.width());
    std::vector<double> g(layer.size());
    const double scale = 1.0 / (u * static_cast<double>(layer.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double diff = static_cast<double>(layer.data()[i]) - (1.0 - m.data()[i]);
      g[i] = diff > 0.0 ? scale : (diff < 0.0 ? -scale : 0.0);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

/// Writes layer_<l>.gmt tensors plus manifest.json {"layers":[{h,w,file}]}.
inline void save_attention_stack(const AttentionStack& stack, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["layers"] = nlohmann::json::array();
  for (std::size_t l = 0; l < stack.size(); ++l) {
    const std::string file = "layer_" + std::to_string(l) + ".gmt";
    save_tensor(dir / file, to_tensor(stack[l]));
    manifest["layers"].push_back({{"h", stack[l].height()}, {"w", stack[l].width()}, {"file", file}});
  }
  const std::string text = manifest.dump(2) + "\n";
  write_file_bytes(dir / "manifest.json", std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

inline AttentionStack load_attention_stack(const std::filesystem::path& manifest_path) {
  const auto bytes = read_file_bytes(manifest_path);
  const auto manifest = nlohmann::json::parse(bytes.begin(), bytes.end());
  std::vector<AttentionMap> layers;
  for (const auto& entry : manifest.at("layers")) {
    const auto file = manifest_path.parent_path() / entry.at("file").get<std::string>();
    AttentionMap layer = grid_from_tensor<AttentionPolicy>(load_tensor(file));
    if (layer.height() != entry.at("h").get<int>() || layer.width() != entry.at("w").get<int>()) {
      throw Error(file.string() + ": tensor shape disagrees with manifest");
    }
    layers.push_back(std::move(layer));
  }
  return AttentionStack(std::move(layers));
}

}  // namespace greenmat
