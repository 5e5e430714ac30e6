#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace greenmat {

// Every failed precondition in the library surfaces as this type. The message
// is part of the contract (the CLI prints it verbatim).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Value/channel rules for each grid kind. A grid is immutable after
// construction, so these checks run exactly once per instance.
struct ImagePolicy {
  using value_type = float;
  static constexpr const char* name = "Image";
  static bool channels_ok(int c) { return c == 1 || c == 3 || c == 4; }
  static bool value_ok(float v) { return v >= 0.0f && v <= 1.0f; }
};

struct MattePolicy {
  using value_type = float;
  static constexpr const char* name = "AlphaMatte";
  static bool channels_ok(int c) { return c == 1; }
  static bool value_ok(float v) { return v >= 0.0f && v <= 1.0f; }
};

// Same rules as a matte, kept as a distinct type: a cross-attention weight map
// is not an annotation.
struct AttentionPolicy : MattePolicy {
  static constexpr const char* name = "AttentionMap";
};

struct HighFreqPolicy {
  using value_type = float;
  static constexpr const char* name = "HighFreqMap";
  static bool channels_ok(int c) { return c == 1; }
  static bool value_ok(float v) { return std::isfinite(v) && v >= 0.0f; }
};

// Latents carry double precision: estimating z0 near the end of the schedule
// divides by sqrt(alpha_bar) ~ 6e-3, which amplifies float rounding past the
// round-trip tolerance.
struct LatentPolicy {
  using value_type = double;
  static constexpr const char* name = "LatentGrid";
  static bool channels_ok(int c) { return c >= 1; }
  static bool value_ok(double v) { return std::isfinite(v); }
};

/// Row-major H x W x C field. Index (y, x, c) lives at (y * W + x) * C + c.
template <class Policy>
class Grid {
 public:
  using value_type = typename Policy::value_type;
  using policy_type = Policy;

  Grid() = default;

  Grid(int height, int width, int channels, std::vector<value_type> data)
      : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (height < 0 || width < 0) {
      throw Error(std::string(Policy::name) + ": negative dimensions");
    }
    if (!Policy::channels_ok(channels)) {
      throw Error(std::string(Policy::name) + ": unsupported channel count " +
                  std::to_string(channels));
    }
    if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
      throw Error(std::string(Policy::name) + ": data length does not match dimensions");
    }
    for (value_type v : data_) {
      if (!Policy::value_ok(v)) {
        throw Error(std::string(Policy::name) + ": value out of range");
      }
    }
  }

  static Grid filled(int height, int width, int channels, value_type value) {
    return Grid(height, width, channels,
                std::vector<value_type>(static_cast<std::size_t>(height) * width * channels, value));
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const value_type> data() const { return data_; }
  const std::vector<value_type>& values() const { return data_; }

  value_type at(int y, int x, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  bool same_shape(int h, int w) const { return height_ == h && width_ == w; }

  template <class Other>
  bool same_shape(const Grid<Other>& o) const {
    return height_ == o.height() && width_ == o.width();
  }

  friend bool operator==(const Grid& a, const Grid& b) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<value_type> data_;
};

using Image = Grid<ImagePolicy>;
using AlphaMatte = Grid<MattePolicy>;
using AttentionMap = Grid<AttentionPolicy>;
using HighFreqMap = Grid<HighFreqPolicy>;
using LatentGrid = Grid<LatentPolicy>;

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline AlphaMatte make_matte(int height, int width, std::vector<float> data) {
  return AlphaMatte(height, width, 1, std::move(data));
}

inline float clamp_unit(double v) {
  if (!(v > 0.0)) return 0.0f;
  if (v >= 1.0) return 1.0f;
  return static_cast<float>(v);
}

template <class A, class B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                std::to_string(b.width()) + ")");
  }
}

template <class P>
void require_channels(const Grid<P>& g, int channels, const char* what) {
  if (g.channels() != channels) {
    throw Error(std::string(what) + ": expected " + std::to_string(channels) +
                "-channel input, got " + std::to_string(g.channels()));
  }
}

// Re-types a single-channel field when its values satisfy the target policy.
template <class To, class From>
Grid<To> grid_cast(const Grid<From>& g) {
  std::vector<typename To::value_type> v(g.data().begin(), g.data().end());
  return Grid<To>(g.height(), g.width(), g.channels(), std::move(v));
}

}  // namespace greenmat
