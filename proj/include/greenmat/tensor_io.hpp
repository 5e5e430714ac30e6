#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "greenmat/grid.hpp"

namespace greenmat {

// GMT1 tensor file, little-endian throughout:
//   "GMT1" | u32 rank | rank x u32 dims | prod(dims) x f32, row-major
struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t element_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, std::uint32_t d) { return a * d; });
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

namespace tensor_detail {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace tensor_detail

inline std::vector<unsigned char> encode_tensor(const Tensor& t) {
  if (t.element_count() != t.data.size()) throw Error("GMT1: shape does not match data length");
  std::vector<unsigned char> out = {'G', 'M', 'T', '1'};
  out.reserve(8 + 4 * t.shape.size() + 4 * t.data.size());
  tensor_detail::put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (std::uint32_t d : t.shape) tensor_detail::put_u32(out, d);
  for (float f : t.data) tensor_detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

inline Tensor decode_tensor(std::span<const unsigned char> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "GMT1", 4) != 0) {
    throw Error("GMT1: bad magic");
  }
  const std::uint32_t rank = tensor_detail::get_u32(bytes.data() + 4);
  if (bytes.size() < 8 + 4ull * rank) throw Error("GMT1: truncated header");
  Tensor t;
  t.shape.resize(rank);
  for (std::uint32_t i = 0; i < rank; ++i) t.shape[i] = tensor_detail::get_u32(bytes.data() + 8 + 4 * i);
  const std::size_t n = t.element_count();
  const std::size_t offset = 8 + 4ull * rank;
  if (bytes.size() != offset + 4 * n) throw Error("GMT1: payload length does not match shape");
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.data[i] = std::bit_cast<float>(tensor_detail::get_u32(bytes.data() + offset + 4 * i));
  }
  return t;
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

inline Tensor load_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

inline void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file_bytes(path, encode_tensor(t));
}

/// Grids export as rank-3 [H, W, C] tensors.
template <class P>
Tensor to_tensor(const Grid<P>& g) {
  return {{static_cast<std::uint32_t>(g.height()), static_cast<std::uint32_t>(g.width()),
           static_cast<std::uint32_t>(g.channels())},
          std::vector<float>(g.data().begin(), g.data().end())};
}

/// Accepts [H, W] or [H, W, C].
template <class P>
Grid<P> grid_from_tensor(const Tensor& t) {
  if (t.shape.size() != 2 && t.shape.size() != 3) throw Error("GMT1: expected rank 2 or 3 grid tensor");
  const int c = t.shape.size() == 3 ? static_cast<int>(t.shape[2]) : 1;
  std::vector<typename P::value_type> v(t.data.begin(), t.data.end());
  return Grid<P>(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]), c, std::move(v));
}

template <class T>
Tensor vector_tensor(const std::vector<T>& v) {
  return {{static_cast<std::uint32_t>(v.size())}, std::vector<float>(v.begin(), v.end())};
}

}  // namespace greenmat
