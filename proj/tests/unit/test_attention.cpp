#include <gtest/gtest.h>

#include <cmath>

#include "greenmat/attention.hpp"
#include "greenmat/grad_check.hpp"
#include "greenmat/testing/fixtures.hpp"
#include "oracles/reference.hpp"
#include "temp_dir.hpp"

using namespace greenmat;
namespace fx = greenmat::testing;

namespace {

AttentionMap amap(int h, int w, float v) { return AttentionMap::filled(h, w, 1, v); }

}  // namespace

TEST(CrossAttention, ZeroQueryGivesUniformWeights) {
  const TokenEmbeddings keys(2, 3, {0.4, -1.0, 2.0, 0.4, -1.0, 2.0});
  const auto a = cross_attention(LatentGrid::filled(1, 1, 3, 0.0), keys, 3);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(a.at(0, 1), 0.5);
}

TEST(CrossAttention, ScalarSoftmax) {
  const TokenEmbeddings keys(2, 1, {1.0, 0.0});
  const auto a = cross_attention(LatentGrid(1, 1, 1, {1.0}), keys, 1);
  EXPECT_NEAR(a.at(0, 0), ref::softmax2_first(1.0, 0.0), 1e-12);
  EXPECT_NEAR(a.at(0, 0), 0.7311, 1e-4);
  EXPECT_NEAR(a.at(0, 1), 0.2689, 1e-4);
}

TEST(CrossAttention, SingleTokenAlwaysOne) {
  Rng rng(21);
  const TokenEmbeddings keys(1, 4, {3.0, -2.0, 7.0, 1.0});
  const auto a = cross_attention(fx::random_latent(rng, 3, 3, 4), keys, 4);
  for (double w : a.weights) EXPECT_EQ(w, 1.0);
}

TEST(CrossAttention, RowsSumToOneEvenForHugeLogits) {
  Rng rng(22);
  std::vector<double> k(5 * 4);
  for (double& v : k) v = rng.uniform(-1e4, 1e4);
  const TokenEmbeddings keys(5, 4, k);
  std::vector<double> q(6 * 4);
  for (double& v : q) v = rng.uniform(-1e4, 1e4);
  const auto a = cross_attention(LatentGrid(2, 3, 4, q), keys, 4);
  for (int p = 0; p < 6; ++p) {
    double s = 0.0;
    for (int j = 0; j < 5; ++j) {
      ASSERT_TRUE(std::isfinite(a.at(p, j)));
      s += a.at(p, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(CrossAttention, DimMismatchThrows) {
  const TokenEmbeddings keys(2, 3, std::vector<double>(6, 0.0));
  EXPECT_THROW(cross_attention(LatentGrid::filled(1, 1, 2, 0.0), keys, 2), Error);
  EXPECT_THROW(cross_attention(LatentGrid::filled(1, 1, 3, 0.0), keys, 2), Error);
  EXPECT_THROW(TokenEmbeddings(2, 2, {0.0}), Error);
  EXPECT_THROW(TokenEmbeddings(1, 1, {NAN}), Error);
}

TEST(TokenMap, Examples) {
  const TokenEmbeddings one(1, 2, {1.0, 1.0});
  Rng rng(23);
  for (const auto g = token_map(cross_attention(fx::random_latent(rng, 2, 2, 2), one, 2), 0, 2, 2); float v : g.data()) {
    EXPECT_EQ(v, 1.0f);
  }
  const TokenEmbeddings two(2, 2, {1.0, 0.0, 1.0, 0.0});
  const auto uni = cross_attention(fx::random_latent(rng, 3, 2, 2), two, 2);
  for (int j : {0, 1})
    for (const auto g = token_map(uni, j, 3, 2); float v : g.data()) EXPECT_FLOAT_EQ(v, 0.5f);

  const TokenAttention manual{1, 2, 2, {0.2, 0.8, 0.6, 0.4}};
  const auto m = token_map(manual, 0, 1, 2);
  EXPECT_FLOAT_EQ(m.at(0, 0), 0.2f);
  EXPECT_FLOAT_EQ(m.at(0, 1), 0.6f);
}

TEST(TokenMap, ErrorsOnBadIndexOrGrid) {
  const TokenAttention manual{1, 2, 2, {0.2, 0.8, 0.6, 0.4}};
  EXPECT_THROW(token_map(manual, 2, 1, 2), Error);
  EXPECT_THROW(token_map(manual, -1, 1, 2), Error);
  EXPECT_THROW(token_map(manual, 0, 2, 2), Error);
}

TEST(GreenLoss, PerfectAlignmentIsZero) {
  const auto mask = make_matte(4, 4, {0, 0, 1, 1, 0, 0, 1, 1, 1, 1, 0, 0, 1, 1, 0, 0});
  std::vector<AttentionMap> layers;
  for (int s : {4, 2}) {
    const auto m = resize_area(mask, s, s);
    std::vector<float> a(m.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = 1.0f - m.data()[i];
    layers.emplace_back(s, s, 1, a);
  }
  EXPECT_NEAR(green_control_loss(AttentionStack(layers), mask), 0.0, 1e-9);
}

TEST(GreenLoss, HalfAttentionOnFullForeground) {
  EXPECT_DOUBLE_EQ(green_control_loss(AttentionStack({amap(4, 4, 0.5f)}), AlphaMatte::filled(8, 8, 1, 1.0f)), 0.5);
}

TEST(GreenLoss, AveragesLayers) {
  // Mask 0 means target attention 1; layers at 0.8 and 0.6 lose 0.2 and 0.4.
  const auto mask = AlphaMatte::filled(8, 8, 1, 0.0f);
  const double l = green_control_loss(AttentionStack({amap(8, 8, 0.8f), amap(2, 2, 0.6f)}), mask);
  EXPECT_NEAR(l, 0.3, 1e-7);
}

TEST(GreenLoss, BoundedAndSymmetric) {
  Rng rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mask = fx::random_matte(rng, 8, 8);
    const auto a = fx::random_matte(rng, 4, 4);
    const double l = green_control_loss(AttentionStack({grid_cast<AttentionPolicy>(a)}), mask);
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 1.0);
    // Swap roles: attention <- 1 - M~, mask <- 1 - A at the same grid.
    const auto mr = resize_area(mask, 4, 4);
    std::vector<float> att(16), m2(16);
    for (int i = 0; i < 16; ++i) {
      att[i] = 1.0f - mr.data()[i];
      m2[i] = 1.0f - a.data()[i];
    }
    const double swapped = green_control_loss(AttentionStack({AttentionMap(4, 4, 1, att)}), make_matte(4, 4, m2));
    EXPECT_NEAR(l, swapped, 1e-6);
  }
}

TEST(GreenLoss, EmptyStackThrows) {
  EXPECT_THROW(AttentionStack({}), Error);
  EXPECT_THROW(
      {
        try {
          AttentionStack(std::vector<AttentionMap>{});
        } catch (const Error& e) {
          EXPECT_STREQ(e.what(), "empty stack");
          throw;
        }
      },
      Error);
}

TEST(GreenLoss, SubgradientMatchesFiniteDifferences) {
  Rng rng(25);
  for (int trial = 0; trial < 5; ++trial) {
    const auto inst = fx::green_loss_instance(rng);
    const auto grads = green_control_loss_grad(AttentionStack(inst.layers), inst.mask);
    ASSERT_EQ(grads.size(), inst.layers.size());
    for (std::size_t l = 0; l < inst.layers.size(); ++l) {
      auto loss = [&](std::span<const float> x) {
        auto layers = inst.layers;
        layers[l] = AttentionMap(layers[l].height(), layers[l].width(), 1, std::vector<float>(x.begin(), x.end()));
        return green_control_loss(AttentionStack(std::move(layers)), inst.mask);
      };
      EXPECT_LE(grad_check<float>(loss, inst.layers[l].data(), grads[l], 1e-3).max_rel_error, 1e-3);
    }
  }
}

TEST(GreenLoss, WrongGradientIsCaught) {
  Rng rng(26);
  const auto inst = fx::green_loss_instance(rng);
  auto grads = green_control_loss_grad(AttentionStack(inst.layers), inst.mask);
  for (double& g : grads[0]) g *= 2.0;
  auto loss = [&](std::span<const float> x) {
    auto layers = inst.layers;
    layers[0] = AttentionMap(8, 8, 1, std::vector<float>(x.begin(), x.end()));
    return green_control_loss(AttentionStack(std::move(layers)), inst.mask);
  };
  EXPECT_GT(grad_check<float>(loss, inst.layers[0].data(), grads[0], 1e-3).max_rel_error, 0.1);
}

TEST(AttentionStackIo, RoundTrip) {
  TempDir dir("attn");
  Rng rng(27);
  const AttentionStack s({grid_cast<AttentionPolicy>(fx::random_matte(rng, 8, 8)),
                          grid_cast<AttentionPolicy>(fx::random_matte(rng, 4, 2))});
  save_attention_stack(s, dir.path());
  const auto back = load_attention_stack(dir / "manifest.json");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], s[0]);
  EXPECT_EQ(back[1], s[1]);
}
