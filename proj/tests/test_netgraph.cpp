#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vpet/error.hpp"
#include "vpet/network.hpp"

using namespace vpet;
using namespace vpet::nn;

namespace {

Shape3 shape_of(const NetworkGraph& g, const std::string& layer) {
  return propagate_shapes(g)[static_cast<std::size_t>(g.index_of(layer))];
}

// Random loss weights w give the scalar L = sum w * y; its gradient is
// checked against central differences in double precision.
double worst_gradient_error(NetworkKind kind, int channels, int size, double width, std::uint64_t seed) {
  const NetworkGraph g = build_network(kind, channels, size, size, width);
  auto p = init_params(g, seed).cast<double>();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& a : p.arrays()) {
    for (auto& v : a.values) v += 0.1 * u(rng);
  }
  const Executor<double> ex(g);
  BasicTensor<double> x({2, channels, size, size});
  for (auto& v : x.data()) v = u(rng);
  ForwardTape<double> tape;
  const auto y = ex.forward(p, x, &tape);
  BasicTensor<double> w(y.shape());
  for (auto& v : w.data()) v = u(rng);
  auto grads = p.zeros_like();
  const auto gx = ex.backward(p, tape, w, &grads, true);

  auto loss = [&](const BasicTensor<double>& in) {
    const auto out = ex.forward(p, in);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += w.data()[i] * out.data()[i];
    return s;
  };
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b)); };
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t a = 0; a < p.arrays().size(); ++a) {
    auto& arr = p.arrays()[a];
    for (int t = 0; t < 2; ++t) {
      const std::size_t i = rng() % arr.values.size();
      const double orig = arr.values[i];
      arr.values[i] = orig + h;
      const double lp = loss(x);
      arr.values[i] = orig - h;
      const double lm = loss(x);
      arr.values[i] = orig;
      worst = std::max(worst, rel((lp - lm) / (2 * h), grads.arrays()[a].values[i]));
    }
  }
  for (int t = 0; t < 8; ++t) {
    const std::size_t i = rng() % x.size();
    const double orig = x.data()[i];
    x.data()[i] = orig + h;
    const double lp = loss(x);
    x.data()[i] = orig - h;
    const double lm = loss(x);
    x.data()[i] = orig;
    worst = std::max(worst, rel((lp - lm) / (2 * h), gx.data()[i]));
  }
  return worst;
}

}  // namespace

TEST(NetGraph, GeneratorTableRows) {
  const NetworkGraph g = build_network(NetworkKind::kUNetGenerator, 2, 512, 512, 1.0);
  EXPECT_EQ(shape_of(g, "conv1_2"), (Shape3{32, 512, 512}));
  EXPECT_EQ(shape_of(g, "conv5_2"), (Shape3{512, 32, 32}));
  EXPECT_EQ(shape_of(g, "upsampling1"), (Shape3{768, 64, 64}));
  EXPECT_EQ(shape_of(g, "upsampling4"), (Shape3{96, 512, 512}));
  EXPECT_EQ(output_shape(g), (Shape3{1, 512, 512}));
}

TEST(NetGraph, DiscriminatorTableRows) {
  const NetworkGraph g = build_network(NetworkKind::kDiscriminator, 3, 512, 512, 1.0);
  EXPECT_EQ(shape_of(g, "conv4"), (Shape3{256, 64, 64}));
  EXPECT_EQ(shape_of(g, "dense"), (Shape3{2, 1, 1}));
  EXPECT_EQ(output_shape(g), (Shape3{2, 1, 1}));
}

TEST(NetGraph, FcnOutputMatchesInput) {
  for (NetworkKind k : {NetworkKind::kFcn4s, NetworkKind::kFcn8s, NetworkKind::kFcn2s}) {
    EXPECT_EQ(output_shape(build_network(k, 1, 512, 512, 1.0)), (Shape3{1, 512, 512})) << to_string(k);
  }
}

TEST(NetGraph, QuarterWidthQuartersChannelsOnly) {
  for (NetworkKind k : {NetworkKind::kUNetGenerator, NetworkKind::kDiscriminator, NetworkKind::kFcn4s}) {
    const int ch = k == NetworkKind::kDiscriminator ? 3 : (k == NetworkKind::kUNetGenerator ? 2 : 1);
    const NetworkGraph full = build_network(k, ch, 128, 128, 1.0);
    const NetworkGraph quarter = build_network(k, ch, 128, 128, 0.25);
    const auto a = propagate_shapes(full), b = propagate_shapes(quarter);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 1; i < a.size(); ++i) {
      EXPECT_EQ(a[i].h, b[i].h);
      EXPECT_EQ(a[i].w, b[i].w);
      if (a[i].c > 4) {
        EXPECT_EQ(b[i].c * 4, a[i].c) << full.layers[i].name;
      }
    }
  }
}

TEST(NetGraph, ParameterCountExamples) {
  NetworkGraph g;
  g.kind = NetworkKind::kFcn4s;
  g.input_channels = 1;
  g.input_h = g.input_w = 8;
  g.layers = {{"input", LayerKind::kInput}, {"c", LayerKind::kConv, 3, 3, 32}};
  EXPECT_EQ(count_parameters(g), 320);
  g.layers[1].channels_out = 16;
  EXPECT_EQ(count_parameters(g), 160);
  const NetworkGraph u = build_network(NetworkKind::kUNetGenerator, 2, 64, 64, 0.25);
  EXPECT_EQ(count_parameters(u), static_cast<std::int64_t>(zero_params(u).scalar_count()));
}

TEST(NetGraph, ShapeErrors) {
  EXPECT_THROW(propagate_shapes(build_network(NetworkKind::kUNetGenerator, 2, 40, 40, 1.0)), Error);
  EXPECT_EQ(input_size_divisor(NetworkKind::kFcn4s), 32);
  EXPECT_EQ(input_size_divisor(NetworkKind::kUNetGenerator), 16);
}

TEST(NetGraph, StaticShapesMatchRuntimeShapes) {
  std::mt19937_64 rng(5);
  for (NetworkKind k : {NetworkKind::kFcn4s, NetworkKind::kFcn8s, NetworkKind::kFcn2s, NetworkKind::kUNetGenerator,
                        NetworkKind::kDiscriminator}) {
    const int ch = k == NetworkKind::kDiscriminator ? 3 : (k == NetworkKind::kUNetGenerator ? 2 : 1);
    const int div = input_size_divisor(k);
    const int size = div * (1 + static_cast<int>(rng() % 2));
    const NetworkGraph g = build_network(k, ch, size, size, 0.0625);
    const Executor<float> ex(g);
    Tensor x({2, ch, size, size}, 0.5f);
    const Tensor y = ex.forward(init_params(g, 1), x);
    const Shape3 s = output_shape(g);
    EXPECT_EQ(y.shape(), (Shape4{2, s.c, s.h, s.w})) << to_string(k);
  }
}

TEST(Executor, DiscriminatorRowsAreDistributions) {
  const NetworkGraph g = build_network(NetworkKind::kDiscriminator, 3, 32, 32, 0.25);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor x({3, 3, 32, 32});
  for (auto& v : x.data()) v = u(rng);
  const Tensor y = forward(g, init_params(g, 3), x);
  for (int n = 0; n < 3; ++n) EXPECT_NEAR(y.at(n, 0, 0, 0) + y.at(n, 1, 0, 0), 1.0, 1e-5);
}

TEST(Executor, ZeroParamsGiveConstantField) {
  const NetworkGraph g = build_network(NetworkKind::kFcn4s, 1, 64, 64, 0.125);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor x({1, 1, 64, 64});
  for (auto& v : x.data()) v = u(rng);
  const Tensor y = forward(g, zero_params(g), x);
  for (float v : y.data()) ASSERT_EQ(v, y.data()[0]);
}

TEST(Executor, BatchedForwardEqualsPerSample) {
  const NetworkGraph g = build_network(NetworkKind::kUNetGenerator, 2, 32, 32, 0.125);
  const ParamSet p = init_params(g, 4);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor x({2, 2, 32, 32});
  for (auto& v : x.data()) v = u(rng);
  const Tensor both = forward(g, p, x);
  Tensor second({1, 2, 32, 32}, std::vector<float>(x.data().begin() + 2 * 32 * 32, x.data().end()));
  const Tensor one = forward(g, p, second);
  for (std::size_t i = 0; i < one.size(); ++i) ASSERT_NEAR(one.data()[i], both.data()[one.size() + i], 1e-5);
}

TEST(Executor, GradientsMatchFiniteDifferences) {
  EXPECT_LT(worst_gradient_error(NetworkKind::kDiscriminator, 3, 16, 0.125, 1), 1e-4);
  EXPECT_LT(worst_gradient_error(NetworkKind::kUNetGenerator, 2, 16, 0.0625, 2), 1e-4);
  EXPECT_LT(worst_gradient_error(NetworkKind::kFcn4s, 1, 32, 0.03125, 3), 1e-4);
}

TEST(Params, InitIsSeededAndFinite) {
  const NetworkGraph g = build_network(NetworkKind::kFcn4s, 1, 64, 64, 0.25);
  EXPECT_EQ(init_params(g, 7), init_params(g, 7));
  EXPECT_FALSE(init_params(g, 7) == init_params(g, 8));
  EXPECT_TRUE(init_params(g, 7).all_finite());
}
