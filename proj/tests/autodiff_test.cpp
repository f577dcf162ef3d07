// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "sedrfuse/autodiff.hpp"
#include "sedrfuse/tensor_ops.hpp"
#include "support.hpp"

namespace sedrfuse::ad {
namespace {

using testing::random_tensor;
using V = Var<double>;

// Checks every entry of every input of `build`, reduced to a scalar through a
// fixed random projection so all output entries carry gradient.
double check(const std::vector<Tensor<double>>& inputs, const std::function<V(std::vector<V>&)>& build,
             std::uint64_t seed = 0) {
  Tape<double> tape;
  std::vector<V> vars;
  for (const auto& t : inputs) vars.push_back(tape.leaf(t, true));
  const V out = build(vars);
  std::mt19937_64 rng(seed + 100);
  const V proj = tape.leaf(random_tensor(out.shape(), rng));
  const V loss = sum(mul(out, proj));
  return grad_check(tape, loss, vars, 1e-6, 0, seed);
}

constexpr double kTol = 1e-6;

TEST(Autodiff, ConvGradients) {
  std::mt19937_64 rng(1);
  for (int s : {1, 2}) {
    const double err = check({random_tensor(Shape{2, 4, 4}, rng), random_tensor(Shape{3, 2, 3, 3}, rng),
                              random_tensor(Shape{3}, rng)},
                             [s](std::vector<V>& v) { return conv2d(v[0], v[1], v[2], s); });
    EXPECT_LT(err, kTol) << "stride " << s;
  }
}

TEST(Autodiff, DeconvGradients) {
  std::mt19937_64 rng(2);
  for (int s : {1, 2}) {
    const double err = check({random_tensor(Shape{3, 2, 3}, rng), random_tensor(Shape{3, 2, 3, 3}, rng),
                              random_tensor(Shape{2}, rng)},
                             [s](std::vector<V>& v) { return deconv2d(v[0], v[1], v[2], s); });
    EXPECT_LT(err, kTol) << "stride " << s;
  }
}

// Keeps values at least 0.1 away from 0 so finite differences never straddle
// the kink.
Tensor<double> away_from_zero(const Shape& shape, std::mt19937_64& rng) {
  auto t = random_tensor(shape, rng, 0.1, 1.0);
  std::bernoulli_distribution flip(0.5);
  for (double& v : t.data()) v = flip(rng) ? -v : v;
  return t;
}

TEST(Autodiff, ElementwiseGradients) {
  std::mt19937_64 rng(3);
  const Shape shape{2, 3, 3};
  EXPECT_LT(check({away_from_zero(shape, rng)}, [](auto& v) { return relu(v[0]); }), kTol);
  EXPECT_LT(check({random_tensor(shape, rng), random_tensor(shape, rng)},
                  [](auto& v) { return add(v[0], v[1]); }),
            kTol);
  EXPECT_LT(check({random_tensor(shape, rng), random_tensor(shape, rng)},
                  [](auto& v) { return sub(v[0], v[1]); }),
            kTol);
  EXPECT_LT(check({random_tensor(shape, rng), random_tensor(shape, rng)},
                  [](auto& v) { return mul(v[0], v[1]); }),
            kTol);
  EXPECT_LT(check({random_tensor(shape, rng), random_tensor(shape, rng, 0.5, 2.0)},
                  [](auto& v) { return div(v[0], v[1]); }),
            kTol);
  auto a = random_tensor(shape, rng);
  auto b = a;
  for (double& x : b.data()) x += (x > 0 ? -0.3 : 0.3);  // distinct everywhere
  EXPECT_LT(check({a, b}, [](auto& v) { return maximum(v[0], v[1]); }), kTol);
  EXPECT_LT(check({random_tensor(shape, rng)}, [](auto& v) { return affine(v[0], -2.5, 0.75); }), kTol);
  EXPECT_LT(check({random_tensor(shape, rng, 0.2, 3.0)}, [](auto& v) { return sqrt(v[0]); }), kTol);
}

TEST(Autodiff, ReductionAndSoftmaxGradients) {
  std::mt19937_64 rng(4);
  EXPECT_LT(check({random_tensor(Shape{5, 2, 3}, rng, -3, 3)},
                  [](auto& v) { return channel_softmax(v[0]); }),
            kTol);
  EXPECT_LT(check({random_tensor(Shape{1, 3, 4}, rng)}, [](auto& v) { return mean(v[0]); }), kTol);
  EXPECT_LT(check({random_tensor(Shape{2, 2, 2}, rng)}, [](auto& v) { return sum(v[0]); }), kTol);
  const auto taps = ops::gaussian_taps(5, 1.0);
  EXPECT_LT(check({random_tensor(Shape{2, 6, 7}, rng)},
                  [&taps](auto& v) { return window_filter(v[0], taps); }),
            kTol);
}

TEST(Autodiff, SmallConvNetMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Tape<double> tape;
    const V x = tape.leaf(random_tensor(Shape{1, 8, 8}, rng, 0, 1));
    std::vector<V> params;
    auto layer = [&](std::size_t cout, std::size_t cin) {
      params.push_back(tape.leaf(random_tensor(Shape{cout, cin, 3, 3}, rng, -0.5, 0.5), true));
      params.push_back(tape.leaf(random_tensor(Shape{cout}, rng, -0.1, 0.1), true));
    };
    layer(4, 1);
    layer(6, 4);
    layer(1, 6);
    V h = relu(conv2d(x, params[0], params[1], 1));
    h = relu(conv2d(h, params[2], params[3], 2));
    h = conv2d(h, params[4], params[5], 1);
    const V loss = mean(mul(h, h));
    EXPECT_LT(grad_check(tape, loss, params, 1e-6, 0, seed), 1e-4);
  }
}

TEST(Autodiff, FanOutAccumulates) {
  Tape<double> tape;
  const V x = tape.leaf(Tensor<double>(Shape{1, 1, 2}, {3.0, -2.0}), true);
  const V loss = sum(add(mul(x, x), x));  // d/dx = 2x + 1
  const auto g = tape.backward(loss);
  EXPECT_DOUBLE_EQ(g[x][0], 7.0);
  EXPECT_DOUBLE_EQ(g[x][1], -3.0);
}

TEST(Autodiff, GradientsOnlyForRequestedLeaves) {
  Tape<double> tape;
  const V a = tape.leaf(Tensor<double>::scalar(2.0), true);
  const V b = tape.leaf(Tensor<double>::scalar(5.0));
  const V unused = tape.leaf(Tensor<double>::scalar(1.0), true);
  const V loss = mul(a, b);
  const auto g = tape.backward(loss);
  EXPECT_DOUBLE_EQ(g[a].item(), 5.0);
  EXPECT_FALSE(g.has(b));
  EXPECT_THROW(g[b], std::out_of_range);
  EXPECT_DOUBLE_EQ(g[unused].item(), 0.0);
}

TEST(Autodiff, BackwardRequiresScalarLoss) {
  Tape<double> tape;
  const V a = tape.leaf(Tensor<double>(Shape{1, 1, 2}), true);
  EXPECT_THROW(tape.backward(relu(a)), ShapeError);
}

TEST(Autodiff, ReplayPropagatesNewLeafValues) {
  Tape<double> tape;
  const V a = tape.leaf(Tensor<double>::scalar(2.0), true);
  const V out = affine(mul(a, a), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(out.value().item(), 5.0);
  tape.set_leaf_value(a, Tensor<double>::scalar(3.0));
  tape.replay();
  EXPECT_DOUBLE_EQ(out.value().item(), 10.0);
  EXPECT_THROW(tape.set_leaf_value(a, Tensor<double>(Shape{2})), ShapeError);
  EXPECT_EQ(tape.op_name(out), "affine");
}

TEST(Autodiff, SqrtGradientAtZeroIsZero) {
  Tape<double> tape;
  const V a = tape.leaf(Tensor<double>::scalar(0.0), true);
  const auto g = tape.backward(sqrt(a));
  EXPECT_EQ(g[a].item(), 0.0);
}

TEST(Autodiff, MaximumRoutesTiesToSecondOperand) {
  Tape<double> tape;
  const V a = tape.leaf(Tensor<double>(Shape{2}, {1.0, 2.0}), true);
  const V b = tape.leaf(Tensor<double>(Shape{2}, {1.0, 0.0}), true);
  const auto g = tape.backward(sum(maximum(a, b)));
  EXPECT_EQ(g[a].vector(), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(g[b].vector(), (std::vector<double>{1.0, 0.0}));
}

TEST(Autodiff, FloatTapeAgreesWithDouble) {
  std::mt19937_64 rng(6);
  const auto x = random_tensor(Shape{2, 4, 4}, rng);
  const auto k = random_tensor(Shape{3, 2, 3, 3}, rng);
  const auto b = random_tensor(Shape{3}, rng);
  Tape<double> td;
  const V kd = td.leaf(k, true);
  const auto gd = td.backward(mean(relu(conv2d(td.leaf(x), kd, td.leaf(b), 1))));
  Tape<float> tf;
  const Var<float> kf = tf.leaf(k.cast<float>(), true);
  const auto gf = tf.backward(mean(relu(conv2d(tf.leaf(x.cast<float>()), kf, tf.leaf(b.cast<float>()), 1))));
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_NEAR(gf[kf][i], gd[kd][i], 1e-5);
}

}  // namespace
}  // namespace sedrfuse::ad
