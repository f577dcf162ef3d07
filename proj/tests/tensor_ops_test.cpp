// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sedrfuse/kernels.hpp"
#include "sedrfuse/tensor_ops.hpp"
#include "support.hpp"

namespace sedrfuse {
namespace kernels {
void PrintTo(Isa isa, std::ostream* os) { *os << isa_name(isa); }
}  // namespace kernels

namespace {

using testing::dot;
using testing::max_abs_diff;
using testing::random_tensor;

// Direct 3x3 correlation, zero padding 1.
Tensor<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& k,
                           const Tensor<double>& b, std::size_t s) {
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2), cout = k.dim(0);
  Tensor<double> y(Shape{cout, h / s, w / s});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t i = 0; i < h / s; ++i) {
      for (std::size_t j = 0; j < w / s; ++j) {
        double acc = b[o];
        for (std::size_t c = 0; c < cin; ++c) {
          for (int u = 0; u < 3; ++u) {
            for (int v = 0; v < 3; ++v) {
              const long yy = static_cast<long>(i * s) + u - 1;
              const long xx = static_cast<long>(j * s) + v - 1;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
              acc += k[((o * cin + c) * 3 + u) * 3 + v] * x.at(c, yy, xx);
            }
          }
        }
        y.at(o, i, j) = acc;
      }
    }
  }
  return y;
}

// Transposed convolution as a scatter: every input pixel spreads its kernel
// over the s-times larger output, offset by the padding of 1.
Tensor<double> deconv_oracle(const Tensor<double>& x, const Tensor<double>& k,
                             const Tensor<double>& b, std::size_t s) {
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2), cout = k.dim(1);
  Tensor<double> y(Shape{cout, h * s, w * s});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t i = 0; i < y.dim(1) * y.dim(2); ++i) y[o * y.dim(1) * y.dim(2) + i] = b[o];
  }
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        for (std::size_t o = 0; o < cout; ++o) {
          for (int u = 0; u < 3; ++u) {
            for (int v = 0; v < 3; ++v) {
              const long yy = static_cast<long>(i * s) + u - 1;
              const long xx = static_cast<long>(j * s) + v - 1;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(h * s) || xx >= static_cast<long>(w * s)) continue;
              y.at(o, yy, xx) += k[((c * cout + o) * 3 + u) * 3 + v] * x.at(c, i, j);
            }
          }
        }
      }
    }
  }
  return y;
}

class TensorOpsTest : public ::testing::TestWithParam<kernels::Isa> {
 protected:
  void SetUp() override {
    if (!kernels::isa_supported(GetParam())) GTEST_SKIP() << "variant unsupported";
    kernels::set_active_isa(GetParam());
  }
  void TearDown() override { kernels::set_active_isa(kernels::detect_isa()); }
};

TEST_P(TensorOpsTest, ConvMatchesDirectOracle) {
  std::mt19937_64 rng(10);
  for (std::size_t s : {1u, 2u}) {
    for (auto [cin, cout, h, w] : {std::array<std::size_t, 4>{1, 4, 8, 8}, {3, 5, 6, 10}, {16, 7, 4, 4}}) {
      const auto x = random_tensor(Shape{cin, h, w}, rng);
      const auto k = random_tensor(Shape{cout, cin, 3, 3}, rng);
      const auto b = random_tensor(Shape{cout}, rng);
      const auto y = ops::conv2d(x, k, b, static_cast<int>(s));
      const auto want = conv_oracle(x, k, b, s);
      ASSERT_EQ(y.shape(), want.shape());
      EXPECT_LT(max_abs_diff(y, want), 1e-12) << "stride " << s;
    }
  }
}

TEST_P(TensorOpsTest, DeconvMatchesScatterOracle) {
  std::mt19937_64 rng(11);
  for (std::size_t s : {1u, 2u}) {
    for (auto [cin, cout, h, w] : {std::array<std::size_t, 4>{4, 1, 4, 4}, {3, 5, 3, 5}, {8, 8, 2, 2}}) {
      const auto x = random_tensor(Shape{cin, h, w}, rng);
      const auto k = random_tensor(Shape{cin, cout, 3, 3}, rng);
      const auto b = random_tensor(Shape{cout}, rng);
      const auto y = ops::deconv2d(x, k, b, static_cast<int>(s));
      const auto want = deconv_oracle(x, k, b, s);
      ASSERT_EQ(y.shape(), want.shape());
      EXPECT_LT(max_abs_diff(y, want), 1e-12) << "stride " << s;
    }
  }
}

// Zero insertion, asymmetric padding, then a stride-1 correlation with the
// reversed kernel; shares no code with the scatter oracle.
TEST_P(TensorOpsTest, DeconvMatchesZeroInsertionRoute) {
  std::mt19937_64 rng(20);
  for (std::size_t s : {1u, 2u}) {
    const std::size_t cin = 3, cout = 4, h = 3, w = 4;
    const auto x = random_tensor(Shape{cin, h, w}, rng);
    const auto k = random_tensor(Shape{cin, cout, 3, 3}, rng);
    const auto b = random_tensor(Shape{cout}, rng);
    const std::size_t ph = (h - 1) * s + 1 + 1 + s, pw = (w - 1) * s + 1 + 1 + s;
    Tensor<double> z(Shape{cin, ph, pw});
    for (std::size_t c = 0; c < cin; ++c) {
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) z.at(c, 1 + i * s, 1 + j * s) = x.at(c, i, j);
      }
    }
    Tensor<double> want(Shape{cout, h * s, w * s});
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t p = 0; p < h * s; ++p) {
        for (std::size_t q = 0; q < w * s; ++q) {
          double acc = b[o];
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t u = 0; u < 3; ++u) {
              for (std::size_t v = 0; v < 3; ++v) {
                acc += k[((c * cout + o) * 3 + (2 - u)) * 3 + (2 - v)] * z.at(c, p + u, q + v);
              }
            }
          }
          want.at(o, p, q) = acc;
        }
      }
    }
    EXPECT_LT(max_abs_diff(ops::deconv2d(x, k, b, static_cast<int>(s)), want), 1e-12);
  }
}

// <conv(x, k), y> == <x, deconv(y, k)>: the transposed layer is the adjoint of
// the strided convolution sharing its kernel (read as [Cin', Cout'] = [Cout, Cin]).
TEST_P(TensorOpsTest, DeconvIsAdjointOfConv) {
  std::mt19937_64 rng(12);
  for (std::size_t s : {1u, 2u}) {
    const auto x = random_tensor(Shape{3, 8, 8}, rng);
    const auto k = random_tensor(Shape{5, 3, 3, 3}, rng);
    const auto y = random_tensor(Shape{5, 8 / s, 8 / s}, rng);
    const Tensor<double> zero_out(Shape{5}), zero_in(Shape{3});
    const double lhs = dot(ops::conv2d(x, k, zero_out, static_cast<int>(s)), y);
    const double rhs = dot(x, ops::deconv2d(y, k, zero_in, static_cast<int>(s)));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

// Both layers are bilinear in (input, kernel), so each backward product must
// satisfy <grad, direction> == <layer(direction), grad_out>.
TEST_P(TensorOpsTest, ConvBackwardSatisfiesBilinearIdentities) {
  std::mt19937_64 rng(13);
  for (int s : {1, 2}) {
    const auto x = random_tensor(Shape{4, 8, 8}, rng);
    const auto k = random_tensor(Shape{6, 4, 3, 3}, rng);
    const Tensor<double> zero(Shape{6});
    const auto g = random_tensor(Shape{6, 8 / std::size_t(s), 8 / std::size_t(s)}, rng);
    Tensor<double> gx(x.shape()), gk(k.shape()), gb(Shape{6});
    ops::conv2d_backward(x, k, s, g, &gx, &gk, &gb);

    const auto dx = random_tensor(x.shape(), rng);
    const auto dk = random_tensor(k.shape(), rng);
    EXPECT_NEAR(dot(gx, dx), dot(ops::conv2d(dx, k, zero, s), g), 1e-10);
    EXPECT_NEAR(dot(gk, dk), dot(ops::conv2d(x, dk, zero, s), g), 1e-10);
    for (std::size_t o = 0; o < 6; ++o) {
      double sum = 0;
      for (std::size_t i = 0; i < g.size() / 6; ++i) sum += g[o * (g.size() / 6) + i];
      EXPECT_NEAR(gb[o], sum, 1e-12);
    }
  }
}

TEST_P(TensorOpsTest, DeconvBackwardSatisfiesBilinearIdentities) {
  std::mt19937_64 rng(14);
  for (int s : {1, 2}) {
    const auto x = random_tensor(Shape{6, 4, 4}, rng);
    const auto k = random_tensor(Shape{6, 3, 3, 3}, rng);
    const Tensor<double> zero(Shape{3});
    const auto g = random_tensor(Shape{3, 4 * std::size_t(s), 4 * std::size_t(s)}, rng);
    Tensor<double> gx(x.shape()), gk(k.shape()), gb(Shape{3});
    ops::deconv2d_backward(x, k, s, g, &gx, &gk, &gb);

    const auto dx = random_tensor(x.shape(), rng);
    const auto dk = random_tensor(k.shape(), rng);
    EXPECT_NEAR(dot(gx, dx), dot(ops::deconv2d(dx, k, zero, s), g), 1e-10);
    EXPECT_NEAR(dot(gk, dk), dot(ops::deconv2d(x, dk, zero, s), g), 1e-10);
  }
}

TEST_P(TensorOpsTest, BackwardAccumulatesAndSkipsNulls) {
  std::mt19937_64 rng(15);
  const auto x = random_tensor(Shape{2, 4, 4}, rng);
  const auto k = random_tensor(Shape{3, 2, 3, 3}, rng);
  const auto g = random_tensor(Shape{3, 4, 4}, rng);
  Tensor<double> once(x.shape()), twice(x.shape());
  ops::conv2d_backward<double>(x, k, 1, g, &once, nullptr, nullptr);
  ops::conv2d_backward<double>(x, k, 1, g, &twice, nullptr, nullptr);
  ops::conv2d_backward<double>(x, k, 1, g, &twice, nullptr, nullptr);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(twice[i], 2 * once[i], 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Variants, TensorOpsTest,
                         ::testing::Values(kernels::Isa::scalar, kernels::Isa::avx2),
                         [](const auto& info) { return std::string(kernels::isa_name(info.param)); });

TEST(TensorOps, ConvRejectsBadShapes) {
  const Tensor<double> x(Shape{2, 6, 6});
  const Tensor<double> k(Shape{4, 3, 3, 3}), b(Shape{4});
  EXPECT_THROW(ops::conv2d(x, k, b, 1), ShapeError);  // channel mismatch
  const Tensor<double> k2(Shape{4, 2, 3, 3});
  EXPECT_THROW(ops::conv2d(Tensor<double>(Shape{2, 5, 6}), k2, b, 2), ShapeError);
  EXPECT_THROW(ops::conv2d(x, k2, Tensor<double>(Shape{3}), 1), ShapeError);
  EXPECT_ANY_THROW(ops::conv2d(x, k2, b, 3));
}

TEST(TensorOps, ElementwiseOps) {
  const Tensor<double> a(Shape{1, 1, 4}, {-1.0, 0.0, 2.0, 3.0});
  const Tensor<double> b(Shape{1, 1, 4}, {1.0, -1.0, 2.0, 5.0});
  EXPECT_EQ(ops::relu(a).vector(), (std::vector<double>{0, 0, 2, 3}));
  EXPECT_EQ(ops::add(a, b).vector(), (std::vector<double>{0, -1, 4, 8}));
  EXPECT_EQ(ops::sub(a, b).vector(), (std::vector<double>{-2, 1, 0, -2}));
  EXPECT_EQ(ops::mul(a, b).vector(), (std::vector<double>{-1, -0.0, 4, 15}));
  EXPECT_EQ(ops::maximum(a, b).vector(), (std::vector<double>{1, 0, 2, 5}));
  EXPECT_EQ(ops::relu_backward(a, b).vector(), (std::vector<double>{0, 0, 2, 5}));
  EXPECT_THROW(ops::add(a, Tensor<double>(Shape{1, 2, 2})), ShapeError);
}

TEST(TensorOps, SoftmaxSumsToOneAndIsShiftInvariant) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_tensor(Shape{17, 3, 5}, rng, -30, 30);
    const auto p = ops::channel_softmax(x);
    Tensor<double> shifted = x;
    for (std::size_t i = 0; i < 15; ++i) {
      for (std::size_t c = 0; c < 17; ++c) shifted[c * 15 + i] += 100.0 * i;
    }
    const auto q = ops::channel_softmax(shifted);
    for (std::size_t i = 0; i < 15; ++i) {
      double sum = 0;
      for (std::size_t c = 0; c < 17; ++c) {
        const double v = p[c * 15 + i];
        EXPECT_GE(v, 0.0);
        sum += v;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    EXPECT_LT(max_abs_diff(p, q), 1e-12);
  }
}

TEST(TensorOps, SoftmaxSurvivesHugeLogitsAndRejectsNonFinite) {
  Tensor<float> x(Shape{2, 1, 1}, std::vector<float>{1000.0f, 999.0f});
  const auto p = ops::channel_softmax(x);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-6);
  x[1] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(ops::channel_softmax(x), std::domain_error);
  x[1] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(ops::channel_softmax(x), std::domain_error);
}

TEST(TensorOps, SoftmaxBackwardMatchesJacobian) {
  std::mt19937_64 rng(17);
  const auto x = random_tensor(Shape{5, 1, 1}, rng);
  const auto g = random_tensor(Shape{5, 1, 1}, rng);
  const auto p = ops::channel_softmax(x);
  const auto got = ops::channel_softmax_backward(p, g);
  for (std::size_t i = 0; i < 5; ++i) {
    double want = 0;
    for (std::size_t j = 0; j < 5; ++j) want += g[j] * p[j] * ((i == j ? 1.0 : 0.0) - p[i]);
    EXPECT_NEAR(got[i], want, 1e-14);
  }
}

TEST(TensorOps, GaussianTapsAreNormalizedAndSymmetric) {
  const auto taps = ops::gaussian_taps(11, 1.5);
  ASSERT_EQ(taps.size(), 11u);
  double sum = 0;
  for (double t : taps) sum += t;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(taps[i], taps[10 - i]);
  EXPECT_NEAR(taps[5] / taps[6], std::exp(1.0 / (2 * 1.5 * 1.5)), 1e-12);
  EXPECT_THROW(ops::gaussian_taps(4, 1.0), std::invalid_argument);
}

// Window average with the out-of-image taps dropped and the rest re-weighted.
Tensor<double> window_oracle(const Tensor<double>& x, const std::vector<double>& taps) {
  const long r = static_cast<long>(taps.size() / 2);
  const long h = static_cast<long>(x.dim(1)), w = static_cast<long>(x.dim(2));
  Tensor<double> y(x.shape());
  for (std::size_t c = 0; c < x.dim(0); ++c) {
    for (long i = 0; i < h; ++i) {
      for (long j = 0; j < w; ++j) {
        double acc = 0, norm = 0;
        for (long u = -r; u <= r; ++u) {
          for (long v = -r; v <= r; ++v) {
            if (i + u < 0 || i + u >= h || j + v < 0 || j + v >= w) continue;
            const double wt = taps[u + r] * taps[v + r];
            acc += wt * x.at(c, i + u, j + v);
            norm += wt;
          }
        }
        y.at(c, i, j) = acc / norm;
      }
    }
  }
  return y;
}

TEST(TensorOps, WindowFilterMatchesCroppedWindowOracle) {
  std::mt19937_64 rng(18);
  const auto taps = ops::gaussian_taps(11, 1.5);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{8, 8}, {16, 5}, {3, 20}, {1, 1}}) {
    const auto x = random_tensor(Shape{2, h, w}, rng);
    EXPECT_LT(max_abs_diff(ops::window_filter(x, taps), window_oracle(x, taps)), 1e-14);
  }
  const Tensor<double> flat(Shape{1, 6, 9}, 0.25);
  EXPECT_LT(max_abs_diff(ops::window_filter(flat, taps), flat), 1e-15);
}

TEST(TensorOps, WindowFilterAdjointIdentity) {
  std::mt19937_64 rng(19);
  const auto taps = ops::gaussian_taps(7, 1.2);
  const auto x = random_tensor(Shape{1, 9, 12}, rng);
  const auto y = random_tensor(Shape{1, 9, 12}, rng);
  EXPECT_NEAR(dot(ops::window_filter(x, taps), y), dot(x, ops::window_filter_adjoint(y, taps)),
              1e-12);
}

}  // namespace
}  // namespace sedrfuse
