// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <random>

#include <json.hpp>

#include "oracles.hpp"
#include "sedrfuse/metrics.hpp"
#include "support.hpp"

namespace sedrfuse::metrics {
namespace {

using testing::ag_oracle;
using testing::en_oracle;
using testing::on_255;
using testing::pearson_oracle;
using testing::random_image;
using testing::sd_oracle;
using testing::sf_oracle;

TEST(Metrics, AllSevenMatchDirectOraclesOnRandom8x8) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const GrayImage f = random_image(8, 8, rng), a = random_image(8, 8, rng), b = random_image(8, 8, rng);
    const MetricsReport r = evaluate(f, a, b);
    EXPECT_NEAR(r.en, en_oracle(f), 1e-9);
    EXPECT_NEAR(r.sf, sf_oracle(f), 1e-9);
    EXPECT_NEAR(r.sd, sd_oracle(f), 1e-9);
    EXPECT_NEAR(r.ag, ag_oracle(f), 1e-9);
    EXPECT_NEAR(r.cc, (pearson_oracle(f, a) + pearson_oracle(f, b)) / 2, 1e-9);
    const auto tf = f.to_tensor<double>();
    EXPECT_NEAR(r.ssim,
                (testing::ssim_oracle(tf, a.to_tensor<double>()) +
                 testing::ssim_oracle(tf, b.to_tensor<double>())) / 2,
                1e-9);
    EXPECT_NEAR(r.vif,
                (testing::vif_oracle(on_255(a), on_255(f), 8, 8) +
                 testing::vif_oracle(on_255(b), on_255(f), 8, 8)) / 2,
                1e-9);
  }
}

TEST(Metrics, VifMatchesOracleOnLargerOddSizes) {
  std::mt19937_64 rng(2);
  const GrayImage a = random_image(21, 13, rng);
  GrayImage d = a;
  std::normal_distribution<float> noise(0, 0.05f);
  for (float& v : d.pixels) v = std::clamp(v + noise(rng), 0.0f, 1.0f);
  const double got = vif(a, d);
  EXPECT_NEAR(got, testing::vif_oracle(on_255(a), on_255(d), 13, 21), 1e-9);
  EXPECT_GT(got, 0.0);
  EXPECT_LT(got, 1.0);
}

TEST(Metrics, EntropyCases) {
  EXPECT_EQ(entropy(GrayImage(8, 8, 0.3f)), 0.0);
  GrayImage uniform(16, 16);
  for (std::size_t i = 0; i < 256; ++i) uniform.pixels[i] = static_cast<float>(i / 255.0);
  EXPECT_NEAR(entropy(uniform), 8.0, 1e-9);
  GrayImage three_to_one(4, 1, 0.0f);
  three_to_one.pixels[0] = 1.0f;  // p = (3/4, 1/4)
  EXPECT_NEAR(entropy(three_to_one), 0.8112781244591328, 1e-12);
}

TEST(Metrics, StandardDeviationOfHalfBlackHalfWhite) {
  GrayImage img(8, 8, 0.0f);
  std::fill(img.pixels.begin(), img.pixels.begin() + 32, 1.0f);
  EXPECT_EQ(standard_deviation(img), 127.5);
}

TEST(Metrics, GradientMeasuresVanishOnConstants) {
  const GrayImage flat(9, 7, 0.61f);
  EXPECT_EQ(spatial_frequency(flat), 0.0);
  EXPECT_EQ(average_gradient(flat), 0.0);
  EXPECT_EQ(standard_deviation(flat), 0.0);
}

TEST(Metrics, AverageGradientOfUnitRamp) {
  GrayImage ramp(10, 6);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 10; ++x) ramp.at(x, y) = static_cast<float>(x / 255.0);
  EXPECT_NEAR(average_gradient(ramp), std::sqrt(0.5), 1e-5);
}

TEST(Metrics, DifferenceMeasuresIgnoreIntensityOffset) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    GrayImage img = random_image(12, 12, rng);
    for (float& v : img.pixels) v = 0.1f + 0.5f * v;
    GrayImage shifted = img;
    for (float& v : shifted.pixels) v += 0.25f;
    // The offset is exact only up to float rounding of the shifted pixels.
    EXPECT_NEAR(spatial_frequency(shifted), spatial_frequency(img), 1e-3);
    EXPECT_NEAR(average_gradient(shifted), average_gradient(img), 1e-3);
    EXPECT_NEAR(standard_deviation(shifted), standard_deviation(img), 1e-3);
  }
}

TEST(Metrics, IdenticalTripleScoresOne) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const GrayImage x = random_image(16, 16, rng);
    const MetricsReport r = evaluate(x, x, x);
    EXPECT_NEAR(r.cc, 1.0, 1e-6);
    EXPECT_NEAR(r.ssim, 1.0, 1e-6);
    EXPECT_NEAR(r.vif, 1.0, 1e-6);
  }
}

TEST(Metrics, SourceOrderDoesNotMatter) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const GrayImage f = random_image(12, 10, rng), a = random_image(12, 10, rng),
                    b = random_image(12, 10, rng);
    EXPECT_EQ(evaluate(f, a, b).columns(), evaluate(f, b, a).columns());
  }
}

TEST(Metrics, SelfTripleKeepsSingleImageStatistics) {
  std::mt19937_64 rng(6);
  const GrayImage x = random_image(16, 12, rng);
  const MetricsReport r = evaluate(x, x, x);
  EXPECT_EQ(r.en, entropy(x));
  EXPECT_EQ(r.sf, spatial_frequency(x));
  EXPECT_EQ(r.sd, standard_deviation(x));
  EXPECT_EQ(r.ag, average_gradient(x));
}

TEST(Metrics, AntiCorrelatedSourceCancels) {
  std::mt19937_64 rng(7);
  const GrayImage a = random_image(10, 10, rng);
  GrayImage inverted = a;
  for (float& v : inverted.pixels) v = 1.0f - v;
  EXPECT_NEAR(correlation_coefficient(a, a, inverted), 0.0, 1e-6);
}

TEST(Metrics, SsimMetricDecomposesOverSources) {
  std::mt19937_64 rng(8);
  const GrayImage a = random_image(14, 14, rng), b = random_image(14, 14, rng);
  const double pair = testing::ssim_oracle(a.to_tensor<double>(), b.to_tensor<double>());
  EXPECT_NEAR(ssim_metric(a, a, b), (1 + pair) / 2, 1e-9);
}

TEST(Metrics, BlurLowersVif) {
  std::mt19937_64 rng(9);
  const GrayImage src = random_image(24, 24, rng);
  GrayImage blurred(24, 24);
  for (std::size_t y = 0; y < 24; ++y) {
    for (std::size_t x = 0; x < 24; ++x) {
      double acc = 0;
      int n = 0;
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          const long yy = static_cast<long>(y) + dy, xx = static_cast<long>(x) + dx;
          if (yy < 0 || yy >= 24 || xx < 0 || xx >= 24) continue;
          acc += src.at(xx, yy);
          ++n;
        }
      }
      blurred.at(x, y) = static_cast<float>(acc / n);
    }
  }
  const double v = vif_metric(blurred, src, src);
  EXPECT_LT(v, 1.0);
  EXPECT_NEAR(v, testing::vif_oracle(on_255(src), on_255(blurred), 24, 24), 1e-9);
}

TEST(Metrics, EntropyDependsOnlyOnTheHistogram) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    GrayImage img = testing::random_8bit_image(20, 20, rng);
    const double h = entropy(img);
    EXPECT_LE(h, 8.0);
    std::shuffle(img.pixels.begin(), img.pixels.end(), rng);
    EXPECT_EQ(entropy(img), h);
  }
}

TEST(Metrics, EdgeCases) {
  EXPECT_EQ(pearson(GrayImage(4, 4, 0.5f), GrayImage(4, 4, 0.2f)), 0.0);
  EXPECT_EQ(vif(GrayImage(8, 8, 0.5f), GrayImage(8, 8, 0.1f)), 1.0);
  EXPECT_THROW(vif(GrayImage(4, 8), GrayImage(4, 8)), std::invalid_argument);
  EXPECT_THROW(evaluate(GrayImage(8, 8), GrayImage(8, 8), GrayImage(8, 9)), std::invalid_argument);
  EXPECT_THROW(spatial_frequency(GrayImage(1, 5)), std::invalid_argument);
}

TEST(Metrics, ReportFormats) {
  MetricsReport r;
  r.fused_id = "f.pgm";
  r.src_a_id = "a.pgm";
  r.src_b_id = "b.pgm";
  r.ag = 1.5;
  r.vif = 0.25;
  MetricsReport s = r;
  s.ag = 2.5;
  const std::vector<MetricsReport> both{r, s};

  const std::string csv = to_csv(both);
  EXPECT_EQ(csv.substr(0, 7), "# vif: ");
  EXPECT_NE(csv.find("\nfused,src_a,src_b,AG,CC,EN,SF,SSIM,VIF,SD\n"), std::string::npos);
  EXPECT_NE(csv.find("\nf.pgm,a.pgm,b.pgm,1.5,0,0,0,0,0.25,0\n"), std::string::npos);

  const auto j = nlohmann::json::parse(to_json(std::span<const MetricsReport>(both)));
  EXPECT_EQ(j["pairs"].size(), 2u);
  EXPECT_EQ(j["average"]["AG"].get<double>(), 2.0);
  EXPECT_EQ(j["vif_variant"].get<std::string>(), std::string(kVifVariant));
  const auto single = nlohmann::json::parse(to_json(r));
  EXPECT_EQ(single["VIF"].get<double>(), 0.25);
  EXPECT_EQ(average(both).fused_id, "average");
}

}  // namespace
}  // namespace sedrfuse::metrics
