// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sedrfuse/image.hpp"

namespace sedrfuse::metrics {

// Single-image statistics. SF, SD and AG work on the [0, 255] intensity scale.

/// Shannon entropy (bits) of the 256-bin histogram of floor(v * 255 + 0.5).
double entropy(const GrayImage& img);
/// Four-direction spatial frequency: row, column and both diagonals, the
/// diagonal terms weighted by 1/sqrt(2). Every mean square is normalized by
/// the pixel count M * N. Needs at least 2x2 pixels.
double spatial_frequency(const GrayImage& img);
/// Population standard deviation.
double standard_deviation(const GrayImage& img);
/// Mean of sqrt((gx^2 + gy^2) / 2) over the (M-1) x (N-1) forward differences.
double average_gradient(const GrayImage& img);

// Fused-versus-source measures, each averaged over the two sources.

/// Pearson correlation; 0 if either image has zero variance.
double pearson(const GrayImage& a, const GrayImage& b);
double correlation_coefficient(const GrayImage& fused, const GrayImage& src_a,
                               const GrayImage& src_b);
double ssim_metric(const GrayImage& fused, const GrayImage& src_a, const GrayImage& src_b);

/// Pixel-domain visual information fidelity of `distorted` relative to
/// `reference` over four dyadic scales (window 17, 9, 5, 3; sigma = size / 5;
/// sigma_n^2 = 2). Both images must be at least 8x8. A reference with no
/// variance at any scale scores 1.
double vif(const GrayImage& reference, const GrayImage& distorted);
double vif_metric(const GrayImage& fused, const GrayImage& src_a, const GrayImage& src_b);

/// Report columns in table order.
inline constexpr std::array<std::string_view, 7> kColumns{"AG", "CC", "EN", "SF",
                                                          "SSIM", "VIF", "SD"};
inline constexpr std::string_view kVifVariant =
    "pixel-domain multi-scale VIF (4 scales, Gaussian windows 17/9/5/3, sigma_n^2 = 2)";

struct MetricsReport {
  std::string fused_id;
  std::string src_a_id;
  std::string src_b_id;
  double en = 0, sf = 0, sd = 0, ag = 0, cc = 0, ssim = 0, vif = 0;

  /// Values in kColumns order.
  std::array<double, 7> columns() const { return {ag, cc, en, sf, ssim, vif, sd}; }
};

MetricsReport evaluate(const GrayImage& fused, const GrayImage& src_a, const GrayImage& src_b);

/// Column-wise arithmetic mean; ids are set to "average".
MetricsReport average(std::span<const MetricsReport> reports);

/// Evaluates every triple and returns the per-pair reports.
std::vector<MetricsReport> evaluate_batch(
    std::span<const std::array<const GrayImage*, 3>> triples);

/// CSV with a leading "# vif: ..." comment line, a header row
/// fused,src_a,src_b,AG,CC,EN,SF,SSIM,VIF,SD and one row per report.
std::string to_csv(std::span<const MetricsReport> reports);
/// JSON object (single report) with a "vif_variant" note.
std::string to_json(const MetricsReport& report);
/// JSON object {"vif_variant", "pairs": [...], "average": {...}}.
std::string to_json(std::span<const MetricsReport> reports);

}  // namespace sedrfuse::metrics
