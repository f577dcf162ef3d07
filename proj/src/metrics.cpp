// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sedrfuse/loss.hpp"
#include "sedrfuse/tensor_ops.hpp"

namespace sedrfuse::metrics {
namespace {

std::vector<double> scaled255(const GrayImage& img) {
  std::vector<double> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(img.pixels[i]) * 255.0;
  return out;
}

void require_same_size(const GrayImage& a, const GrayImage& b, const char* what) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument(std::string(what) + ": image sizes differ");
  }
}

Tensor<double> plane_tensor(std::vector<double> v, std::size_t h, std::size_t w) {
  return Tensor<double>(Shape{1, h, w}, std::move(v));
}

}  // namespace

double entropy(const GrayImage& img) {
  std::array<std::size_t, 256> hist{};
  for (float v : img.pixels) ++hist[quantize_pixel(v)];
  const double n = static_cast<double>(img.pixels.size());
  double h = 0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double spatial_frequency(const GrayImage& img) {
  if (img.width < 2 || img.height < 2) {
    throw std::invalid_argument("spatial_frequency: image must be at least 2x2");
  }
  const auto f = scaled255(img);
  const std::size_t w = img.width, h = img.height;
  auto px = [&](std::size_t y, std::size_t x) { return f[y * w + x]; };
  double rf = 0, cf = 0, mdf = 0, sdf = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (x > 0) rf += std::pow(px(y, x) - px(y, x - 1), 2);
      if (y > 0) cf += std::pow(px(y, x) - px(y - 1, x), 2);
      if (y > 0 && x > 0) mdf += std::pow(px(y, x) - px(y - 1, x - 1), 2);
      if (y > 0 && x + 1 < w) sdf += std::pow(px(y, x) - px(y - 1, x + 1), 2);
    }
  }
  const double mn = static_cast<double>(w * h);
  const double wd = 1.0 / std::sqrt(2.0);
  return std::sqrt(rf / mn + cf / mn + wd * mdf / mn + wd * sdf / mn);
}

double standard_deviation(const GrayImage& img) {
  const auto f = scaled255(img);
  double mean = 0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(f.size());
  double var = 0;
  for (double v : f) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(f.size()));
}

double average_gradient(const GrayImage& img) {
  if (img.width < 2 || img.height < 2) {
    throw std::invalid_argument("average_gradient: image must be at least 2x2");
  }
  const auto f = scaled255(img);
  const std::size_t w = img.width, h = img.height;
  double acc = 0;
  for (std::size_t y = 0; y + 1 < h; ++y) {
    for (std::size_t x = 0; x + 1 < w; ++x) {
      const double gx = f[y * w + x + 1] - f[y * w + x];
      const double gy = f[(y + 1) * w + x] - f[y * w + x];
      acc += std::sqrt((gx * gx + gy * gy) / 2.0);
    }
  }
  return acc / static_cast<double>((w - 1) * (h - 1));
}

double pearson(const GrayImage& a, const GrayImage& b) {
  require_same_size(a, b, "pearson");
  const std::size_t n = a.pixels.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.pixels[i];
    mb += b.pixels[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.pixels[i] - ma, db = b.pixels[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0 || sbb <= 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double correlation_coefficient(const GrayImage& fused, const GrayImage& src_a,
                               const GrayImage& src_b) {
  return (pearson(fused, src_a) + pearson(fused, src_b)) / 2.0;
}

double ssim_metric(const GrayImage& fused, const GrayImage& src_a, const GrayImage& src_b) {
  require_same_size(fused, src_a, "ssim_metric");
  require_same_size(fused, src_b, "ssim_metric");
  const auto f = fused.to_tensor<double>();
  return (ssim(f, src_a.to_tensor<double>()) + ssim(f, src_b.to_tensor<double>())) / 2.0;
}

double vif(const GrayImage& reference, const GrayImage& distorted) {
  require_same_size(reference, distorted, "vif");
  if (reference.width < 8 || reference.height < 8) {
    throw std::invalid_argument("vif: images must be at least 8x8 for four scales");
  }
  constexpr double kNoise = 2.0;  // sigma_n^2
  constexpr double kTiny = 1e-10;
  Tensor<double> ref = plane_tensor(scaled255(reference), reference.height, reference.width);
  Tensor<double> dist = plane_tensor(scaled255(distorted), reference.height, reference.width);

  double num = 0, den = 0;
  for (int scale = 1; scale <= 4; ++scale) {
    const int size = (1 << (4 - scale + 1)) + 1;
    const auto taps = ops::gaussian_taps(size, size / 5.0);
    if (scale > 1) {
      auto down = [&taps](const Tensor<double>& t) {
        const Tensor<double> s = ops::window_filter(t, taps);
        const std::size_t h = (t.dim(1) + 1) / 2, w = (t.dim(2) + 1) / 2;
        Tensor<double> out(Shape{1, h, w});
        for (std::size_t y = 0; y < h; ++y) {
          for (std::size_t x = 0; x < w; ++x) out.at(0, y, x) = s.at(0, 2 * y, 2 * x);
        }
        return out;
      };
      ref = down(ref);
      dist = down(dist);
    }
    const Tensor<double> mu1 = ops::window_filter(ref, taps);
    const Tensor<double> mu2 = ops::window_filter(dist, taps);
    const Tensor<double> e11 = ops::window_filter(ops::mul(ref, ref), taps);
    const Tensor<double> e22 = ops::window_filter(ops::mul(dist, dist), taps);
    const Tensor<double> e12 = ops::window_filter(ops::mul(ref, dist), taps);

    for (std::size_t i = 0; i < mu1.size(); ++i) {
      double s11 = std::max(0.0, e11[i] - mu1[i] * mu1[i]);
      const double s22 = std::max(0.0, e22[i] - mu2[i] * mu2[i]);
      const double s12 = e12[i] - mu1[i] * mu2[i];
      double g = s12 / (s11 + kTiny);
      double sv = s22 - g * s12;
      if (s11 < kTiny) {
        g = 0;
        sv = s22;
        s11 = 0;
      }
      if (s22 < kTiny) {
        g = 0;
        sv = 0;
      }
      if (g < 0) {
        sv = s22;
        g = 0;
      }
      if (sv <= kTiny) sv = kTiny;
      num += std::log2(1.0 + g * g * s11 / (sv + kNoise));
      den += std::log2(1.0 + s11 / kNoise);
    }
  }
  return den > 0 ? num / den : 1.0;
}

double vif_metric(const GrayImage& fused, const GrayImage& src_a, const GrayImage& src_b) {
  return (vif(src_a, fused) + vif(src_b, fused)) / 2.0;
}

MetricsReport evaluate(const GrayImage& fused, const GrayImage& src_a, const GrayImage& src_b) {
  require_same_size(fused, src_a, "evaluate");
  require_same_size(fused, src_b, "evaluate");
  MetricsReport r;
  r.en = entropy(fused);
  r.sf = spatial_frequency(fused);
  r.sd = standard_deviation(fused);
  r.ag = average_gradient(fused);
  r.cc = correlation_coefficient(fused, src_a, src_b);
  r.ssim = ssim_metric(fused, src_a, src_b);
  r.vif = vif_metric(fused, src_a, src_b);
  return r;
}

MetricsReport average(std::span<const MetricsReport> reports) {
  MetricsReport m;
  m.fused_id = m.src_a_id = m.src_b_id = "average";
  if (reports.empty()) return m;
  for (const auto& r : reports) {
    m.en += r.en;
    m.sf += r.sf;
    m.sd += r.sd;
    m.ag += r.ag;
    m.cc += r.cc;
    m.ssim += r.ssim;
    m.vif += r.vif;
  }
  const double n = static_cast<double>(reports.size());
  for (double* v : {&m.en, &m.sf, &m.sd, &m.ag, &m.cc, &m.ssim, &m.vif}) *v /= n;
  return m;
}

std::vector<MetricsReport> evaluate_batch(
    std::span<const std::array<const GrayImage*, 3>> triples) {
  std::vector<MetricsReport> out;
  out.reserve(triples.size());
  for (const auto& t : triples) out.push_back(evaluate(*t[0], *t[1], *t[2]));
  return out;
}

std::string to_csv(std::span<const MetricsReport> reports) {
  std::ostringstream os;
  os.precision(10);
  os << "# vif: " << kVifVariant << "\n";
  os << "fused,src_a,src_b";
  for (auto c : kColumns) os << ',' << c;
  os << '\n';
  for (const auto& r : reports) {
    os << r.fused_id << ',' << r.src_a_id << ',' << r.src_b_id;
    for (double v : r.columns()) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

namespace {

nlohmann::ordered_json report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["fused"] = r.fused_id;
  j["src_a"] = r.src_a_id;
  j["src_b"] = r.src_b_id;
  const auto values = r.columns();
  for (std::size_t i = 0; i < kColumns.size(); ++i) j[std::string(kColumns[i])] = values[i];
  return j;
}

}  // namespace

std::string to_json(const MetricsReport& report) {
  nlohmann::ordered_json j = report_json(report);
  j["vif_variant"] = kVifVariant;
  return j.dump(2);
}

std::string to_json(std::span<const MetricsReport> reports) {
  nlohmann::ordered_json j;
  j["vif_variant"] = kVifVariant;
  j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) j["pairs"].push_back(report_json(r));
  j["average"] = report_json(average(reports));
  return j.dump(2);
}

}  // namespace sedrfuse::metrics
