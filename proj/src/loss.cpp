// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/loss.hpp"

#include "sedrfuse/tensor_ops.hpp"

namespace sedrfuse {

template <typename T>
ad::Var<T> ssim(ad::Var<T> a, ad::Var<T> b, const SsimParams& params) {
  require_same_shape(a.shape(), b.shape(), "ssim");
  require_rank(a.shape(), 3, "ssim");
  const std::vector<double> taps = ops::gaussian_taps(params.window, params.sigma);
  const T c1 = static_cast<T>((params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range));
  const T c2 = static_cast<T>((params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range));

  const auto mu_a = ad::window_filter(a, taps);
  const auto mu_b = ad::window_filter(b, taps);
  const auto mu_aa = ad::mul(mu_a, mu_a);
  const auto mu_bb = ad::mul(mu_b, mu_b);
  const auto mu_ab = ad::mul(mu_a, mu_b);
  const auto var_a = ad::sub(ad::window_filter(ad::mul(a, a), taps), mu_aa);
  const auto var_b = ad::sub(ad::window_filter(ad::mul(b, b), taps), mu_bb);
  const auto cov = ad::sub(ad::window_filter(ad::mul(a, b), taps), mu_ab);

  const auto num = ad::mul(ad::affine(mu_ab, T(2), c1), ad::affine(cov, T(2), c2));
  const auto den = ad::mul(ad::affine(ad::add(mu_aa, mu_bb), T(1), c1),
                           ad::affine(ad::add(var_a, var_b), T(1), c2));
  return ad::mean(ad::div(num, den));
}

template <typename T>
ad::Var<T> pixel_loss(ad::Var<T> out, ad::Var<T> target) {
  const auto diff = ad::sub(out, target);
  return ad::sqrt(ad::mean(ad::mul(diff, diff)));
}

template <typename T>
LossVars<T> total_loss(ad::Var<T> out, ad::Var<T> target, const SsimParams& params) {
  LossVars<T> l;
  l.pixel = pixel_loss(out, target);
  l.ssim = ad::affine(ssim(out, target, params), T(-1), T(1));
  l.total = ad::add(l.pixel, l.ssim);
  return l;
}

double ssim(const Tensor<double>& a, const Tensor<double>& b, const SsimParams& params) {
  ad::Tape<double> tape;
  return ssim(tape.leaf(a), tape.leaf(b), params).value().item();
}

double pixel_loss(const Tensor<double>& out, const Tensor<double>& target) {
  ad::Tape<double> tape;
  return pixel_loss(tape.leaf(out), tape.leaf(target)).value().item();
}

LossValues total_loss(const Tensor<double>& out, const Tensor<double>& target,
                      const SsimParams& params) {
  ad::Tape<double> tape;
  const auto l = total_loss(tape.leaf(out), tape.leaf(target), params);
  return {l.total.value().item(), l.pixel.value().item(), l.ssim.value().item()};
}

#define SEDRFUSE_INSTANTIATE(T)                                                   \
  template ad::Var<T> ssim<T>(ad::Var<T>, ad::Var<T>, const SsimParams&);         \
  template ad::Var<T> pixel_loss<T>(ad::Var<T>, ad::Var<T>);                      \
  template LossVars<T> total_loss<T>(ad::Var<T>, ad::Var<T>, const SsimParams&);

SEDRFUSE_INSTANTIATE(float)
SEDRFUSE_INSTANTIATE(double)

}  // namespace sedrfuse
