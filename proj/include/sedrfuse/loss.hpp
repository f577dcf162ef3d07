// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sedrfuse/autodiff.hpp"
#include "sedrfuse/tensor.hpp"

namespace sedrfuse {

/// Gaussian-window SSIM constants. C1 = (k1 * L)^2, C2 = (k2 * L)^2.
struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean local SSIM of two same-shape [C, H, W] tensors, recorded on the tape
/// so it can be differentiated. Local statistics use the cropped,
/// re-normalized window of ops::window_filter, so any image size works.
template <typename T>
ad::Var<T> ssim(ad::Var<T> a, ad::Var<T> b, const SsimParams& params = {});

/// Root-mean-square difference.
template <typename T>
ad::Var<T> pixel_loss(ad::Var<T> out, ad::Var<T> target);

template <typename T>
struct LossVars {
  ad::Var<T> total;
  ad::Var<T> pixel;
  ad::Var<T> ssim;  // 1 - SSIM(out, target)
};

/// total = pixel + (1 - ssim).
template <typename T>
LossVars<T> total_loss(ad::Var<T> out, ad::Var<T> target, const SsimParams& params = {});

struct LossValues {
  double total = 0;
  double pixel = 0;
  double ssim = 0;
};

// Value-level forms, evaluated in double precision.
double ssim(const Tensor<double>& a, const Tensor<double>& b, const SsimParams& params = {});
double pixel_loss(const Tensor<double>& out, const Tensor<double>& target);
LossValues total_loss(const Tensor<double>& out, const Tensor<double>& target,
                      const SsimParams& params = {});

}  // namespace sedrfuse
