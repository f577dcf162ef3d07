// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sedrfuse {

struct GradCheckOptions {
  std::size_t size = 16;  // square input, divisible by 4
  std::uint64_t seed = 0;
  std::size_t residual_blocks = 1;
  std::size_t base_channels = 64;
  /// Smaller steps drown tiny gradients in rounding noise; larger ones start
  /// crossing ReLU kinks.
  double epsilon = 1e-5;
  /// Coordinates probed per kernel/bias tensor; 0 probes all of them.
  std::size_t samples_per_param = 16;
};

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t parameters_probed = 0;
};

/// Central finite differences against reverse-mode gradients of the
/// reconstruction loss, in double precision, for a He-initialized network
/// and a uniform random input image.
GradCheckResult network_grad_check(const GradCheckOptions& options);

}  // namespace sedrfuse
