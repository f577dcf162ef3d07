// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/gradcheck.hpp"

#include <random>

#include "sedrfuse/loss.hpp"
#include "sedrfuse/network.hpp"

namespace sedrfuse {

GradCheckResult network_grad_check(const GradCheckOptions& options) {
  NetworkConfig config;
  config.residual_blocks = options.residual_blocks;
  config.base_channels = options.base_channels;
  config.input_height = options.size;
  config.input_width = options.size;
  config.validate();

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> pixel(0.0, 1.0);
  Tensor<double> image(Shape{1, options.size, options.size});
  for (double& v : image.data()) v = pixel(rng);

  const NetworkWeights<double> weights = init_weights<double>(config, options.seed);
  ad::Tape<double> tape;
  const WeightVars<double> vars = bind_weights(tape, weights, true);
  const auto input = tape.leaf(image);
  const auto loss = total_loss(reconstruct(input, vars), input).total;
  const std::vector<ad::Var<double>> params = vars.all();

  GradCheckResult r;
  r.max_relative_error = ad::grad_check(tape, loss, params, options.epsilon,
                                        options.samples_per_param, options.seed + 1);
  for (const auto& p : params) {
    const std::size_t n = p.value().size();
    r.parameters_probed += options.samples_per_param == 0
                               ? n
                               : std::min(n, options.samples_per_param);
  }
  return r;
}

}  // namespace sedrfuse
