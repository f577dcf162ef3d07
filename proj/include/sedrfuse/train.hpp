// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sedrfuse/image.hpp"
#include "sedrfuse/loss.hpp"
#include "sedrfuse/network.hpp"

namespace sedrfuse {

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
  std::size_t batch_size = 2;
  std::size_t epochs = 50;
  double learning_rate = 1e-4;
  std::size_t residual_blocks = 1;
  std::size_t base_channels = 64;
  std::uint64_t seed = 0;
  std::size_t log_every = 1000;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct TrainStepReport {
  std::size_t iteration = 0;  // 1-based
  double total = 0;
  double pixel = 0;
  double ssim = 0;  // the SSIM loss term, 1 - SSIM
};

/// Raised when a step produces a non-finite loss. Checkpoints already handed
/// to the sink are left untouched.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainHooks {
  /// Called every log_every iterations.
  std::function<void(const TrainStepReport&)> on_report;
  /// Called at the end of each epoch, and again with best == true whenever
  /// the validation loss improves.
  std::function<void(const NetworkWeights<float>&, std::size_t epoch, bool best)> on_checkpoint;
  std::function<void(std::size_t epoch, double validation_loss)> on_validation;
};

struct TrainResult {
  NetworkWeights<float> weights;
  std::vector<TrainStepReport> history;  // one entry per iteration
  std::vector<double> validation_losses;  // one per epoch when a validation set is given
};

/// Adam (or plain SGD) over the flattened kernel/bias list in serialization order.
class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const NetworkWeights<float>& like);
  void step(NetworkWeights<float>& weights, std::span<const Tensor<float>> grads);
  std::size_t steps() const { return steps_; }

 private:
  TrainConfig config_;
  std::vector<std::vector<float>> m_, v_;
  std::size_t steps_ = 0;
};

/// Loss of reconstructing one image: forward + backward on a private tape.
struct ImageGradient {
  LossValues loss;
  std::vector<Tensor<float>> grads;  // serialization order
};
ImageGradient image_gradient(const NetworkWeights<float>& weights, const GrayImage& image);

/// Mean total loss of reconstructing each image.
double mean_reconstruction_loss(const NetworkWeights<float>& weights,
                                std::span<const GrayImage> images);

/// Trains from He-initialized weights. Each epoch reshuffles the data with
/// the seeded generator and runs ceil(N / batch) steps; a step averages the
/// per-image losses and gradients of its batch.
TrainResult train(std::span<const GrayImage> dataset, const TrainConfig& config,
                  std::span<const GrayImage> validation = {}, const TrainHooks& hooks = {});

}  // namespace sedrfuse
