// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "sedrfuse/kernels.hpp"

namespace sedrfuse {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
  if (log_every < 1) throw std::invalid_argument("log_every must be at least 1");
}

Optimizer::Optimizer(const TrainConfig& config, const NetworkWeights<float>& like)
    : config_(config) {
  if (config_.optimizer == OptimizerKind::adam) {
    for (const auto* l : like.layers()) {
      for (const Tensor<float>* t : {&l->kernel, &l->bias}) {
        m_.emplace_back(t->size(), 0.0f);
        v_.emplace_back(t->size(), 0.0f);
      }
    }
  }
}

void Optimizer::step(NetworkWeights<float>& weights, std::span<const Tensor<float>> grads) {
  ++steps_;
  std::vector<Tensor<float>*> params;
  for (auto* l : weights.layers()) {
    params.push_back(&l->kernel);
    params.push_back(&l->bias);
  }
  if (params.size() != grads.size()) {
    throw std::invalid_argument("optimizer: expected " + std::to_string(params.size()) +
                                " gradients, got " + std::to_string(grads.size()));
  }
  const double lr = config_.learning_rate;
  if (config_.optimizer == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      kernels::axpy<float>(static_cast<float>(-lr), grads[i].data(), params[i]->data());
    }
    return;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k];
      m[k] = static_cast<float>(b1 * m[k] + (1.0 - b1) * gk);
      v[k] = static_cast<float>(b2 * v[k] + (1.0 - b2) * gk * gk);
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] = static_cast<float>(p[k] - lr * mhat / (std::sqrt(vhat) + config_.epsilon));
    }
  }
}

ImageGradient image_gradient(const NetworkWeights<float>& weights, const GrayImage& image) {
  ad::Tape<float> tape;
  const WeightVars<float> vars = bind_weights(tape, weights, true);
  const auto input = tape.leaf(image.to_tensor());
  const auto out = reconstruct(input, vars);
  const LossVars<float> loss = total_loss(out, input);
  const ad::Gradients<float> g = tape.backward(loss.total);

  ImageGradient r;
  r.loss = {loss.total.value().item(), loss.pixel.value().item(), loss.ssim.value().item()};
  for (const auto& v : vars.all()) r.grads.push_back(g[v]);
  return r;
}

double mean_reconstruction_loss(const NetworkWeights<float>& weights,
                                std::span<const GrayImage> images) {
  double acc = 0;
  for (const GrayImage& img : images) {
    const Tensor<float> out = reconstruct(img.to_tensor(), weights);
    acc += total_loss(out.cast<double>(), img.to_tensor<double>()).total;
  }
  return images.empty() ? 0.0 : acc / static_cast<double>(images.size());
}

namespace {

void check_dataset(std::span<const GrayImage> images, const char* what) {
  const GrayImage& first = images.front();
  for (const GrayImage& img : images) {
    if (img.width != first.width || img.height != first.height) {
      throw ShapeError(std::string(what) + ": images differ in size (" +
                       std::to_string(first.width) + "x" + std::to_string(first.height) + " vs " +
                       std::to_string(img.width) + "x" + std::to_string(img.height) + ")");
    }
  }
  check_image_shape(Shape{1, first.height, first.width}, what);
}

}  // namespace

TrainResult train(std::span<const GrayImage> dataset, const TrainConfig& config,
                  std::span<const GrayImage> validation, const TrainHooks& hooks) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: dataset is empty");
  check_dataset(dataset, "train");
  if (!validation.empty()) check_dataset(validation, "validation");

  NetworkConfig net;
  net.residual_blocks = config.residual_blocks;
  net.base_channels = config.base_channels;
  net.input_height = dataset.front().height;
  net.input_width = dataset.front().width;

  TrainResult result;
  result.weights = init_weights<float>(net, config.seed);
  Optimizer optimizer(config, result.weights);
  std::mt19937_64 rng(config.seed ^ 0x5eed5eedULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best_validation = std::numeric_limits<double>::infinity();
  std::size_t iteration = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const float scale = 1.0f / static_cast<float>(stop - start);
      std::vector<Tensor<float>> grads;
      LossValues batch_loss;
      for (std::size_t k = start; k < stop; ++k) {
        ImageGradient ig = image_gradient(result.weights, dataset[order[k]]);
        batch_loss.total += ig.loss.total;
        batch_loss.pixel += ig.loss.pixel;
        batch_loss.ssim += ig.loss.ssim;
        if (grads.empty()) {
          grads = std::move(ig.grads);
        } else {
          for (std::size_t i = 0; i < grads.size(); ++i) {
            kernels::add<float>(grads[i].data(), ig.grads[i].data(), grads[i].data());
          }
        }
      }
      for (auto& g : grads) {
        for (float& v : g.data()) v *= scale;
      }
      ++iteration;
      const double n = static_cast<double>(stop - start);
      const TrainStepReport report{iteration, batch_loss.total / n, batch_loss.pixel / n,
                                   batch_loss.ssim / n};
      if (!std::isfinite(report.total)) {
        throw TrainingError("non-finite loss at iteration " + std::to_string(iteration) +
                            " (epoch " + std::to_string(epoch) + "); pixel=" +
                            std::to_string(report.pixel) + " ssim=" + std::to_string(report.ssim));
      }
      result.history.push_back(report);
      if (hooks.on_report && iteration % config.log_every == 0) hooks.on_report(report);
      optimizer.step(result.weights, grads);
    }

    if (hooks.on_checkpoint) hooks.on_checkpoint(result.weights, epoch, false);
    if (!validation.empty()) {
      const double val = mean_reconstruction_loss(result.weights, validation);
      result.validation_losses.push_back(val);
      if (hooks.on_validation) hooks.on_validation(epoch, val);
      if (val < best_validation) {
        best_validation = val;
        if (hooks.on_checkpoint) hooks.on_checkpoint(result.weights, epoch, true);
      }
    }
  }
  return result;
}

}  // namespace sedrfuse
