// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sedrfuse/tensor.hpp"

namespace sedrfuse::ad {

template <typename T>
class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; only valid while the
/// tape is alive.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
};

template <typename T>
class Gradients {
 public:
  Gradients() = default;
  Gradients(std::vector<Tensor<T>> grads, std::vector<bool> present)
      : grads_(std::move(grads)), present_(std::move(present)) {}

  /// Gradient of the loss with respect to v. Throws if v was recorded
  /// without requires_grad.
  const Tensor<T>& operator[](Var<T> v) const;
  bool has(Var<T> v) const { return v.id < present_.size() && present_[v.id]; }

 private:
  std::vector<Tensor<T>> grads_;
  std::vector<bool> present_;
};

/// Linear record of primitive applications. Nodes are appended after their
/// inputs, so index order is a topological order; backward walks it in
/// reverse, which visits every node after all of its consumers.
///
/// A tape belongs to one thread.
template <typename T>
class Tape {
 public:
  using Inputs = std::span<const Tensor<T>* const>;
  using ForwardFn = std::function<Tensor<T>(Inputs)>;
  /// Accumulates vector-Jacobian products into `grads`. A null entry means
  /// the corresponding input does not need a gradient. Entries may alias when
  /// the same value feeds an op twice.
  using BackwardFn = std::function<void(Inputs inputs, const Tensor<T>& output,
                                        const Tensor<T>& grad_output,
                                        std::span<Tensor<T>* const> grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> leaf(Tensor<T> value, bool requires_grad = false);
  Var<T> record(std::string_view op, std::vector<Var<T>> inputs, ForwardFn forward,
                BackwardFn backward);

  const Tensor<T>& value(Var<T> v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var<T> v) const { return nodes_.at(v.id).requires_grad; }
  std::string_view op_name(Var<T> v) const { return nodes_.at(v.id).op; }
  std::size_t size() const { return nodes_.size(); }

  /// Replaces a leaf's value; shape must be unchanged. Call replay() to
  /// propagate the change.
  void set_leaf_value(Var<T> leaf, Tensor<T> value);
  /// Recomputes every recorded op from the current leaf values.
  void replay();

  /// Reverse-mode sweep from a scalar (single-element) loss.
  Gradients<T> backward(Var<T> loss) const;

 private:
  struct Node {
    std::string op;
    std::vector<std::size_t> inputs;
    Tensor<T> value;
    bool requires_grad = false;
    ForwardFn forward;
    BackwardFn backward;
  };

  std::vector<const Tensor<T>*> input_values(const Node& n) const;

  std::deque<Node> nodes_;
};

// Primitives. All operands must live on the same tape.

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, int stride);
template <typename T>
Var<T> deconv2d(Var<T> input, Var<T> kernel, Var<T> bias, int stride);
template <typename T>
Var<T> relu(Var<T> x);
template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> div(Var<T> a, Var<T> b);
template <typename T>
Var<T> maximum(Var<T> a, Var<T> b);
/// x * scale + shift, element-wise.
template <typename T>
Var<T> affine(Var<T> x, T scale, T shift);
/// Element-wise square root. The derivative at 0 is taken as 0.
template <typename T>
Var<T> sqrt(Var<T> x);
template <typename T>
Var<T> channel_softmax(Var<T> x);
template <typename T>
Var<T> window_filter(Var<T> x, std::vector<double> taps);
/// Sum of all elements, as a [1] tensor.
template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);

/// Largest relative error between analytic gradients and central finite
/// differences, |g - fd| / max(|g|, |fd|, 1e-8), over sampled entries of each
/// parameter. The tape is replayed for every perturbation and restored
/// afterwards. samples_per_param == 0 checks every entry.
double grad_check(Tape<double>& tape, Var<double> loss, std::span<const Var<double>> params,
                  double epsilon, std::size_t samples_per_param, std::uint64_t seed);

}  // namespace sedrfuse::ad
