// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sedrfuse/kernels.hpp"
#include "sedrfuse/tensor_ops.hpp"

namespace sedrfuse::ad {

template <typename T>
const Tensor<T>& Gradients<T>::operator[](Var<T> v) const {
  if (!has(v)) throw std::out_of_range("no gradient recorded for tape node " + std::to_string(v.id));
  return grads_[v.id];
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
std::vector<const Tensor<T>*> Tape<T>::input_values(const Node& n) const {
  std::vector<const Tensor<T>*> out;
  out.reserve(n.inputs.size());
  for (std::size_t id : n.inputs) out.push_back(&nodes_[id].value);
  return out;
}

template <typename T>
Var<T> Tape<T>::record(std::string_view op, std::vector<Var<T>> inputs, ForwardFn forward,
                       BackwardFn backward) {
  Node n;
  n.op = std::string(op);
  for (const Var<T>& v : inputs) {
    if (v.tape != this) throw std::invalid_argument(n.op + ": operand from a different tape");
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  const auto values = input_values(n);
  n.value = forward(values);
  n.forward = std::move(forward);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
void Tape<T>::set_leaf_value(Var<T> leaf, Tensor<T> value) {
  Node& n = nodes_.at(leaf.id);
  if (n.forward) throw std::invalid_argument("set_leaf_value: node is not a leaf");
  require_same_shape(n.value.shape(), value.shape(), "set_leaf_value");
  n.value = std::move(value);
}

template <typename T>
void Tape<T>::replay() {
  for (Node& n : nodes_) {
    if (!n.forward) continue;
    const auto values = input_values(n);
    n.value = n.forward(values);
  }
}

template <typename T>
Gradients<T> Tape<T>::backward(Var<T> loss) const {
  const Node& root = nodes_.at(loss.id);
  if (root.value.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     shape_to_string(root.value.shape()));
  }
  std::vector<Tensor<T>> grads(nodes_.size());
  std::vector<bool> present(nodes_.size(), false);
  if (root.requires_grad) {
    grads[loss.id] = Tensor<T>(root.value.shape(), T(1));
    present[loss.id] = true;
  }

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!present[i] || !n.forward) continue;
    std::vector<Tensor<T>*> targets(n.inputs.size(), nullptr);
    for (std::size_t j = 0; j < n.inputs.size(); ++j) {
      const std::size_t in = n.inputs[j];
      if (!nodes_[in].requires_grad) continue;
      if (!present[in]) {
        grads[in] = Tensor<T>(nodes_[in].value.shape());
        present[in] = true;
      }
      targets[j] = &grads[in];
    }
    const auto values = input_values(n);
    n.backward(values, n.value, grads[i], targets);
    // Intermediate gradients are not exposed; free them as soon as they are consumed.
    grads[i] = Tensor<T>();
    present[i] = false;
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].forward && nodes_[i].requires_grad && !present[i]) {
      grads[i] = Tensor<T>(nodes_[i].value.shape());
      present[i] = true;
    }
  }
  return Gradients<T>(std::move(grads), std::move(present));
}

namespace {

template <typename T>
void accumulate(Tensor<T>* dst, const Tensor<T>& src) {
  if (dst) kernels::add<T>(dst->data(), src.data(), dst->data());
}

template <typename T>
Tape<T>& same_tape(std::initializer_list<Var<T>> vars) {
  Tape<T>* t = vars.begin()->tape;
  for (const auto& v : vars) {
    if (v.tape != t || t == nullptr) throw std::invalid_argument("operands live on different tapes");
  }
  return *t;
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, int stride) {
  auto& tape = same_tape({input, kernel, bias});
  return tape.record(
      "conv2d", {input, kernel, bias},
      [stride](auto in) { return ops::conv2d(*in[0], *in[1], *in[2], stride); },
      [stride](auto in, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        ops::conv2d_backward(*in[0], *in[1], stride, g, grads[0], grads[1], grads[2]);
      });
}

template <typename T>
Var<T> deconv2d(Var<T> input, Var<T> kernel, Var<T> bias, int stride) {
  auto& tape = same_tape({input, kernel, bias});
  return tape.record(
      "deconv2d", {input, kernel, bias},
      [stride](auto in) { return ops::deconv2d(*in[0], *in[1], *in[2], stride); },
      [stride](auto in, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        ops::deconv2d_backward(*in[0], *in[1], stride, g, grads[0], grads[1], grads[2]);
      });
}

template <typename T>
Var<T> relu(Var<T> x) {
  return x.tape->record(
      "relu", {x}, [](auto in) { return ops::relu(*in[0]); },
      [](auto in, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        accumulate(grads[0], ops::relu_backward(*in[0], g));
      });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  auto& tape = same_tape({a, b});
  return tape.record(
      "add", {a, b}, [](auto in) { return ops::add(*in[0], *in[1]); },
      [](auto, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        accumulate(grads[0], g);
        accumulate(grads[1], g);
      });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  auto& tape = same_tape({a, b});
  return tape.record(
      "sub", {a, b}, [](auto in) { return ops::sub(*in[0], *in[1]); },
      [](auto, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        accumulate(grads[0], g);
        if (grads[1]) {
          for (std::size_t i = 0; i < g.size(); ++i) (*grads[1])[i] -= g[i];
        }
      });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  auto& tape = same_tape({a, b});
  return tape.record(
      "mul", {a, b}, [](auto in) { return ops::mul(*in[0], *in[1]); },
      [](auto in, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        if (grads[0]) accumulate(grads[0], ops::mul(g, *in[1]));
        if (grads[1]) accumulate(grads[1], ops::mul(g, *in[0]));
      });
}

template <typename T>
Var<T> div(Var<T> a, Var<T> b) {
  auto& tape = same_tape({a, b});
  return tape.record(
      "div", {a, b},
      [](auto in) {
        require_same_shape(in[0]->shape(), in[1]->shape(), "div");
        Tensor<T> out(in[0]->shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] / (*in[1])[i];
        return out;
      },
      [](auto in, const Tensor<T>& out, const Tensor<T>& g, auto grads) {
        const Tensor<T>& den = *in[1];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const T q = g[i] / den[i];
          if (grads[0]) (*grads[0])[i] += q;
          if (grads[1]) (*grads[1])[i] -= q * out[i];
        }
      });
}

template <typename T>
Var<T> maximum(Var<T> a, Var<T> b) {
  auto& tape = same_tape({a, b});
  return tape.record(
      "maximum", {a, b}, [](auto in) { return ops::maximum(*in[0], *in[1]); },
      [](auto in, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        const Tensor<T>& x = *in[0];
        const Tensor<T>& y = *in[1];
        for (std::size_t i = 0; i < g.size(); ++i) {
          Tensor<T>* dst = x[i] > y[i] ? grads[0] : grads[1];
          if (dst) (*dst)[i] += g[i];
        }
      });
}

template <typename T>
Var<T> affine(Var<T> x, T scale, T shift) {
  return x.tape->record(
      "affine", {x},
      [scale, shift](auto in) {
        Tensor<T> out(in[0]->shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] * scale + shift;
        return out;
      },
      [scale](auto, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        if (grads[0]) kernels::axpy<T>(scale, g.data(), grads[0]->data());
      });
}

template <typename T>
Var<T> sqrt(Var<T> x) {
  return x.tape->record(
      "sqrt", {x},
      [](auto in) {
        Tensor<T> out(in[0]->shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt((*in[0])[i]);
        return out;
      },
      [](auto, const Tensor<T>& out, const Tensor<T>& g, auto grads) {
        if (!grads[0]) return;
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (out[i] > T(0)) (*grads[0])[i] += g[i] / (T(2) * out[i]);
        }
      });
}

template <typename T>
Var<T> channel_softmax(Var<T> x) {
  return x.tape->record(
      "channel_softmax", {x}, [](auto in) { return ops::channel_softmax(*in[0]); },
      [](auto, const Tensor<T>& out, const Tensor<T>& g, auto grads) {
        accumulate(grads[0], ops::channel_softmax_backward(out, g));
      });
}

template <typename T>
Var<T> window_filter(Var<T> x, std::vector<double> taps) {
  return x.tape->record(
      "window_filter", {x}, [taps](auto in) { return ops::window_filter<T>(*in[0], taps); },
      [taps](auto, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        accumulate(grads[0], ops::window_filter_adjoint<T>(g, taps));
      });
}

template <typename T>
Var<T> sum(Var<T> x) {
  return x.tape->record(
      "sum", {x},
      [](auto in) {
        T s = T(0);
        for (T v : in[0]->data()) s += v;
        return Tensor<T>::scalar(s);
      },
      [](auto, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        if (!grads[0]) return;
        const T gv = g[0];
        for (T& v : grads[0]->data()) v += gv;
      });
}

template <typename T>
Var<T> mean(Var<T> x) {
  const T n = static_cast<T>(x.value().size());
  return x.tape->record(
      "mean", {x},
      [n](auto in) {
        T s = T(0);
        for (T v : in[0]->data()) s += v;
        return Tensor<T>::scalar(s / n);
      },
      [n](auto, const Tensor<T>&, const Tensor<T>& g, auto grads) {
        if (!grads[0]) return;
        const T gv = g[0] / n;
        for (T& v : grads[0]->data()) v += gv;
      });
}

double grad_check(Tape<double>& tape, Var<double> loss, std::span<const Var<double>> params,
                  double epsilon, std::size_t samples_per_param, std::uint64_t seed) {
  const Gradients<double> analytic = tape.backward(loss);
  std::mt19937_64 rng(seed);
  double worst = 0.0;

  for (const Var<double>& p : params) {
    const Tensor<double> base = p.value();
    const Tensor<double>& g = analytic[p];
    std::vector<std::size_t> picks;
    if (samples_per_param == 0 || samples_per_param >= base.size()) {
      picks.resize(base.size());
      for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, base.size() - 1);
      for (std::size_t s = 0; s < samples_per_param; ++s) picks.push_back(pick(rng));
    }

    for (std::size_t idx : picks) {
      Tensor<double> probe = base;
      probe[idx] = base[idx] + epsilon;
      tape.set_leaf_value(p, probe);
      tape.replay();
      const double up = loss.value().item();
      probe[idx] = base[idx] - epsilon;
      tape.set_leaf_value(p, probe);
      tape.replay();
      const double down = loss.value().item();
      const double fd = (up - down) / (2.0 * epsilon);
      const double denom = std::max({std::abs(g[idx]), std::abs(fd), 1e-8});
      worst = std::max(worst, std::abs(g[idx] - fd) / denom);
    }
    tape.set_leaf_value(p, base);
  }
  tape.replay();
  return worst;
}

#define SEDRFUSE_INSTANTIATE(T)                                  \
  template class Gradients<T>;                                   \
  template class Tape<T>;                                        \
  template Var<T> conv2d<T>(Var<T>, Var<T>, Var<T>, int);        \
  template Var<T> deconv2d<T>(Var<T>, Var<T>, Var<T>, int);      \
  template Var<T> relu<T>(Var<T>);                               \
  template Var<T> add<T>(Var<T>, Var<T>);                        \
  template Var<T> sub<T>(Var<T>, Var<T>);                        \
  template Var<T> mul<T>(Var<T>, Var<T>);                        \
  template Var<T> div<T>(Var<T>, Var<T>);                        \
  template Var<T> maximum<T>(Var<T>, Var<T>);                    \
  template Var<T> affine<T>(Var<T>, T, T);                       \
  template Var<T> sqrt<T>(Var<T>);                               \
  template Var<T> channel_softmax<T>(Var<T>);                    \
  template Var<T> window_filter<T>(Var<T>, std::vector<double>); \
  template Var<T> sum<T>(Var<T>);                                \
  template Var<T> mean<T>(Var<T>);

SEDRFUSE_INSTANTIATE(float)
SEDRFUSE_INSTANTIATE(double)

}  // namespace sedrfuse::ad
