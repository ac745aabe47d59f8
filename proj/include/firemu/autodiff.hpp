#ifndef FIREMU_AUTODIFF_HPP
#define FIREMU_AUTODIFF_HPP

#include "firemu/param_store.hpp"
#include "firemu/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace firemu {

struct Var {
  Index id = -1;
  friend bool operator==(const Var&, const Var&) = default;
};

struct LayerVars {
  Var weight;
  Var bias;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, which is a valid
/// topological order for the backward sweep.
template <typename Scalar>
class Tape {
 public:
  using TensorT = Tensor<Scalar>;
  using Vector = typename TensorT::Vector;
  using Backward = std::function<void(Tape&, Var)>;

  struct Binding {
    Segment segment;
    LayerVars vars;
  };

  explicit Tape(bool record = true, bool track_kinks = false) : record_(record), track_kinks_(track_kinks) {}

  bool recording() const { return record_; }

  Var constant(TensorT value) { return append(std::move(value), false, {}); }
  Var variable(TensorT value) { return append(std::move(value), record_, {}); }

  /// Leaf vars for a parameter segment. Repeated calls with the same name
  /// return the same vars, so a layer applied many times shares one gradient.
  LayerVars layer(const ParamStore<Scalar>& store, std::string_view name) {
    for (const auto& b : bindings_) {
      if (b.segment.name == name) return b.vars;
    }
    const Segment& s = store.segment(name);
    LayerVars vars{variable(store.weight_tensor(s)), variable(store.bias_tensor(s))};
    bindings_.push_back({s, vars});
    return vars;
  }
  const std::vector<Binding>& bindings() const { return bindings_; }

  /// Records an op result. `backward` runs only if some input needs a gradient.
  Var push(TensorT value, std::initializer_list<Var> inputs, Backward backward) {
    bool needs = false;
    if (record_) {
      for (const Var v : inputs) needs = needs || nodes_[static_cast<std::size_t>(v.id)].requires_grad;
    }
    return append(std::move(value), needs, needs ? std::move(backward) : Backward{});
  }

  const TensorT& value(Var v) const { return node(v).value; }
  Scalar item(Var v) const {
    const auto& t = value(v);
    if (t.size() != 1) throw std::invalid_argument("item() on a non-scalar tensor of shape " + to_string(t.shape()));
    return t.values()[0];
  }
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  const TensorT& grad(Var v) {
    auto& n = node(v);
    if (n.grad.size() != n.value.size()) n.grad = TensorT(n.value.shape());
    return n.grad;
  }

  void accumulate(Var v, const TensorT& g) {
    auto& n = node(v);
    if (!n.requires_grad) return;
    if (n.grad.size() != n.value.size()) {
      n.grad = g;
    } else {
      n.grad.values() += g.values();
    }
  }

  void backward(Var root) {
    if (!record_) throw std::logic_error("backward() on a tape that is not recording");
    if (value(root).size() != 1) throw std::invalid_argument("backward() needs a scalar output");
    node(root).grad = TensorT(value(root).shape(), Scalar(1));
    for (Index i = root.id; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (n.backward && n.grad.size() == n.value.size()) n.backward(*this, Var{i});
    }
  }

  /// Gradient w.r.t. every entry of `store`; zero for segments off the path.
  Vector parameter_gradient(const ParamStore<Scalar>& store) const {
    Vector g = Vector::Zero(store.total_count());
    for (const auto& b : bindings_) {
      const Segment& s = store.segment(b.segment.name);
      const auto& gw = node(b.vars.weight).grad;
      const auto& gb = node(b.vars.bias).grad;
      if (gw.size() == s.weight_count()) g.segment(s.offset, s.weight_count()) += gw.values();
      if (gb.size() == s.bias_size) g.segment(s.offset + s.weight_count(), s.bias_size) += gb.values();
    }
    return g;
  }

  void observe_relu_input(const TensorT& pre) {
    if (!track_kinks_) return;
    for (Index i = 0; i < pre.size(); ++i) {
      const Scalar v = pre.values()[i];
      min_abs_relu_input_ = std::min(min_abs_relu_input_, std::abs(v));
      signature_ = (signature_ ^ static_cast<std::uint64_t>(v > Scalar(0))) * 0x100000001b3ULL + static_cast<std::uint64_t>(i);
    }
  }
  std::uint64_t relu_signature() const { return signature_; }
  Scalar min_abs_relu_input() const { return min_abs_relu_input_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    TensorT value;
    TensorT grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var append(TensorT value, bool requires_grad, Backward backward) {
    nodes_.push_back({std::move(value), TensorT(), requires_grad, std::move(backward)});
    return Var{static_cast<Index>(nodes_.size()) - 1};
  }
  Node& node(Var v) {
    if (v.id < 0 || v.id >= static_cast<Index>(nodes_.size())) throw std::out_of_range("invalid tape variable");
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  const Node& node(Var v) const {
    if (v.id < 0 || v.id >= static_cast<Index>(nodes_.size())) throw std::out_of_range("invalid tape variable");
    return nodes_[static_cast<std::size_t>(v.id)];
  }

  bool record_;
  bool track_kinks_;
  std::vector<Node> nodes_;
  std::vector<Binding> bindings_;
  std::uint64_t signature_ = 0xcbf29ce484222325ULL;
  Scalar min_abs_relu_input_ = std::numeric_limits<Scalar>::infinity();
};

namespace ad {

template <typename Scalar>
void require_same_shape(const Tape<Scalar>& t, Var a, Var b, const char* op) {
  if (!(t.value(a).shape() == t.value(b).shape())) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + to_string(t.value(a).shape()) + " vs " +
                                to_string(t.value(b).shape()));
  }
}

template <typename Scalar>
Var conv2d(Tape<Scalar>& t, Var x, const LayerVars& layer, const ConvSpec& spec) {
  auto y = firemu::conv2d(t.value(x), t.value(layer.weight), t.value(layer.bias), spec);
  return t.push(std::move(y), {x, layer.weight, layer.bias}, [x, layer, spec](Tape<Scalar>& tape, Var self) {
    auto g = conv2d_backward(tape.value(x), tape.value(layer.weight), tape.grad(self), spec, tape.requires_grad(x));
    tape.accumulate(x, g.input);
    tape.accumulate(layer.weight, g.weights);
    tape.accumulate(layer.bias, g.bias);
  });
}

template <typename Scalar>
Var conv2d_transpose(Tape<Scalar>& t, Var x, const LayerVars& layer, const ConvSpec& spec) {
  auto y = firemu::conv2d_transpose(t.value(x), t.value(layer.weight), t.value(layer.bias), spec);
  return t.push(std::move(y), {x, layer.weight, layer.bias}, [x, layer, spec](Tape<Scalar>& tape, Var self) {
    auto g = conv2d_transpose_backward(tape.value(x), tape.value(layer.weight), tape.grad(self), spec,
                                       tape.requires_grad(x));
    tape.accumulate(x, g.input);
    tape.accumulate(layer.weight, g.weights);
    tape.accumulate(layer.bias, g.bias);
  });
}

template <typename Scalar>
Var add(Tape<Scalar>& t, Var a, Var b) {
  require_same_shape(t, a, b, "add");
  Tensor<Scalar> y(t.value(a).shape(), t.value(a).values() + t.value(b).values());
  return t.push(std::move(y), {a, b}, [a, b](Tape<Scalar>& tape, Var self) {
    const auto g = tape.grad(self);
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

template <typename Scalar>
Var sub(Tape<Scalar>& t, Var a, Var b) {
  require_same_shape(t, a, b, "sub");
  Tensor<Scalar> y(t.value(a).shape(), t.value(a).values() - t.value(b).values());
  return t.push(std::move(y), {a, b}, [a, b](Tape<Scalar>& tape, Var self) {
    const auto g = tape.grad(self);
    tape.accumulate(a, g);
    tape.accumulate(b, Tensor<Scalar>(g.shape(), -g.values()));
  });
}

template <typename Scalar>
Var mul(Tape<Scalar>& t, Var a, Var b) {
  require_same_shape(t, a, b, "mul");
  Tensor<Scalar> y(t.value(a).shape(), t.value(a).values().cwiseProduct(t.value(b).values()));
  return t.push(std::move(y), {a, b}, [a, b](Tape<Scalar>& tape, Var self) {
    const auto& g = tape.grad(self);
    const auto& va = tape.value(a);
    const auto& vb = tape.value(b);
    if (tape.requires_grad(a)) tape.accumulate(a, Tensor<Scalar>(va.shape(), g.values().cwiseProduct(vb.values())));
    if (tape.requires_grad(b)) tape.accumulate(b, Tensor<Scalar>(vb.shape(), g.values().cwiseProduct(va.values())));
  });
}

template <typename Scalar>
Var relu(Tape<Scalar>& t, Var x) {
  const auto& v = t.value(x);
  t.observe_relu_input(v);
  Tensor<Scalar> y(v.shape(), v.values().cwiseMax(Scalar(0)));
  return t.push(std::move(y), {x}, [x](Tape<Scalar>& tape, Var self) {
    const auto& g = tape.grad(self);
    const auto& v = tape.value(x);
    tape.accumulate(x, Tensor<Scalar>(v.shape(), (v.values().array() > Scalar(0)).select(g.values(), Scalar(0))));
  });
}

/// Multiplies channel c of image n by scales(n, c). `scales` has shape (N, C, 1, 1)
/// or (1, C, 1, 1), the latter broadcast over the batch.
template <typename Scalar>
Var scale_channels(Tape<Scalar>& t, Var x, Var scales) {
  const auto& xs = t.value(x).shape();
  const auto& ss = t.value(scales).shape();
  if (ss.c != xs.c || ss.h != 1 || ss.w != 1 || (ss.n != xs.n && ss.n != 1)) {
    throw std::invalid_argument("scale_channels: scale shape " + to_string(ss) + " does not match " + to_string(xs));
  }
  Tensor<Scalar> y = t.value(x);
  const auto& s = t.value(scales);
  for (Index n = 0; n < xs.n; ++n) {
    const Index sn = ss.n == 1 ? 0 : n;
    for (Index c = 0; c < xs.c; ++c) y.image(n).row(c) *= s(sn, c, 0, 0);
  }
  return t.push(std::move(y), {x, scales}, [x, scales](Tape<Scalar>& tape, Var self) {
    const auto& g = tape.grad(self);
    const auto& xv = tape.value(x);
    const auto& sv = tape.value(scales);
    const auto& xs = xv.shape();
    const auto& ss = sv.shape();
    Tensor<Scalar> dx(xs);
    Tensor<Scalar> ds(ss);
    for (Index n = 0; n < xs.n; ++n) {
      const Index sn = ss.n == 1 ? 0 : n;
      for (Index c = 0; c < xs.c; ++c) {
        dx.image(n).row(c) = g.image(n).row(c) * sv(sn, c, 0, 0);
        ds(sn, c, 0, 0) += g.image(n).row(c).dot(xv.image(n).row(c));
      }
    }
    tape.accumulate(x, dx);
    tape.accumulate(scales, ds);
  });
}

template <typename Scalar>
Var mean(Tape<Scalar>& t, Var x) {
  const auto& v = t.value(x);
  if (v.size() == 0) throw std::invalid_argument("mean of an empty tensor");
  auto y = Tensor<Scalar>::scalar(v.values().mean());
  return t.push(std::move(y), {x}, [x](Tape<Scalar>& tape, Var self) {
    const auto& v = tape.value(x);
    const Scalar g = tape.grad(self).values()[0] / static_cast<Scalar>(v.size());
    tape.accumulate(x, Tensor<Scalar>(v.shape(), g));
  });
}

/// mean((a - b)^2) over every element.
template <typename Scalar>
Var mse(Tape<Scalar>& t, Var a, Var b) {
  require_same_shape(t, a, b, "mse");
  const auto& va = t.value(a).values();
  const auto& vb = t.value(b).values();
  if (va.size() == 0) throw std::invalid_argument("mse of empty tensors");
  auto y = Tensor<Scalar>::scalar((va - vb).squaredNorm() / static_cast<Scalar>(va.size()));
  return t.push(std::move(y), {a, b}, [a, b](Tape<Scalar>& tape, Var self) {
    const auto& ta = tape.value(a);
    const auto& tb = tape.value(b);
    const Scalar g = tape.grad(self).values()[0] * Scalar(2) / static_cast<Scalar>(ta.size());
    Tensor<Scalar> da(ta.shape(), (ta.values() - tb.values()) * g);
    if (tape.requires_grad(b)) tape.accumulate(b, Tensor<Scalar>(tb.shape(), -da.values()));
    tape.accumulate(a, da);
  });
}

template <typename Scalar>
Var add_scalar(Tape<Scalar>& t, Var x, Scalar c) {
  const auto& v = t.value(x);
  Tensor<Scalar> y(v.shape(), v.values().array() + c);
  return t.push(std::move(y), {x}, [x](Tape<Scalar>& tape, Var self) { tape.accumulate(x, tape.grad(self)); });
}

template <typename Scalar>
Var scale(Tape<Scalar>& t, Var x, Scalar c) {
  const auto& v = t.value(x);
  Tensor<Scalar> y(v.shape(), v.values() * c);
  return t.push(std::move(y), {x}, [x, c](Tape<Scalar>& tape, Var self) {
    const auto& g = tape.grad(self);
    tape.accumulate(x, Tensor<Scalar>(g.shape(), g.values() * c));
  });
}

template <typename Scalar>
Var log10(Tape<Scalar>& t, Var x) {
  const auto& v = t.value(x);
  Tensor<Scalar> y(v.shape(), v.values().array().log10().matrix());
  return t.push(std::move(y), {x}, [x](Tape<Scalar>& tape, Var self) {
    const auto& g = tape.grad(self);
    const auto& v = tape.value(x);
    const Scalar inv_ln10 = Scalar(1) / std::numbers::ln10_v<Scalar>;
    tape.accumulate(x, Tensor<Scalar>(v.shape(), (g.values().array() / v.values().array() * inv_ln10).matrix()));
  });
}

}  // namespace ad

/// Runs `computation(tape, params)` and differentiates its scalar result.
template <typename Scalar, typename Computation>
std::pair<Scalar, typename ParamStore<Scalar>::Vector> value_and_grad(Computation&& computation,
                                                                       const ParamStore<Scalar>& params) {
  Tape<Scalar> tape;
  const Var out = computation(tape, params);
  tape.backward(out);
  return {tape.item(out), tape.parameter_gradient(params)};
}

}  // namespace firemu

#endif  // FIREMU_AUTODIFF_HPP
