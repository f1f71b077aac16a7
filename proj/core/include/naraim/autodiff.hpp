#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "naraim/tensor.hpp"

namespace naraim {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& dims() const { return value().dims(); }
  bool requires_grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using VarMap = std::map<std::string, Var>;

// Append-only record of a computation. Backprop walks nodes in reverse
// creation order, so gradients are bitwise reproducible.
class Tape {
 public:
  // grads[k] is null when input k does not need a gradient; otherwise the
  // callback accumulates into it.
  using Backward =
      std::function<void(const Tape& tape, const Tensor& grad_out, std::span<Tensor* const> grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  VarMap bind(const ParamTree& params, bool requires_grad = true);

  Var record(Tensor value, std::vector<Var> inputs, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Cotangent of every node with respect to the scalar `loss`; nodes off
  // the loss path hold std::nullopt.
  std::vector<std::optional<Tensor>> backward(Var loss) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    Backward backward;
    bool requires_grad = false;
  };
  std::deque<Node> nodes_;  // deque keeps value references stable
};

// Gradients of a scalar loss with respect to bound parameters. Parameters
// that do not reach the loss get zero tensors.
ParamTree gradient(Var loss, const VarMap& params);

// Central differences, one scalar parameter at a time.
ParamTree finite_difference_gradient(const std::function<double(const ParamTree&)>& loss_fn,
                                     const ParamTree& params, double h = 1e-5);

namespace ops {

inline constexpr double kLayerNormEps = 1e-6;

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var x, double factor);
Var add_scalar(Var x, double offset);
Var transpose_last2(Var x);
Var reshape(Var x, Shape dims);
Var concat_last(std::span<const Var> parts);
Var softmax_last(Var x);
Var log_softmax_last(Var x);
Var layer_norm_last(Var x, double eps = kLayerNormEps);
Var gelu(Var x);
Var sin(Var x);
Var cos(Var x);
Var exp(Var x);
Var log(Var x);
Var sqrt(Var x);
Var mean_last(Var x);  // keeps the last axis with size 1
Var sum(Var x);        // all elements, dims {1}
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
// Entries where `mask` is nonzero are replaced by `value`; mask dims equal x dims.
Var masked_fill(Var x, const Tensor& mask, double value);

}  // namespace ops

// Extra arguments for the non-arithmetic primitives in primitive_suite.
struct PrimitiveArgs {
  Shape dims;               // reshape
  std::size_t axis = 0;     // slice
  std::size_t begin = 0;    // slice
  std::size_t end = 0;      // slice
  double fill = 0.0;        // masked-fill
};

// Evaluates a primitive by name ("matmul", "softmax-last-dim", ...). For
// masked-fill, inputs are {x, mask}.
Tensor primitive_suite(std::string_view op, std::span<const Tensor> inputs, const PrimitiveArgs& args = {});

}  // namespace naraim
