#pragma once

// Reverse-mode differentiation over a linear tape.
//
// Every op appends one node holding its output value and a backward
// closure. Nodes only reference earlier nodes, so a single reverse sweep
// visits them in valid order. Closures read saved values from the tape by
// node id instead of copying them.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "prdad/tensor.hpp"

namespace prdad::ad {

template <typename T>
struct Parameter {
  Parameter() = default;
  Parameter(std::string name_, BasicTensor<T> value_)
      : name(std::move(name_)),
        value(std::move(value_)),
        grad(value.shape()) {}

  void zero_grad() { grad.fill(T{0}); }

  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;
  bool trainable = true;
};

enum class Op : std::uint8_t {
  Constant,
  Variable,
  Param,
  Affine,
  Conv2d,
  PReLU,
  BatchNorm,
  AvgPool2,
  Upsample2,
  Add,
  Sub,
  Mul,
  Scale,
  Square,
  Abs,
  Sum,
  Mean,
  SumPerSample,
  Minimum,
  Reshape,
  RotatePi,
  ZeroPad,
  Dft2,
  Magnitude,
  LinearMap,
  Concat,
};

std::string_view op_name(Op op);

/// Handle to a node on a tape.
struct Var {
  std::size_t id = 0;
};

template <typename T>
class Tape {
 public:
  using TensorT = BasicTensor<T>;
  /// Called with the tape and the node's own id; must add the node's
  /// gradient contribution into its inputs via accumulate().
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  struct Node {
    Op op;
    std::vector<std::size_t> inputs;
    TensorT value;
    TensorT grad;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var constant(TensorT value);
  /// Leaf that receives a gradient (used for input-gradient checks).
  Var variable(TensorT value);
  Var param(Parameter<T>& p);

  /// Appends an op node. The node requires a gradient when any input does;
  /// `fn` is dropped otherwise. Throws NumericError on non-finite output.
  Var record(Op op, std::vector<std::size_t> inputs, TensorT value,
             BackwardFn fn);

  const TensorT& value(Var v) const { return nodes_.at(v.id).value; }
  const TensorT& value(std::size_t id) const { return nodes_.at(id).value; }
  const TensorT& grad(Var v) const { return nodes_.at(v.id).grad; }
  const TensorT& grad(std::size_t id) const { return nodes_.at(id).grad; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool requires_grad(std::size_t id) const {
    return nodes_.at(id).requires_grad;
  }

  /// Gradient buffer of `id`, zero-allocated on first use. Returns null
  /// when the node does not require a gradient.
  TensorT* grad_buffer(std::size_t id);
  void accumulate(std::size_t id, const TensorT& g);

  /// Runs the reverse sweep from a scalar loss. Every parameter recorded on
  /// this tape gets its `grad` overwritten (zero when unreachable or frozen).
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  void clear() { nodes_.clear(); }

 private:
  std::deque<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace prdad::ad
