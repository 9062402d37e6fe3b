#include "prdad/autodiff.hpp"

#include <string>

namespace prdad::ad {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Variable: return "variable";
    case Op::Param: return "param";
    case Op::Affine: return "affine";
    case Op::Conv2d: return "conv2d";
    case Op::PReLU: return "prelu";
    case Op::BatchNorm: return "batchnorm2d";
    case Op::AvgPool2: return "avgpool2";
    case Op::Upsample2: return "upsample_bilinear2";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::Square: return "square";
    case Op::Abs: return "abs";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::SumPerSample: return "sum_per_sample";
    case Op::Minimum: return "minimum";
    case Op::Reshape: return "reshape";
    case Op::RotatePi: return "rotate_pi";
    case Op::ZeroPad: return "zero_pad";
    case Op::Dft2: return "dft2";
    case Op::Magnitude: return "magnitude";
    case Op::LinearMap: return "linear_map";
    case Op::Concat: return "concat";
  }
  return "unknown";
}

template <typename T>
Var Tape<T>::constant(TensorT value) {
  nodes_.push_back(Node{Op::Constant, {}, std::move(value), {}, nullptr, false, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::variable(TensorT value) {
  nodes_.push_back(Node{Op::Variable, {}, std::move(value), {}, nullptr, true, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::param(Parameter<T>& p) {
  nodes_.push_back(Node{Op::Param, {}, p.value, {}, &p, p.trainable, {}});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Op op, std::vector<std::size_t> inputs, TensorT value,
                    BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite output from ") +
                       std::string(op_name(op)));
  }
  bool rg = false;
  for (auto id : inputs) rg = rg || nodes_.at(id).requires_grad;
  nodes_.push_back(Node{op, std::move(inputs), std::move(value), {}, nullptr, rg,
                        rg ? std::move(fn) : BackwardFn{}});
  return Var{nodes_.size() - 1};
}

template <typename T>
BasicTensor<T>* Tape<T>::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.requires_grad) return nullptr;
  if (n.grad.shape() != n.value.shape()) n.grad = TensorT(n.value.shape());
  return &n.grad;
}

template <typename T>
void Tape<T>::accumulate(std::size_t id, const TensorT& g) {
  if (TensorT* buf = grad_buffer(id)) *buf += g;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  Node& root = nodes_.at(loss.id);
  if (root.value.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_str(root.value.shape()));
  }
  for (auto& n : nodes_) n.grad = TensorT{};
  if (root.requires_grad) {
    grad_buffer(loss.id)->fill(T{1});
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && n.grad.shape() == n.value.shape()) n.backward(*this, i);
    }
  }
  for (auto& n : nodes_) {
    if (n.param) n.param->zero_grad();
  }
  for (auto& n : nodes_) {
    if (n.param && n.param->trainable && n.grad.shape() == n.value.shape()) {
      n.param->grad += n.grad;
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace prdad::ad
