#pragma once

// Differentiable primitives recorded on a Tape.

#include <functional>

#include "prdad/autodiff.hpp"

namespace prdad::ad {

enum class Mode { Train, Eval };

template <typename T>
struct BatchNormState {
  explicit BatchNormState(std::size_t channels = 1)
      : running_mean(Shape{channels}, T{0}), running_var(Shape{channels}, T{1}) {}

  BasicTensor<T> running_mean;
  BasicTensor<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);
};

/// y[i,j] = sum_k W[j,k] x[i,k] + b[j]; x is [B,in], W is [out,in].
template <typename T>
Var affine(Tape<T>& t, Var x, Var W, Var b);

/// 3x3, stride 1, zero pad 1. x [B,Ci,H,W], K [Co,Ci,3,3], b [Co].
template <typename T>
Var conv2d(Tape<T>& t, Var x, Var K, Var b);

/// Elementwise z for z > 0, a*z otherwise; `a` holds one scalar.
template <typename T>
Var prelu(Tape<T>& t, Var x, Var a);

template <typename T>
Var relu(Tape<T>& t, Var x);

/// Per-channel normalization of x [B,C,H,W]. Train mode uses batch
/// statistics and updates `state`; eval mode uses the running statistics.
template <typename T>
Var batchnorm2d(Tape<T>& t, Var x, Var gamma, Var beta, BatchNormState<T>& state,
                Mode mode);

/// 2x2 mean pooling over the last two dims (must be even).
template <typename T>
Var avgpool2(Tape<T>& t, Var x);

/// 2x bilinear upsampling of the last two dims, half-pixel centres.
template <typename T>
Var upsample_bilinear2(Tape<T>& t, Var x);

template <typename T>
Var add(Tape<T>& t, Var a, Var b);
template <typename T>
Var sub(Tape<T>& t, Var a, Var b);
template <typename T>
Var mul(Tape<T>& t, Var a, Var b);
template <typename T>
Var scale(Tape<T>& t, Var a, T s);
template <typename T>
Var square(Tape<T>& t, Var a);
template <typename T>
Var abs(Tape<T>& t, Var a);
/// Full reduction to shape [1].
template <typename T>
Var sum(Tape<T>& t, Var a);
template <typename T>
Var mean(Tape<T>& t, Var a);
/// Reduces all but the leading dim: [B,...] -> [B].
template <typename T>
Var sum_per_sample(Tape<T>& t, Var a);
/// Elementwise minimum; ties route the gradient to `a`.
template <typename T>
Var minimum(Tape<T>& t, Var a, Var b);
template <typename T>
Var reshape(Tape<T>& t, Var a, Shape shape);
/// Point reflection of the last two dims.
template <typename T>
Var rotate_pi(Tape<T>& t, Var a);
/// Concatenates along the leading dim.
template <typename T>
Var concat(Tape<T>& t, const std::vector<Var>& parts);

/// Arbitrary linear map with a caller-supplied adjoint.
template <typename T>
Var linear_map(Tape<T>& t, Var x,
               std::function<BasicTensor<T>(const BasicTensor<T>&)> forward,
               std::function<BasicTensor<T>(const BasicTensor<T>&)> adjoint);

/// Non-differentiable helper: point reflection of the last two dims.
template <typename T>
BasicTensor<T> rotate_pi(const BasicTensor<T>& x);

}  // namespace prdad::ad
