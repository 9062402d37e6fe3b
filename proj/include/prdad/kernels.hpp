#pragma once

// Compute kernels behind the differentiable ops. Each kernel has an
// OpenMP/Eigen-backed production variant in `prdad::kernels` and a plain
// loop variant in `prdad::kernels::reference`. The reference variants are
// kept for tests and benchmark comparisons; nothing in the training path
// calls them.

#include <cstddef>

namespace prdad::kernels {

enum class Trans { No, Yes };

/// C[M,N] = alpha * op(A) * op(B) + beta * C, all row-major.
/// op(A) is M x K, op(B) is K x N.
template <typename T>
void gemm(Trans ta, Trans tb, std::size_t M, std::size_t N, std::size_t K,
          T alpha, const T* A, const T* B, T beta, T* C);

/// 3x3 kernel, stride 1, zero pad 1, same-size output.
struct Conv2dDims {
  std::size_t batch;
  std::size_t in_ch;
  std::size_t out_ch;
  std::size_t height;
  std::size_t width;
};

/// y[B,Co,H,W] = conv(x[B,Ci,H,W], w[Co,Ci,3,3]) + b[Co]. `b` may be null.
template <typename T>
void conv2d_forward(const Conv2dDims& d, const T* x, const T* w, const T* b,
                    T* y);

/// Accumulates into dw / db and overwrites dx. Any output may be null.
template <typename T>
void conv2d_backward(const Conv2dDims& d, const T* x, const T* w, const T* dy,
                     T* dx, T* dw, T* db);

/// Number of OpenMP threads kernels will use (1 without OpenMP).
int max_threads();
/// Caps kernel parallelism; n <= 0 restores the runtime default.
void set_num_threads(int n);

namespace reference {

template <typename T>
void gemm(Trans ta, Trans tb, std::size_t M, std::size_t N, std::size_t K,
          T alpha, const T* A, const T* B, T beta, T* C);

template <typename T>
void conv2d_forward(const Conv2dDims& d, const T* x, const T* w, const T* b,
                    T* y);

template <typename T>
void conv2d_backward(const Conv2dDims& d, const T* x, const T* w, const T* dy,
                     T* dx, T* dw, T* db);

}  // namespace reference

}  // namespace prdad::kernels
