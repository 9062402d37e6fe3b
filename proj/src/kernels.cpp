#include "prdad/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace prdad::kernels {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;
template <typename T>
using CMap = Eigen::Map<const RowMat<T>>;

// Per-image patch matrix: cols[(ci*9 + ky*3 + kx), y*W + x] =
// x[ci, y+ky-1, x+kx-1], zero outside the image.
template <typename T>
void im2col(const Conv2dDims& d, const T* x, T* cols) {
  const std::size_t H = d.height, W = d.width, HW = H * W;
  for (std::size_t r = 0; r < d.in_ch * 9; ++r) {
    const std::size_t ci = r / 9;
    const long ky = static_cast<long>(r % 9) / 3 - 1;
    const long kx = static_cast<long>(r % 3) - 1;
    const T* plane = x + ci * HW;
    T* o = cols + r * HW;
    // Columns [lo, hi) read inside the row; the rest are padding.
    const std::size_t lo = kx < 0 ? 1 : 0, hi = kx > 0 ? W - 1 : W;
    for (std::size_t y = 0; y < H; ++y) {
      T* row = o + y * W;
      const long sy = static_cast<long>(y) + ky;
      if (sy < 0 || sy >= static_cast<long>(H) || lo >= hi) {
        std::fill(row, row + W, T{0});
        continue;
      }
      const T* src = plane + static_cast<std::size_t>(sy) * W + kx;
      if (lo) row[0] = T{0};
      std::copy(src + lo, src + hi, row + lo);
      if (hi < W) row[W - 1] = T{0};
    }
  }
}

template <typename T>
void col2im(const Conv2dDims& d, const T* cols, T* dx) {
  const std::size_t H = d.height, W = d.width, HW = H * W;
  std::fill(dx, dx + d.in_ch * HW, T{0});
  for (std::size_t r = 0; r < d.in_ch * 9; ++r) {
    const std::size_t ci = r / 9;
    const long ky = static_cast<long>(r % 9) / 3 - 1;
    const long kx = static_cast<long>(r % 3) - 1;
    T* plane = dx + ci * HW;
    const T* src = cols + r * HW;
    const std::size_t lo = kx < 0 ? 1 : 0, hi = kx > 0 ? W - 1 : W;
    for (std::size_t y = 0; y < H; ++y) {
      const long sy = static_cast<long>(y) + ky;
      if (sy < 0 || sy >= static_cast<long>(H)) continue;
      T* dst = plane + static_cast<std::size_t>(sy) * W + kx;
      const T* g = src + y * W;
      for (std::size_t xx = lo; xx < hi; ++xx) dst[xx] += g[xx];
    }
  }
}

int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

int team_size() {
#ifdef _OPENMP
  return omp_get_num_threads();
#else
  return 1;
#endif
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_num_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
  Eigen::setNbThreads(n > 0 ? n : 0);
#else
  (void)n;
#endif
}

template <typename T>
void gemm(Trans ta, Trans tb, std::size_t M, std::size_t N, std::size_t K,
          T alpha, const T* A, const T* B, T beta, T* C) {
  const auto m = static_cast<Eigen::Index>(M);
  const auto n = static_cast<Eigen::Index>(N);
  const auto k = static_cast<Eigen::Index>(K);
  Map<T> c(C, m, n);
  if (beta == T{0}) {
    c.setZero();
  } else if (beta != T{1}) {
    c *= beta;
  }
  if (ta == Trans::No && tb == Trans::No) {
    c.noalias() += alpha * (CMap<T>(A, m, k) * CMap<T>(B, k, n));
  } else if (ta == Trans::No && tb == Trans::Yes) {
    c.noalias() += alpha * (CMap<T>(A, m, k) * CMap<T>(B, n, k).transpose());
  } else if (ta == Trans::Yes && tb == Trans::No) {
    c.noalias() += alpha * (CMap<T>(A, k, m).transpose() * CMap<T>(B, k, n));
  } else {
    c.noalias() +=
        alpha * (CMap<T>(A, k, m).transpose() * CMap<T>(B, n, k).transpose());
  }
}

// Both passes walk the batch one image at a time so the patch matrix stays
// cache resident; images are spread over threads and each GEMM runs
// single-threaded inside its worker.
template <typename T>
void conv2d_forward(const Conv2dDims& d, const T* x, const T* w, const T* b,
                    T* y) {
  const std::size_t HW = d.height * d.width, krows = d.in_ch * 9;
  const long nb = static_cast<long>(d.batch);
#pragma omp parallel
  {
    std::vector<T> cols(krows * HW);
#pragma omp for schedule(static)
    for (long bi = 0; bi < nb; ++bi) {
      const auto i = static_cast<std::size_t>(bi);
      im2col(d, x + i * d.in_ch * HW, cols.data());
      T* out = y + i * d.out_ch * HW;
      gemm(Trans::No, Trans::No, d.out_ch, HW, krows, T{1}, w, cols.data(), T{0}, out);
      if (b)
        for (std::size_t co = 0; co < d.out_ch; ++co)
          for (std::size_t k = 0; k < HW; ++k) out[co * HW + k] += b[co];
    }
  }
}

template <typename T>
void conv2d_backward(const Conv2dDims& d, const T* x, const T* w, const T* dy,
                     T* dx, T* dw, T* db) {
  const std::size_t HW = d.height * d.width, krows = d.in_ch * 9;
  const std::size_t wsize = d.out_ch * krows;
  const long nb = static_cast<long>(d.batch);
  if (db) {
    for (std::size_t co = 0; co < d.out_ch; ++co) {
      T s{0};
      for (std::size_t i = 0; i < d.batch; ++i) {
        const T* g = dy + (i * d.out_ch + co) * HW;
        for (std::size_t k = 0; k < HW; ++k) s += g[k];
      }
      db[co] += s;
    }
  }
  if (!dw && !dx) return;
  // Per-thread weight gradients, summed in thread order afterwards so a
  // fixed thread count always gives the same result.
  std::vector<std::vector<T>> partial;
#pragma omp parallel
  {
#pragma omp single
    partial.assign(static_cast<std::size_t>(team_size()),
                   std::vector<T>(dw ? wsize : 0, T{0}));
    std::vector<T>& mine = partial[static_cast<std::size_t>(thread_id())];
    std::vector<T> cols(krows * HW);
#pragma omp for schedule(static)
    for (long bi = 0; bi < nb; ++bi) {
      const auto i = static_cast<std::size_t>(bi);
      const T* g = dy + i * d.out_ch * HW;
      if (dw) {
        im2col(d, x + i * d.in_ch * HW, cols.data());
        gemm(Trans::No, Trans::Yes, d.out_ch, krows, HW, T{1}, g, cols.data(), T{1},
             mine.data());
      }
      if (dx) {
        gemm(Trans::Yes, Trans::No, krows, HW, d.out_ch, T{1}, w, g, T{0}, cols.data());
        col2im(d, cols.data(), dx + i * d.in_ch * HW);
      }
    }
  }
  if (dw)
    for (const auto& p : partial)
      for (std::size_t k = 0; k < wsize; ++k) dw[k] += p[k];
}

namespace reference {

template <typename T>
void gemm(Trans ta, Trans tb, std::size_t M, std::size_t N, std::size_t K,
          T alpha, const T* A, const T* B, T beta, T* C) {
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      T s{0};
      for (std::size_t k = 0; k < K; ++k) {
        const T a = ta == Trans::No ? A[i * K + k] : A[k * M + i];
        const T b = tb == Trans::No ? B[k * N + j] : B[j * K + k];
        s += a * b;
      }
      C[i * N + j] = (beta == T{0} ? T{0} : beta * C[i * N + j]) + alpha * s;
    }
  }
}

template <typename T>
void conv2d_forward(const Conv2dDims& d, const T* x, const T* w, const T* b,
                    T* y) {
  const long H = static_cast<long>(d.height), W = static_cast<long>(d.width);
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    for (std::size_t co = 0; co < d.out_ch; ++co) {
      for (long i = 0; i < H; ++i) {
        for (long j = 0; j < W; ++j) {
          T s = b ? b[co] : T{0};
          for (std::size_t ci = 0; ci < d.in_ch; ++ci) {
            for (long ky = 0; ky < 3; ++ky) {
              for (long kx = 0; kx < 3; ++kx) {
                const long sy = i + ky - 1, sx = j + kx - 1;
                if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                s += w[((co * d.in_ch + ci) * 3 + ky) * 3 + kx] *
                     x[((bi * d.in_ch + ci) * H + sy) * W + sx];
              }
            }
          }
          y[((bi * d.out_ch + co) * H + i) * W + j] = s;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const Conv2dDims& d, const T* x, const T* w, const T* dy,
                     T* dx, T* dw, T* db) {
  const long H = static_cast<long>(d.height), W = static_cast<long>(d.width);
  if (dx) std::fill(dx, dx + d.batch * d.in_ch * d.height * d.width, T{0});
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    for (std::size_t co = 0; co < d.out_ch; ++co) {
      for (long i = 0; i < H; ++i) {
        for (long j = 0; j < W; ++j) {
          const T g = dy[((bi * d.out_ch + co) * H + i) * W + j];
          if (db) db[co] += g;
          for (std::size_t ci = 0; ci < d.in_ch; ++ci) {
            for (long ky = 0; ky < 3; ++ky) {
              for (long kx = 0; kx < 3; ++kx) {
                const long sy = i + ky - 1, sx = j + kx - 1;
                if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                const std::size_t wi = ((co * d.in_ch + ci) * 3 + ky) * 3 + kx;
                const std::size_t xi = ((bi * d.in_ch + ci) * H + sy) * W + sx;
                if (dw) dw[wi] += g * x[xi];
                if (dx) dx[xi] += g * w[wi];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace reference

#define PRDAD_INSTANTIATE_KERNELS(T)                                          \
  template void gemm<T>(Trans, Trans, std::size_t, std::size_t, std::size_t,  \
                        T, const T*, const T*, T, T*);                        \
  template void conv2d_forward<T>(const Conv2dDims&, const T*, const T*,      \
                                  const T*, T*);                              \
  template void conv2d_backward<T>(const Conv2dDims&, const T*, const T*,     \
                                   const T*, T*, T*, T*);                     \
  template void reference::gemm<T>(Trans, Trans, std::size_t, std::size_t,    \
                                   std::size_t, T, const T*, const T*, T, T*);\
  template void reference::conv2d_forward<T>(const Conv2dDims&, const T*,     \
                                             const T*, const T*, T*);         \
  template void reference::conv2d_backward<T>(                                \
      const Conv2dDims&, const T*, const T*, const T*, T*, T*, T*);

PRDAD_INSTANTIATE_KERNELS(float)
PRDAD_INSTANTIATE_KERNELS(double)

#undef PRDAD_INSTANTIATE_KERNELS

}  // namespace prdad::kernels
