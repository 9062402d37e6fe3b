#include "prdad/ops.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "prdad/kernels.hpp"

namespace prdad::ad {

namespace {

using kernels::Trans;

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b,
                        const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename T>
void require_rank(const BasicTensor<T>& a, std::size_t r, const char* op) {
  if (a.rank() != r) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(r) + ", got " + shape_str(a.shape()));
  }
}

// Bilinear source taps for 2x upsampling with half-pixel centres.
struct Tap {
  std::size_t i0, i1;
  double w1;
};

std::vector<Tap> upsample_taps(std::size_t in) {
  std::vector<Tap> taps(2 * in);
  for (std::size_t o = 0; o < 2 * in; ++o) {
    double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    if (src < 0) src = 0;
    auto i0 = static_cast<std::size_t>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = Tap{i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

template <typename T>
Var affine(Tape<T>& t, Var x, Var W, Var b) {
  const auto& xv = t.value(x);
  const auto& Wv = t.value(W);
  const auto& bv = t.value(b);
  if (xv.rank() != 2 || Wv.rank() != 2 || xv.dim(1) != Wv.dim(1) ||
      bv.size() != Wv.dim(0)) {
    throw DimensionError("affine: x " + shape_str(xv.shape()) + " W " +
                         shape_str(Wv.shape()) + " b " + shape_str(bv.shape()));
  }
  const std::size_t B = xv.dim(0), in = xv.dim(1), out = Wv.dim(0);
  BasicTensor<T> y(Shape{B, out});
  for (std::size_t i = 0; i < B; ++i) {
    std::copy(bv.data(), bv.data() + out, y.data() + i * out);
  }
  kernels::gemm(Trans::No, Trans::Yes, B, out, in, T{1}, xv.data(), Wv.data(),
                T{1}, y.data());
  return t.record(Op::Affine, {x.id, W.id, b.id}, std::move(y),
                  [B, in, out](Tape<T>& tp, std::size_t self) {
                    const auto& g = tp.grad(self);
                    const auto& in_ids = tp.node(self).inputs;
                    const auto& xv = tp.value(in_ids[0]);
                    const auto& Wv = tp.value(in_ids[1]);
                    if (auto* gx = tp.grad_buffer(in_ids[0])) {
                      kernels::gemm(Trans::No, Trans::No, B, in, out, T{1},
                                    g.data(), Wv.data(), T{1}, gx->data());
                    }
                    if (auto* gW = tp.grad_buffer(in_ids[1])) {
                      kernels::gemm(Trans::Yes, Trans::No, out, in, B, T{1},
                                    g.data(), xv.data(), T{1}, gW->data());
                    }
                    if (auto* gb = tp.grad_buffer(in_ids[2])) {
                      for (std::size_t i = 0; i < B; ++i)
                        for (std::size_t j = 0; j < out; ++j)
                          (*gb)[j] += g[i * out + j];
                    }
                  });
}

template <typename T>
Var conv2d(Tape<T>& t, Var x, Var K, Var b) {
  const auto& xv = t.value(x);
  const auto& Kv = t.value(K);
  const auto& bv = t.value(b);
  require_rank(xv, 4, "conv2d");
  if (Kv.rank() != 4 || Kv.dim(1) != xv.dim(1) || Kv.dim(2) != 3 ||
      Kv.dim(3) != 3 || bv.size() != Kv.dim(0)) {
    throw DimensionError("conv2d: x " + shape_str(xv.shape()) + " K " +
                         shape_str(Kv.shape()) + " b " + shape_str(bv.shape()));
  }
  const kernels::Conv2dDims d{xv.dim(0), xv.dim(1), Kv.dim(0), xv.dim(2),
                              xv.dim(3)};
  BasicTensor<T> y(Shape{d.batch, d.out_ch, d.height, d.width});
  kernels::conv2d_forward(d, xv.data(), Kv.data(), bv.data(), y.data());
  return t.record(Op::Conv2d, {x.id, K.id, b.id}, std::move(y),
                  [d](Tape<T>& tp, std::size_t self) {
                    const auto& ids = tp.node(self).inputs;
                    auto* gx = tp.grad_buffer(ids[0]);
                    auto* gK = tp.grad_buffer(ids[1]);
                    auto* gb = tp.grad_buffer(ids[2]);
                    BasicTensor<T> dx;
                    if (gx) dx = BasicTensor<T>(gx->shape());
                    kernels::conv2d_backward(
                        d, tp.value(ids[0]).data(), tp.value(ids[1]).data(),
                        tp.grad(self).data(), gx ? dx.data() : nullptr,
                        gK ? gK->data() : nullptr, gb ? gb->data() : nullptr);
                    if (gx) *gx += dx;
                  });
}

template <typename T>
Var prelu(Tape<T>& t, Var x, Var a) {
  const auto& xv = t.value(x);
  const auto& av = t.value(a);
  if (av.size() != 1) {
    throw DimensionError("prelu: slope must be a single scalar, got " +
                         shape_str(av.shape()));
  }
  const T slope = av[0];
  BasicTensor<T> y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    y[i] = xv[i] > T{0} ? xv[i] : slope * xv[i];
  }
  return t.record(Op::PReLU, {x.id, a.id}, std::move(y),
                  [](Tape<T>& tp, std::size_t self) {
                    const auto& ids = tp.node(self).inputs;
                    const auto& xv = tp.value(ids[0]);
                    const T slope = tp.value(ids[1])[0];
                    const auto& g = tp.grad(self);
                    if (auto* gx = tp.grad_buffer(ids[0])) {
                      for (std::size_t i = 0; i < xv.size(); ++i)
                        (*gx)[i] += xv[i] > T{0} ? g[i] : slope * g[i];
                    }
                    if (auto* ga = tp.grad_buffer(ids[1])) {
                      T s{0};
                      for (std::size_t i = 0; i < xv.size(); ++i)
                        if (!(xv[i] > T{0})) s += xv[i] * g[i];
                      (*ga)[0] += s;
                    }
                  });
}

template <typename T>
Var relu(Tape<T>& t, Var x) {
  const auto& xv = t.value(x);
  BasicTensor<T> y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = xv[i] > T{0} ? xv[i] : T{0};
  return t.record(Op::PReLU, {x.id}, std::move(y),
                  [](Tape<T>& tp, std::size_t self) {
                    const auto& ids = tp.node(self).inputs;
                    const auto& xv = tp.value(ids[0]);
                    const auto& g = tp.grad(self);
                    if (auto* gx = tp.grad_buffer(ids[0]))
                      for (std::size_t i = 0; i < xv.size(); ++i)
                        if (xv[i] > T{0}) (*gx)[i] += g[i];
                  });
}

template <typename T>
Var batchnorm2d(Tape<T>& t, Var x, Var gamma, Var beta, BatchNormState<T>& state,
                Mode mode) {
  const auto& xv = t.value(x);
  require_rank(xv, 4, "batchnorm2d");
  const std::size_t B = xv.dim(0), C = xv.dim(1), HW = xv.dim(2) * xv.dim(3);
  const auto& gv = t.value(gamma);
  const auto& bv = t.value(beta);
  if (gv.size() != C || bv.size() != C || state.running_mean.size() != C) {
    throw DimensionError("batchnorm2d: " + std::to_string(C) +
                         " channels vs gamma " + shape_str(gv.shape()));
  }
  const std::size_t N = B * HW;
  if (mode == Mode::Train && N < 2) {
    throw DegenerateBatchError("batchnorm2d: train mode needs B*H*W >= 2, got " +
                               std::to_string(N));
  }
  // xhat is kept for the backward pass; inv_std per channel.
  auto xhat = std::make_shared<BasicTensor<T>>(xv.shape());
  auto inv_std = std::make_shared<std::vector<T>>(C);
  BasicTensor<T> y(xv.shape());
  const long Cl = static_cast<long>(C);
#pragma omp parallel for schedule(static)
  for (long cl = 0; cl < Cl; ++cl) {
    const auto c = static_cast<std::size_t>(cl);
    T mu, var;
    if (mode == Mode::Train) {
      double s = 0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* p = xv.data() + (b * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) s += p[i];
      }
      const double m = s / static_cast<double>(N);
      double ss = 0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* p = xv.data() + (b * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) ss += (p[i] - m) * (p[i] - m);
      }
      mu = static_cast<T>(m);
      var = static_cast<T>(ss / static_cast<double>(N));
      const T unbiased = static_cast<T>(ss / static_cast<double>(N - 1));
      state.running_mean[c] =
          (T{1} - state.momentum) * state.running_mean[c] + state.momentum * mu;
      state.running_var[c] = (T{1} - state.momentum) * state.running_var[c] +
                             state.momentum * unbiased;
    } else {
      mu = state.running_mean[c];
      var = state.running_var[c];
    }
    const T is = T{1} / std::sqrt(var + state.eps);
    (*inv_std)[c] = is;
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t off = (b * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) {
        const T h = (xv[off + i] - mu) * is;
        (*xhat)[off + i] = h;
        y[off + i] = gv[c] * h + bv[c];
      }
    }
  }
  const bool train = mode == Mode::Train;
  return t.record(
      Op::BatchNorm, {x.id, gamma.id, beta.id}, std::move(y),
      [xhat, inv_std, B, C, HW, N, train](Tape<T>& tp, std::size_t self) {
        const auto& ids = tp.node(self).inputs;
        const auto& g = tp.grad(self);
        const auto& gv = tp.value(ids[1]);
        auto* gx = tp.grad_buffer(ids[0]);
        auto* gg = tp.grad_buffer(ids[1]);
        auto* gb = tp.grad_buffer(ids[2]);
        const long Cl = static_cast<long>(C);
#pragma omp parallel for schedule(static)
        for (long cl = 0; cl < Cl; ++cl) {
          const auto c = static_cast<std::size_t>(cl);
          double sg = 0, sgh = 0;
          for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
              sg += g[off + i];
              sgh += g[off + i] * (*xhat)[off + i];
            }
          }
          if (gg) (*gg)[c] += static_cast<T>(sgh);
          if (gb) (*gb)[c] += static_cast<T>(sg);
          if (!gx) continue;
          const T k = gv[c] * (*inv_std)[c];
          const T mg = static_cast<T>(sg / static_cast<double>(N));
          const T mgh = static_cast<T>(sgh / static_cast<double>(N));
          for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
              (*gx)[off + i] +=
                  train ? k * (g[off + i] - mg - (*xhat)[off + i] * mgh)
                        : k * g[off + i];
            }
          }
        }
      });
}

template <typename T>
Var avgpool2(Tape<T>& t, Var x) {
  const auto& xv = t.value(x);
  if (xv.rank() < 2) throw DimensionError("avgpool2: rank < 2");
  const std::size_t H = xv.dim(xv.rank() - 2), W = xv.dim(xv.rank() - 1);
  if (H % 2 || W % 2) {
    throw DimensionError("avgpool2: odd spatial extent in " +
                         shape_str(xv.shape()));
  }
  Shape os = xv.shape();
  os[os.size() - 2] = H / 2;
  os[os.size() - 1] = W / 2;
  const std::size_t planes = xv.size() / (H * W), Ho = H / 2, Wo = W / 2;
  BasicTensor<T> y(os);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* s = xv.data() + p * H * W;
    T* d = y.data() + p * Ho * Wo;
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j)
        d[i * Wo + j] = T(0.25) * (s[2 * i * W + 2 * j] + s[2 * i * W + 2 * j + 1] +
                                   s[(2 * i + 1) * W + 2 * j] +
                                   s[(2 * i + 1) * W + 2 * j + 1]);
  }
  return t.record(Op::AvgPool2, {x.id}, std::move(y),
                  [planes, H, W, Ho, Wo](Tape<T>& tp, std::size_t self) {
                    auto* gx = tp.grad_buffer(tp.node(self).inputs[0]);
                    const auto& g = tp.grad(self);
                    for (std::size_t p = 0; p < planes; ++p) {
                      T* d = gx->data() + p * H * W;
                      const T* s = g.data() + p * Ho * Wo;
                      for (std::size_t i = 0; i < H; ++i)
                        for (std::size_t j = 0; j < W; ++j)
                          d[i * W + j] += T(0.25) * s[(i / 2) * Wo + j / 2];
                    }
                  });
}

template <typename T>
Var upsample_bilinear2(Tape<T>& t, Var x) {
  const auto& xv = t.value(x);
  if (xv.rank() < 2) throw DimensionError("upsample_bilinear2: rank < 2");
  const std::size_t H = xv.dim(xv.rank() - 2), W = xv.dim(xv.rank() - 1);
  Shape os = xv.shape();
  os[os.size() - 2] = 2 * H;
  os[os.size() - 1] = 2 * W;
  const std::size_t planes = xv.size() / (H * W), Ho = 2 * H, Wo = 2 * W;
  auto ty = upsample_taps(H);
  auto tx = upsample_taps(W);
  BasicTensor<T> y(os);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* s = xv.data() + p * H * W;
    T* d = y.data() + p * Ho * Wo;
    for (std::size_t i = 0; i < Ho; ++i) {
      const auto& a = ty[i];
      for (std::size_t j = 0; j < Wo; ++j) {
        const auto& b = tx[j];
        const T top = s[a.i0 * W + b.i0] * T(1 - b.w1) + s[a.i0 * W + b.i1] * T(b.w1);
        const T bot = s[a.i1 * W + b.i0] * T(1 - b.w1) + s[a.i1 * W + b.i1] * T(b.w1);
        d[i * Wo + j] = top * T(1 - a.w1) + bot * T(a.w1);
      }
    }
  }
  return t.record(
      Op::Upsample2, {x.id}, std::move(y),
      [planes, H, W, Ho, Wo, ty, tx](Tape<T>& tp, std::size_t self) {
        auto* gx = tp.grad_buffer(tp.node(self).inputs[0]);
        const auto& g = tp.grad(self);
        for (std::size_t p = 0; p < planes; ++p) {
          T* d = gx->data() + p * H * W;
          const T* s = g.data() + p * Ho * Wo;
          for (std::size_t i = 0; i < Ho; ++i) {
            const auto& a = ty[i];
            for (std::size_t j = 0; j < Wo; ++j) {
              const auto& b = tx[j];
              const T v = s[i * Wo + j];
              d[a.i0 * W + b.i0] += v * T((1 - a.w1) * (1 - b.w1));
              d[a.i0 * W + b.i1] += v * T((1 - a.w1) * b.w1);
              d[a.i1 * W + b.i0] += v * T(a.w1 * (1 - b.w1));
              d[a.i1 * W + b.i1] += v * T(a.w1 * b.w1);
            }
          }
        }
      });
}

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "add");
  return t.record(Op::Add, {a.id, b.id}, t.value(a) + t.value(b),
                  [](Tape<T>& tp, std::size_t self) {
                    const auto& ids = tp.node(self).inputs;
                    tp.accumulate(ids[0], tp.grad(self));
                    tp.accumulate(ids[1], tp.grad(self));
                  });
}

template <typename T>
Var sub(Tape<T>& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "sub");
  return t.record(Op::Sub, {a.id, b.id}, t.value(a) - t.value(b),
                  [](Tape<T>& tp, std::size_t self) {
                    const auto& ids = tp.node(self).inputs;
                    tp.accumulate(ids[0], tp.grad(self));
                    if (auto* gb = tp.grad_buffer(ids[1])) *gb -= tp.grad(self);
                  });
}

template <typename T>
Var mul(Tape<T>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  require_same_shape(av, bv, "mul");
  BasicTensor<T> y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  return t.record(Op::Mul, {a.id, b.id}, std::move(y),
                  [](Tape<T>& tp, std::size_t self) {
                    const auto& ids = tp.node(self).inputs;
                    const auto& g = tp.grad(self);
                    const auto& av = tp.value(ids[0]);
                    const auto& bv = tp.value(ids[1]);
                    if (auto* ga = tp.grad_buffer(ids[0]))
                      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
                    if (auto* gb = tp.grad_buffer(ids[1]))
                      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
                  });
}

template <typename T>
Var scale(Tape<T>& t, Var a, T s) {
  return t.record(Op::Scale, {a.id}, t.value(a) * s,
                  [s](Tape<T>& tp, std::size_t self) {
                    if (auto* ga = tp.grad_buffer(tp.node(self).inputs[0])) {
                      const auto& g = tp.grad(self);
                      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += s * g[i];
                    }
                  });
}

template <typename T>
Var square(Tape<T>& t, Var a) {
  const auto& av = t.value(a);
  BasicTensor<T> y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * av[i];
  return t.record(Op::Square, {a.id}, std::move(y),
                  [](Tape<T>& tp, std::size_t self) {
                    const auto id = tp.node(self).inputs[0];
                    const auto& av = tp.value(id);
                    const auto& g = tp.grad(self);
                    if (auto* ga = tp.grad_buffer(id))
                      for (std::size_t i = 0; i < g.size(); ++i)
                        (*ga)[i] += T{2} * av[i] * g[i];
                  });
}

template <typename T>
Var abs(Tape<T>& t, Var a) {
  const auto& av = t.value(a);
  BasicTensor<T> y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::abs(av[i]);
  return t.record(Op::Abs, {a.id}, std::move(y),
                  [](Tape<T>& tp, std::size_t self) {
                    const auto id = tp.node(self).inputs[0];
                    const auto& av = tp.value(id);
                    const auto& g = tp.grad(self);
                    if (auto* ga = tp.grad_buffer(id))
                      for (std::size_t i = 0; i < g.size(); ++i) {
                        const T sgn = av[i] > T{0} ? T{1} : (av[i] < T{0} ? T{-1} : T{0});
                        (*ga)[i] += sgn * g[i];
                      }
                  });
}

template <typename T>
Var sum(Tape<T>& t, Var a) {
  double s = 0;
  for (auto v : t.value(a).span()) s += v;
  return t.record(Op::Sum, {a.id}, BasicTensor<T>::scalar(static_cast<T>(s)),
                  [](Tape<T>& tp, std::size_t self) {
                    if (auto* ga = tp.grad_buffer(tp.node(self).inputs[0])) {
                      const T g = tp.grad(self)[0];
                      for (auto& v : ga->span()) v += g;
                    }
                  });
}

template <typename T>
Var mean(Tape<T>& t, Var a) {
  const std::size_t n = t.value(a).size();
  double s = 0;
  for (auto v : t.value(a).span()) s += v;
  return t.record(Op::Mean, {a.id},
                  BasicTensor<T>::scalar(static_cast<T>(s / static_cast<double>(n))),
                  [n](Tape<T>& tp, std::size_t self) {
                    if (auto* ga = tp.grad_buffer(tp.node(self).inputs[0])) {
                      const T g = tp.grad(self)[0] / static_cast<T>(n);
                      for (auto& v : ga->span()) v += g;
                    }
                  });
}

template <typename T>
Var sum_per_sample(Tape<T>& t, Var a) {
  const auto& av = t.value(a);
  const std::size_t B = av.dim(0), per = av.size() / B;
  BasicTensor<T> y(Shape{B});
  for (std::size_t b = 0; b < B; ++b) {
    double s = 0;
    for (std::size_t i = 0; i < per; ++i) s += av[b * per + i];
    y[b] = static_cast<T>(s);
  }
  return t.record(Op::SumPerSample, {a.id}, std::move(y),
                  [B, per](Tape<T>& tp, std::size_t self) {
                    if (auto* ga = tp.grad_buffer(tp.node(self).inputs[0])) {
                      const auto& g = tp.grad(self);
                      for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t i = 0; i < per; ++i) (*ga)[b * per + i] += g[b];
                    }
                  });
}

template <typename T>
Var minimum(Tape<T>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  require_same_shape(av, bv, "minimum");
  BasicTensor<T> y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = bv[i] < av[i] ? bv[i] : av[i];
  return t.record(Op::Minimum, {a.id, b.id}, std::move(y),
                  [](Tape<T>& tp, std::size_t self) {
                    const auto& ids = tp.node(self).inputs;
                    const auto& av = tp.value(ids[0]);
                    const auto& bv = tp.value(ids[1]);
                    const auto& g = tp.grad(self);
                    auto* ga = tp.grad_buffer(ids[0]);
                    auto* gb = tp.grad_buffer(ids[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      if (bv[i] < av[i]) {
                        if (gb) (*gb)[i] += g[i];
                      } else if (ga) {
                        (*ga)[i] += g[i];
                      }
                    }
                  });
}

template <typename T>
Var reshape(Tape<T>& t, Var a, Shape shape) {
  return t.record(Op::Reshape, {a.id}, t.value(a).reshaped(std::move(shape)),
                  [](Tape<T>& tp, std::size_t self) {
                    if (auto* ga = tp.grad_buffer(tp.node(self).inputs[0])) {
                      const auto& g = tp.grad(self);
                      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
                    }
                  });
}

template <typename T>
BasicTensor<T> rotate_pi(const BasicTensor<T>& x) {
  if (x.rank() < 2) throw DimensionError("rotate_pi: rank < 2");
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  const std::size_t planes = x.size() / (H * W), HW = H * W;
  BasicTensor<T> y(x.shape());
  for (std::size_t p = 0; p < planes; ++p) {
    const T* s = x.data() + p * HW;
    T* d = y.data() + p * HW;
    for (std::size_t k = 0; k < HW; ++k) d[k] = s[HW - 1 - k];
  }
  return y;
}

template <typename T>
Var rotate_pi(Tape<T>& t, Var a) {
  return t.record(Op::RotatePi, {a.id}, rotate_pi(t.value(a)),
                  [](Tape<T>& tp, std::size_t self) {
                    tp.accumulate(tp.node(self).inputs[0], rotate_pi(tp.grad(self)));
                  });
}

template <typename T>
Var concat(Tape<T>& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  Shape s = t.value(parts[0]).shape();
  std::size_t lead = 0;
  std::vector<std::size_t> ids;
  for (auto p : parts) {
    const auto& v = t.value(p);
    Shape tail(v.shape().begin() + 1, v.shape().end());
    if (tail != Shape(s.begin() + 1, s.end())) {
      throw DimensionError("concat: " + shape_str(v.shape()) + " vs " + shape_str(s));
    }
    lead += v.dim(0);
    ids.push_back(p.id);
  }
  s[0] = lead;
  BasicTensor<T> y(s);
  std::size_t off = 0;
  for (auto p : parts) {
    const auto& v = t.value(p);
    std::copy(v.data(), v.data() + v.size(), y.data() + off);
    off += v.size();
  }
  return t.record(Op::Concat, std::move(ids), std::move(y),
                  [](Tape<T>& tp, std::size_t self) {
                    const auto& g = tp.grad(self);
                    std::size_t off = 0;
                    for (auto id : tp.node(self).inputs) {
                      const std::size_t n = tp.value(id).size();
                      if (auto* gi = tp.grad_buffer(id))
                        for (std::size_t i = 0; i < n; ++i) (*gi)[i] += g[off + i];
                      off += n;
                    }
                  });
}

template <typename T>
Var linear_map(Tape<T>& t, Var x,
               std::function<BasicTensor<T>(const BasicTensor<T>&)> forward,
               std::function<BasicTensor<T>(const BasicTensor<T>&)> adjoint) {
  auto y = forward(t.value(x));
  return t.record(Op::LinearMap, {x.id}, std::move(y),
                  [adjoint = std::move(adjoint)](Tape<T>& tp, std::size_t self) {
                    tp.accumulate(tp.node(self).inputs[0], adjoint(tp.grad(self)));
                  });
}

#define PRDAD_INSTANTIATE_OPS(T)                                              \
  template Var affine<T>(Tape<T>&, Var, Var, Var);                            \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var);                            \
  template Var prelu<T>(Tape<T>&, Var, Var);                                  \
  template Var relu<T>(Tape<T>&, Var);                                        \
  template Var batchnorm2d<T>(Tape<T>&, Var, Var, Var, BatchNormState<T>&,    \
                              Mode);                                          \
  template Var avgpool2<T>(Tape<T>&, Var);                                    \
  template Var upsample_bilinear2<T>(Tape<T>&, Var);                          \
  template Var add<T>(Tape<T>&, Var, Var);                                    \
  template Var sub<T>(Tape<T>&, Var, Var);                                    \
  template Var mul<T>(Tape<T>&, Var, Var);                                    \
  template Var scale<T>(Tape<T>&, Var, T);                                    \
  template Var square<T>(Tape<T>&, Var);                                      \
  template Var abs<T>(Tape<T>&, Var);                                         \
  template Var sum<T>(Tape<T>&, Var);                                         \
  template Var mean<T>(Tape<T>&, Var);                                        \
  template Var sum_per_sample<T>(Tape<T>&, Var);                              \
  template Var minimum<T>(Tape<T>&, Var, Var);                                \
  template Var reshape<T>(Tape<T>&, Var, Shape);                              \
  template Var rotate_pi<T>(Tape<T>&, Var);                                   \
  template Var concat<T>(Tape<T>&, const std::vector<Var>&);                  \
  template Var linear_map<T>(                                                 \
      Tape<T>&, Var, std::function<BasicTensor<T>(const BasicTensor<T>&)>,    \
      std::function<BasicTensor<T>(const BasicTensor<T>&)>);                  \
  template BasicTensor<T> rotate_pi<T>(const BasicTensor<T>&);

PRDAD_INSTANTIATE_OPS(float)
PRDAD_INSTANTIATE_OPS(double)

#undef PRDAD_INSTANTIATE_OPS

}  // namespace prdad::ad
