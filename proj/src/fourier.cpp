#include "prdad/fourier.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>
#include <vector>

namespace prdad::fourier {

namespace {

template <typename T>
using Cx = std::complex<T>;

bool is_pow2(std::size_t n) { return n && !(n & (n - 1)); }

// Twiddles exp(-2 pi i k / n), plus bit reversal for power-of-two sizes.
template <typename T>
struct Plan {
  explicit Plan(std::size_t n_) : n(n_), twiddle(n_) {
    for (std::size_t k = 0; k < n; ++k) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k) /
                       static_cast<double>(n);
      twiddle[k] = Cx<T>(static_cast<T>(std::cos(a)), static_cast<T>(std::sin(a)));
    }
    if (is_pow2(n)) {
      std::size_t bits = 0;
      while ((std::size_t{1} << bits) < n) ++bits;
      bitrev.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
        bitrev[i] = r;
      }
    } else {
      std::size_t r = n;
      for (std::size_t p = 2; p * p <= r; ++p)
        while (r % p == 0) {
          factors.push_back(p);
          r /= p;
        }
      if (r > 1) factors.push_back(r);
    }
  }

  void run(Cx<T>* a, bool inverse, std::vector<Cx<T>>& scratch) const {
    if (n == 1) return;
    if (!bitrev.empty()) {
      for (std::size_t i = 0; i < n; ++i)
        if (i < bitrev[i]) std::swap(a[i], a[bitrev[i]]);
      for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2, step = n / len;
        for (std::size_t s = 0; s < n; s += len) {
          for (std::size_t k = 0; k < half; ++k) {
            Cx<T> w = twiddle[k * step];
            if (inverse) w = std::conj(w);
            const Cx<T> u = a[s + k];
            const Cx<T> v = a[s + k + half] * w;
            a[s + k] = u + v;
            a[s + k + half] = u - v;
          }
        }
      }
      return;
    }
    scratch.assign(a, a + n);
    mixed(scratch.data(), 1, a, n, 0, 1, inverse);
  }

  // Decimation in time over the prime factors of n. Sub-transforms of size
  // len read `in` with the given stride and are combined p at a time, so a
  // prime length falls back to the direct sum.
  void mixed(const Cx<T>* in, std::size_t stride, Cx<T>* out, std::size_t len,
             std::size_t level, std::size_t tstep, bool inverse) const {
    if (len == 1) {
      out[0] = in[0];
      return;
    }
    const std::size_t p = factors[level], m = len / p;
    for (std::size_t q = 0; q < p; ++q)
      mixed(in + q * stride, stride * p, out + q * m, m, level + 1, tstep * p, inverse);
    Cx<T> tmp[kMaxDirect];
    std::vector<Cx<T>> heap;
    Cx<T>* t = tmp;
    if (p > kMaxDirect) {
      heap.resize(p);
      t = heap.data();
    }
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t q = 0; q < p; ++q) t[q] = out[q * m + k];
      for (std::size_t s = 0; s < p; ++s) {
        const std::size_t f = k + s * m;
        Cx<T> acc = t[0];
        for (std::size_t q = 1; q < p; ++q) {
          const Cx<T> w = twiddle[(q * f % len) * tstep];
          acc += t[q] * (inverse ? std::conj(w) : w);
        }
        out[f] = acc;
      }
    }
  }

  static constexpr std::size_t kMaxDirect = 16;
  std::size_t n;
  std::vector<Cx<T>> twiddle;
  std::vector<std::size_t> bitrev;
  std::vector<std::size_t> factors;
};

template <typename T>
const Plan<T>& plan_for(std::size_t n) {
  thread_local std::unordered_map<std::size_t, Plan<T>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, Plan<T>(n)).first;
  return it->second;
}

// In-place 2-D transform of `planes` contiguous H x W complex planes.
template <typename T>
void fft2_planes(Cx<T>* data, std::size_t planes, std::size_t H, std::size_t W,
                 bool inverse) {
  const long np = static_cast<long>(planes);
#pragma omp parallel for schedule(static)
  for (long p = 0; p < np; ++p) {
    const Plan<T>& pw = plan_for<T>(W);
    const Plan<T>& ph = plan_for<T>(H);
    std::vector<Cx<T>> scratch, col(H);
    Cx<T>* a = data + static_cast<std::size_t>(p) * H * W;
    for (std::size_t r = 0; r < H; ++r) pw.run(a + r * W, inverse, scratch);
    for (std::size_t c = 0; c < W; ++c) {
      for (std::size_t r = 0; r < H; ++r) col[r] = a[r * W + c];
      ph.run(col.data(), inverse, scratch);
      for (std::size_t r = 0; r < H; ++r) a[r * W + c] = col[r];
    }
  }
}

template <typename T>
std::pair<std::size_t, std::size_t> plane_dims(const Shape& s, const char* op) {
  if (s.size() < 2) throw DimensionError(std::string(op) + ": rank < 2");
  return {s[s.size() - 2], s[s.size() - 1]};
}

template <typename T>
BasicSpectrum<T> transform(const BasicTensor<T>& re, const BasicTensor<T>* im,
                           bool inverse) {
  const auto [H, W] = plane_dims<T>(re.shape(), "dft2");
  const std::size_t n = re.size(), planes = n / (H * W);
  std::vector<Cx<T>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = Cx<T>(re[i], im ? (*im)[i] : T{0});
  fft2_planes(buf.data(), planes, H, W, inverse);
  BasicSpectrum<T> out{BasicTensor<T>(re.shape()), BasicTensor<T>(re.shape())};
  const T norm = inverse ? T{1} / static_cast<T>(H * W) : T{1};
  for (std::size_t i = 0; i < n; ++i) {
    out.real[i] = buf[i].real() * norm;
    out.imag[i] = buf[i].imag() * norm;
  }
  return out;
}

}  // namespace

template <typename T>
BasicSpectrum<T> dft2(const BasicTensor<T>& x) {
  return transform<T>(x, nullptr, false);
}

template <typename T>
BasicSpectrum<T> dft2(const BasicSpectrum<T>& x) {
  return transform<T>(x.real, &x.imag, false);
}

template <typename T>
BasicSpectrum<T> idft2_complex(const BasicSpectrum<T>& s) {
  if (s.real.shape() != s.imag.shape()) {
    throw DimensionError("idft2: real " + shape_str(s.real.shape()) + " vs imag " +
                         shape_str(s.imag.shape()));
  }
  return transform<T>(s.real, &s.imag, true);
}

template <typename T>
BasicTensor<T> idft2(const BasicSpectrum<T>& s) {
  return idft2_complex(s).real;
}

template <typename T>
BasicTensor<T> magnitude(const BasicSpectrum<T>& s) {
  BasicTensor<T> m(s.real.shape());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::hypot(s.real[i], s.imag[i]);
  return m;
}

template <typename T>
BasicTensor<T> phase(const BasicSpectrum<T>& s) {
  BasicTensor<T> p(s.real.shape());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::hypot(s.real[i], s.imag[i]) < kZeroModulus
               ? T{0}
               : std::atan2(s.imag[i], s.real[i]);
  }
  return p;
}

template <typename T>
BasicSpectrum<T> polar(const BasicTensor<T>& mag, const BasicTensor<T>& ph) {
  if (mag.shape() != ph.shape()) {
    throw DimensionError("polar: " + shape_str(mag.shape()) + " vs " +
                         shape_str(ph.shape()));
  }
  BasicSpectrum<T> s{BasicTensor<T>(mag.shape()), BasicTensor<T>(mag.shape())};
  for (std::size_t i = 0; i < mag.size(); ++i) {
    s.real[i] = mag[i] * std::cos(ph[i]);
    s.imag[i] = mag[i] * std::sin(ph[i]);
  }
  return s;
}

std::size_t Padding::margin(std::size_t n) const {
  if (!(fraction >= 0.0)) {
    throw ContractError("zero_pad: fraction must be >= 0, got " +
                        std::to_string(fraction));
  }
  const double per = per_side ? fraction * static_cast<double>(n)
                              : fraction * static_cast<double>(n) / 2.0;
  return static_cast<std::size_t>(std::lround(per));
}

std::size_t Padding::offset(std::size_t n) const {
  return placement == PadPlacement::Centered ? margin(n) : 0;
}

template <typename T>
BasicTensor<T> zero_pad(const BasicTensor<T>& x, const Padding& pad) {
  const auto [H, W] = plane_dims<T>(x.shape(), "zero_pad");
  if (H != W) throw DimensionError("zero_pad: square images only, got " + shape_str(x.shape()));
  const std::size_t m = pad.padded_size(H), off = pad.offset(H);
  Shape s = x.shape();
  s[s.size() - 2] = m;
  s[s.size() - 1] = m;
  BasicTensor<T> y(s);
  const std::size_t planes = x.size() / (H * W);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < H; ++i)
      std::copy_n(x.data() + (p * H + i) * W, W,
                  y.data() + p * m * m + (i + off) * m + off);
  return y;
}

template <typename T>
BasicTensor<T> crop(const BasicTensor<T>& padded, std::size_t n, const Padding& pad) {
  const auto [M, M2] = plane_dims<T>(padded.shape(), "crop");
  if (M != M2 || pad.padded_size(n) != M) {
    throw DimensionError("crop: grid " + shape_str(padded.shape()) +
                         " does not match image size " + std::to_string(n));
  }
  const std::size_t off = pad.offset(n);
  Shape s = padded.shape();
  s[s.size() - 2] = n;
  s[s.size() - 1] = n;
  BasicTensor<T> y(s);
  const std::size_t planes = padded.size() / (M * M);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(padded.data() + p * M * M + (i + off) * M + off, n,
                  y.data() + (p * n + i) * n);
  return y;
}

template <typename T>
BasicTensor<T> forward_model(const BasicTensor<T>& x, const Padding& pad) {
  return magnitude(dft2(zero_pad(x, pad)));
}

template <typename T>
BasicTensor<T> circshift(const BasicTensor<T>& x, long dy, long dx) {
  const auto [H, W] = plane_dims<T>(x.shape(), "circshift");
  const long h = static_cast<long>(H), w = static_cast<long>(W);
  BasicTensor<T> y(x.shape());
  const std::size_t planes = x.size() / (H * W);
  for (std::size_t p = 0; p < planes; ++p)
    for (long i = 0; i < h; ++i)
      for (long j = 0; j < w; ++j) {
        const long ti = ((i + dy) % h + h) % h, tj = ((j + dx) % w + w) % w;
        y[p * H * W + static_cast<std::size_t>(ti * w + tj)] =
            x[p * H * W + static_cast<std::size_t>(i * w + j)];
      }
  return y;
}

template <typename T>
ad::Var dft2(ad::Tape<T>& t, ad::Var x) {
  const auto& xv = t.value(x);
  auto s = dft2(xv);
  Shape os = xv.shape();
  os.push_back(2);
  BasicTensor<T> y(os);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    y[2 * i] = s.real[i];
    y[2 * i + 1] = s.imag[i];
  }
  return t.record(ad::Op::Dft2, {x.id}, std::move(y),
                  [](ad::Tape<T>& tp, std::size_t self) {
                    const auto id = tp.node(self).inputs[0];
                    const auto& g = tp.grad(self);
                    const Shape& xs = tp.value(id).shape();
                    // dx = Re(DFT(g_re - i g_im))
                    BasicSpectrum<T> gs{BasicTensor<T>(xs), BasicTensor<T>(xs)};
                    for (std::size_t i = 0; i < gs.real.size(); ++i) {
                      gs.real[i] = g[2 * i];
                      gs.imag[i] = -g[2 * i + 1];
                    }
                    tp.accumulate(id, dft2(gs).real);
                  });
}

template <typename T>
ad::Var magnitude(ad::Tape<T>& t, ad::Var spectrum) {
  const auto& sv = t.value(spectrum);
  if (sv.rank() < 1 || sv.dim(sv.rank() - 1) != 2) {
    throw DimensionError("magnitude: expected trailing (re,im) dim, got " +
                         shape_str(sv.shape()));
  }
  Shape os(sv.shape().begin(), sv.shape().end() - 1);
  BasicTensor<T> y(os);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::hypot(sv[2 * i], sv[2 * i + 1]);
  return t.record(ad::Op::Magnitude, {spectrum.id}, std::move(y),
                  [](ad::Tape<T>& tp, std::size_t self) {
                    const auto id = tp.node(self).inputs[0];
                    const auto& sv = tp.value(id);
                    const auto& m = tp.value(self);
                    const auto& g = tp.grad(self);
                    auto* gs = tp.grad_buffer(id);
                    for (std::size_t i = 0; i < m.size(); ++i) {
                      if (m[i] < static_cast<T>(kZeroModulus)) continue;
                      (*gs)[2 * i] += g[i] * sv[2 * i] / m[i];
                      (*gs)[2 * i + 1] += g[i] * sv[2 * i + 1] / m[i];
                    }
                  });
}

template <typename T>
ad::Var zero_pad(ad::Tape<T>& t, ad::Var x, const Padding& pad) {
  const std::size_t n = t.value(x).shape().back();
  return t.record(ad::Op::ZeroPad, {x.id}, zero_pad(t.value(x), pad),
                  [pad, n](ad::Tape<T>& tp, std::size_t self) {
                    tp.accumulate(tp.node(self).inputs[0], crop(tp.grad(self), n, pad));
                  });
}

template <typename T>
ad::Var forward_model(ad::Tape<T>& t, ad::Var x, const Padding& pad) {
  return magnitude(t, dft2(t, zero_pad(t, x, pad)));
}

namespace reference {

template <typename T>
BasicSpectrum<T> dft2(const BasicTensor<T>& x) {
  const auto [H, W] = plane_dims<T>(x.shape(), "reference::dft2");
  const std::size_t planes = x.size() / (H * W);
  BasicSpectrum<T> out{BasicTensor<T>(x.shape()), BasicTensor<T>(x.shape())};
  std::vector<std::complex<double>> rows(H * W);
  const double tau = 2.0 * std::numbers::pi;
  for (std::size_t p = 0; p < planes; ++p) {
    const T* a = x.data() + p * H * W;
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t v = 0; v < W; ++v) {
        std::complex<double> acc{};
        for (std::size_t k = 0; k < W; ++k)
          acc += static_cast<double>(a[r * W + k]) *
                 std::polar(1.0, -tau * static_cast<double>((v * k) % W) /
                                     static_cast<double>(W));
        rows[r * W + v] = acc;
      }
    for (std::size_t u = 0; u < H; ++u)
      for (std::size_t v = 0; v < W; ++v) {
        std::complex<double> acc{};
        for (std::size_t r = 0; r < H; ++r)
          acc += rows[r * W + v] * std::polar(1.0, -tau * static_cast<double>((u * r) % H) /
                                                       static_cast<double>(H));
        out.real[p * H * W + u * W + v] = static_cast<T>(acc.real());
        out.imag[p * H * W + u * W + v] = static_cast<T>(acc.imag());
      }
  }
  return out;
}

}  // namespace reference

#define PRDAD_INSTANTIATE_FOURIER(T)                                              \
  template BasicSpectrum<T> dft2<T>(const BasicTensor<T>&);                       \
  template BasicSpectrum<T> dft2<T>(const BasicSpectrum<T>&);                     \
  template BasicSpectrum<T> idft2_complex<T>(const BasicSpectrum<T>&);            \
  template BasicTensor<T> idft2<T>(const BasicSpectrum<T>&);                      \
  template BasicTensor<T> magnitude<T>(const BasicSpectrum<T>&);                  \
  template BasicTensor<T> phase<T>(const BasicSpectrum<T>&);                      \
  template BasicSpectrum<T> polar<T>(const BasicTensor<T>&, const BasicTensor<T>&); \
  template BasicTensor<T> zero_pad<T>(const BasicTensor<T>&, const Padding&);     \
  template BasicTensor<T> crop<T>(const BasicTensor<T>&, std::size_t, const Padding&); \
  template BasicTensor<T> forward_model<T>(const BasicTensor<T>&, const Padding&); \
  template BasicTensor<T> circshift<T>(const BasicTensor<T>&, long, long);        \
  template ad::Var dft2<T>(ad::Tape<T>&, ad::Var);                                \
  template ad::Var magnitude<T>(ad::Tape<T>&, ad::Var);                           \
  template ad::Var zero_pad<T>(ad::Tape<T>&, ad::Var, const Padding&);            \
  template ad::Var forward_model<T>(ad::Tape<T>&, ad::Var, const Padding&);       \
  template BasicSpectrum<T> reference::dft2<T>(const BasicTensor<T>&);

PRDAD_INSTANTIATE_FOURIER(float)
PRDAD_INSTANTIATE_FOURIER(double)

#undef PRDAD_INSTANTIATE_FOURIER

}  // namespace prdad::fourier
