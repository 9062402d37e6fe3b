#include "prdad/wavelet.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "prdad/errors.hpp"
#include "prdad/ops.hpp"

namespace prdad::wavelet {

namespace {

template <typename T>
constexpr T kHalfRoot2 = static_cast<T>(1.0 / std::numbers::sqrt2);

// Forward level on the s x s block at (r0, c0) of an n-wide plane.
template <typename T>
void split_block(T* plane, std::size_t n, std::size_t r0, std::size_t c0, std::size_t s,
                 std::vector<T>& tmp) {
  const std::size_t h = s / 2;
  tmp.resize(s * s);
  const T r = kHalfRoot2<T>;
  // rows: low half | high half
  for (std::size_t i = 0; i < s; ++i) {
    const T* row = plane + (r0 + i) * n + c0;
    for (std::size_t k = 0; k < h; ++k) {
      tmp[i * s + k] = r * (row[2 * k] + row[2 * k + 1]);
      tmp[i * s + h + k] = r * (row[2 * k] - row[2 * k + 1]);
    }
  }
  // columns: low half on top
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t k = 0; k < h; ++k) {
      const T a = tmp[(2 * k) * s + j], b = tmp[(2 * k + 1) * s + j];
      plane[(r0 + k) * n + c0 + j] = r * (a + b);
      plane[(r0 + h + k) * n + c0 + j] = r * (a - b);
    }
  }
}

template <typename T>
void merge_block(T* plane, std::size_t n, std::size_t r0, std::size_t c0, std::size_t s,
                 std::vector<T>& tmp) {
  const std::size_t h = s / 2;
  tmp.resize(s * s);
  const T r = kHalfRoot2<T>;
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t k = 0; k < h; ++k) {
      const T lo = plane[(r0 + k) * n + c0 + j], hi = plane[(r0 + h + k) * n + c0 + j];
      tmp[(2 * k) * s + j] = r * (lo + hi);
      tmp[(2 * k + 1) * s + j] = r * (lo - hi);
    }
  }
  for (std::size_t i = 0; i < s; ++i) {
    T* row = plane + (r0 + i) * n + c0;
    for (std::size_t k = 0; k < h; ++k) {
      const T lo = tmp[i * s + k], hi = tmp[i * s + h + k];
      row[2 * k] = r * (lo + hi);
      row[2 * k + 1] = r * (lo - hi);
    }
  }
}

std::size_t check_plane(const Shape& s, const char* op) {
  if (s.size() < 2 || s[s.size() - 1] != s[s.size() - 2]) {
    throw DimensionError(std::string(op) + ": expected square planes, got " + shape_str(s));
  }
  return s.back();
}

std::size_t resolve_depth(std::size_t n, std::size_t depth) {
  const std::size_t p = full_depth(n);
  if (depth == 0) return p;
  if (depth > p) {
    throw ContractError("wavelet depth " + std::to_string(depth) + " exceeds log2(" +
                        std::to_string(n) + ")");
  }
  return depth;
}

// Visits the blocks that are split at `level` (block size n >> level).
template <typename F>
void for_each_block(std::size_t n, std::size_t level, Tree tree, F&& f) {
  const std::size_t s = n >> level;
  if (tree == Tree::Wavelet) {
    f(0, 0, s);
    return;
  }
  for (std::size_t r = 0; r < n; r += s)
    for (std::size_t c = 0; c < n; c += s) f(r, c, s);
}

}  // namespace

std::size_t full_depth(std::size_t n) {
  if (n == 0 || (n & (n - 1))) {
    throw DimensionError("wavelet transform needs a power-of-two size, got " +
                         std::to_string(n));
  }
  std::size_t p = 0;
  while ((std::size_t{1} << p) < n) ++p;
  return p;
}

template <typename T>
HaarBands<T> haar_level(const BasicTensor<T>& x) {
  const std::size_t n = check_plane(x.shape(), "haar_level");
  if (n % 2) throw DimensionError("haar_level: odd extent " + shape_str(x.shape()));
  const std::size_t h = n / 2, planes = x.size() / (n * n);
  BasicTensor<T> work = x;
  std::vector<T> tmp;
  for (std::size_t p = 0; p < planes; ++p) split_block(work.data() + p * n * n, n, 0, 0, n, tmp);
  Shape bs = x.shape();
  bs[bs.size() - 2] = h;
  bs[bs.size() - 1] = h;
  HaarBands<T> out{BasicTensor<T>(bs), BasicTensor<T>(bs), BasicTensor<T>(bs),
                   BasicTensor<T>(bs)};
  for (std::size_t p = 0; p < planes; ++p) {
    const T* w = work.data() + p * n * n;
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < h; ++j) {
        const std::size_t o = p * h * h + i * h + j;
        out.ll[o] = w[i * n + j];
        out.lh[o] = w[i * n + h + j];
        out.hl[o] = w[(h + i) * n + j];
        out.hh[o] = w[(h + i) * n + h + j];
      }
  }
  return out;
}

template <typename T>
BasicTensor<T> haar_level_inv(const HaarBands<T>& b) {
  const Shape& bs = b.ll.shape();
  if (b.lh.shape() != bs || b.hl.shape() != bs || b.hh.shape() != bs) {
    throw DimensionError("haar_level_inv: band shapes differ");
  }
  const std::size_t h = check_plane(bs, "haar_level_inv"), n = 2 * h;
  const std::size_t planes = b.ll.size() / (h * h);
  Shape os = bs;
  os[os.size() - 2] = n;
  os[os.size() - 1] = n;
  BasicTensor<T> y(os);
  std::vector<T> tmp;
  for (std::size_t p = 0; p < planes; ++p) {
    T* w = y.data() + p * n * n;
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < h; ++j) {
        const std::size_t o = p * h * h + i * h + j;
        w[i * n + j] = b.ll[o];
        w[i * n + h + j] = b.lh[o];
        w[(h + i) * n + j] = b.hl[o];
        w[(h + i) * n + h + j] = b.hh[o];
      }
    merge_block(w, n, 0, 0, n, tmp);
  }
  return y;
}

template <typename T>
BasicTensor<T> analyze(const BasicTensor<T>& x, std::size_t depth, Tree tree) {
  const std::size_t n = check_plane(x.shape(), "packet_analysis");
  depth = resolve_depth(n, depth);
  BasicTensor<T> c = x;
  const std::size_t planes = x.size() / (n * n);
  std::vector<T> tmp;
  for (std::size_t p = 0; p < planes; ++p) {
    T* plane = c.data() + p * n * n;
    for (std::size_t l = 0; l < depth; ++l)
      for_each_block(n, l, tree, [&](std::size_t r, std::size_t col, std::size_t s) {
        split_block(plane, n, r, col, s, tmp);
      });
  }
  return c;
}

template <typename T>
BasicTensor<T> synthesize(const BasicTensor<T>& c, std::size_t depth, Tree tree) {
  const std::size_t n = check_plane(c.shape(), "packet_synthesis");
  depth = resolve_depth(n, depth);
  BasicTensor<T> x = c;
  const std::size_t planes = c.size() / (n * n);
  std::vector<T> tmp;
  for (std::size_t p = 0; p < planes; ++p) {
    T* plane = x.data() + p * n * n;
    for (std::size_t l = depth; l-- > 0;)
      for_each_block(n, l, tree, [&](std::size_t r, std::size_t col, std::size_t s) {
        merge_block(plane, n, r, col, s, tmp);
      });
  }
  return x;
}

template <typename T>
PacketCoeffs<T> packet_analysis(const BasicTensor<T>& x, std::size_t depth, Tree tree) {
  const std::size_t n = check_plane(x.shape(), "packet_analysis");
  const std::size_t d = resolve_depth(n, depth);
  return PacketCoeffs<T>{d, tree, analyze(x, d, tree)};
}

template <typename T>
BasicTensor<T> packet_synthesis(const PacketCoeffs<T>& c) {
  if (c.depth == 0) throw ContractError("packet_synthesis: coefficients carry depth 0");
  return synthesize(c.data, c.depth, c.tree);
}

template <typename T>
ad::Var packet_analysis(ad::Tape<T>& t, ad::Var x, std::size_t depth, Tree tree) {
  return ad::linear_map<T>(
      t, x, [=](const BasicTensor<T>& v) { return analyze(v, depth, tree); },
      [=](const BasicTensor<T>& g) { return synthesize(g, depth, tree); });
}

template <typename T>
ad::Var packet_synthesis(ad::Tape<T>& t, ad::Var c, std::size_t depth, Tree tree) {
  // Orthonormal: the adjoint of synthesis is analysis.
  return ad::linear_map<T>(
      t, c, [=](const BasicTensor<T>& v) { return synthesize(v, depth, tree); },
      [=](const BasicTensor<T>& g) { return analyze(g, depth, tree); });
}

FrameBounds frame_bounds_estimate(const std::function<Tensor(const Tensor&)>& inverse,
                                  const Shape& coeff_shape, std::size_t trials,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  FrameBounds fb{INFINITY, 0.0};
  for (std::size_t k = 0; k < trials; ++k) {
    Tensor a(coeff_shape);
    for (auto& v : a.span()) v = g(rng);
    const double ratio = sum_squares(inverse(a)) / sum_squares(a);
    fb.lower = std::min(fb.lower, ratio);
    fb.upper = std::max(fb.upper, ratio);
  }
  return fb;
}

#define PRDAD_INSTANTIATE_WAVELET(T)                                               \
  template HaarBands<T> haar_level<T>(const BasicTensor<T>&);                      \
  template BasicTensor<T> haar_level_inv<T>(const HaarBands<T>&);                  \
  template BasicTensor<T> analyze<T>(const BasicTensor<T>&, std::size_t, Tree);    \
  template BasicTensor<T> synthesize<T>(const BasicTensor<T>&, std::size_t, Tree); \
  template PacketCoeffs<T> packet_analysis<T>(const BasicTensor<T>&, std::size_t, Tree); \
  template BasicTensor<T> packet_synthesis<T>(const PacketCoeffs<T>&);             \
  template ad::Var packet_analysis<T>(ad::Tape<T>&, ad::Var, std::size_t, Tree);   \
  template ad::Var packet_synthesis<T>(ad::Tape<T>&, ad::Var, std::size_t, Tree);

PRDAD_INSTANTIATE_WAVELET(float)
PRDAD_INSTANTIATE_WAVELET(double)

#undef PRDAD_INSTANTIATE_WAVELET

}  // namespace prdad::wavelet
