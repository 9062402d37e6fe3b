#pragma once

// Orthonormal Haar analysis/synthesis, plain wavelet and full packet trees.
//
// Coefficients stay in an n x n layout. One level turns a block into the
// quadrants
//     [ LL | LH ]
//     [ HL | HH ]
// where the first letter is the filter applied down columns and the second
// the filter applied along rows. The packet tree re-splits every block at
// each level; the wavelet tree re-splits only the top-left LL block.

#include <cstdint>
#include <functional>

#include "prdad/autodiff.hpp"

namespace prdad::wavelet {

template <typename T>
struct HaarBands {
  BasicTensor<T> ll, lh, hl, hh;
};

/// One analysis level of x [..., 2m, 2m].
template <typename T>
HaarBands<T> haar_level(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> haar_level_inv(const HaarBands<T>& bands);

enum class Tree : std::uint8_t { Packet, Wavelet };

template <typename T>
struct PacketCoeffs {
  std::size_t depth = 0;
  Tree tree = Tree::Packet;
  BasicTensor<T> data;  // [..., n, n]
};

/// log2(n) for powers of two; throws DimensionError otherwise.
std::size_t full_depth(std::size_t n);

/// `depth` 0 means full decomposition (down to 1x1 blocks).
template <typename T>
PacketCoeffs<T> packet_analysis(const BasicTensor<T>& x, std::size_t depth = 0,
                                Tree tree = Tree::Packet);
template <typename T>
BasicTensor<T> packet_synthesis(const PacketCoeffs<T>& c);

/// Layout-level versions used by the tape ops and the data pipeline.
template <typename T>
BasicTensor<T> analyze(const BasicTensor<T>& x, std::size_t depth, Tree tree);
template <typename T>
BasicTensor<T> synthesize(const BasicTensor<T>& c, std::size_t depth, Tree tree);

template <typename T>
ad::Var packet_analysis(ad::Tape<T>& t, ad::Var x, std::size_t depth, Tree tree);
template <typename T>
ad::Var packet_synthesis(ad::Tape<T>& t, ad::Var c, std::size_t depth, Tree tree);

struct FrameBounds {
  double lower;
  double upper;
};

/// Range of |inverse(a)|^2 / |a|^2 over `trials` Gaussian coefficient draws.
FrameBounds frame_bounds_estimate(const std::function<Tensor(const Tensor&)>& inverse,
                                  const Shape& coeff_shape, std::size_t trials = 1000,
                                  std::uint64_t seed = 0);

/// Sum of |coefficients|.
template <typename T>
T sparsity_l1(const BasicTensor<T>& c) {
  T s{0};
  for (auto v : c.span()) s += v < T{0} ? -v : v;
  return s;
}

}  // namespace prdad::wavelet
