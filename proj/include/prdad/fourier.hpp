#pragma once

// 2-D DFT, magnitude/phase and oversampling padding. Every function treats
// the last two dims as the image plane and maps over the leading ones.

#include <complex>

#include "prdad/autodiff.hpp"

namespace prdad::fourier {

template <typename T>
struct BasicSpectrum {
  BasicTensor<T> real;
  BasicTensor<T> imag;
};
using ComplexSpectrum = BasicSpectrum<double>;

/// Unnormalized forward DFT: F[u,v] = sum x[j,k] exp(-2 pi i (uj/H + vk/W)).
template <typename T>
BasicSpectrum<T> dft2(const BasicTensor<T>& x);
template <typename T>
BasicSpectrum<T> dft2(const BasicSpectrum<T>& x);

/// Inverse DFT with 1/(HW) normalization.
template <typename T>
BasicSpectrum<T> idft2_complex(const BasicSpectrum<T>& s);
/// Real part of idft2_complex.
template <typename T>
BasicTensor<T> idft2(const BasicSpectrum<T>& s);

/// Below this modulus a bin counts as zero: phase 0, magnitude gradient 0.
inline constexpr double kZeroModulus = 1e-12;

template <typename T>
BasicTensor<T> magnitude(const BasicSpectrum<T>& s);
/// atan2(im, re) in [-pi, pi]; 0 for (near-)zero bins.
template <typename T>
BasicTensor<T> phase(const BasicSpectrum<T>& s);
/// magnitude * exp(i phase).
template <typename T>
BasicSpectrum<T> polar(const BasicTensor<T>& magnitude, const BasicTensor<T>& phase);

enum class PadPlacement { Centered, TopLeft };

/// How an oversampling fraction turns into a grid size.
///   total:    m = n + 2 round(rho n / 2)  (grid is (1+rho) n)
///   per side: m = n + 2 round(rho n)
struct Padding {
  double fraction = 0.0;
  bool per_side = false;
  PadPlacement placement = PadPlacement::Centered;

  std::size_t margin(std::size_t n) const;
  std::size_t padded_size(std::size_t n) const { return n + 2 * margin(n); }
  /// Offset of the image inside the padded grid.
  std::size_t offset(std::size_t n) const;
};

template <typename T>
BasicTensor<T> zero_pad(const BasicTensor<T>& x, const Padding& pad);
template <typename T>
BasicTensor<T> zero_pad(const BasicTensor<T>& x, double fraction) {
  return zero_pad(x, Padding{fraction});
}
/// Inverse of zero_pad for an n x n image.
template <typename T>
BasicTensor<T> crop(const BasicTensor<T>& padded, std::size_t n, const Padding& pad);

/// |dft2(zero_pad(x))|.
template <typename T>
BasicTensor<T> forward_model(const BasicTensor<T>& x, const Padding& pad);
template <typename T>
BasicTensor<T> forward_model(const BasicTensor<T>& x, double fraction) {
  return forward_model(x, Padding{fraction});
}

/// Circular shift of the last two dims.
template <typename T>
BasicTensor<T> circshift(const BasicTensor<T>& x, long dy, long dx);

// Tape ops. Spectra on the tape carry a trailing (re, im) dim of size 2.

template <typename T>
ad::Var dft2(ad::Tape<T>& t, ad::Var x);
template <typename T>
ad::Var magnitude(ad::Tape<T>& t, ad::Var spectrum);
template <typename T>
ad::Var zero_pad(ad::Tape<T>& t, ad::Var x, const Padding& pad);
template <typename T>
ad::Var forward_model(ad::Tape<T>& t, ad::Var x, const Padding& pad);

/// Separable, twiddle-on-the-fly DFT without FFT or threading. Kept for tests
/// and benchmarks.
namespace reference {
template <typename T>
BasicSpectrum<T> dft2(const BasicTensor<T>& x);
}

}  // namespace prdad::fourier
