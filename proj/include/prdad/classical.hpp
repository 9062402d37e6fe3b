#pragma once

// Alternating-projection phase retrieval: error reduction and hybrid
// input-output. Both work on a single [H, W] measurement grid.

#include <cstdint>
#include <optional>
#include <vector>

#include "prdad/fourier.hpp"

namespace prdad::classical {

struct Constraints {
  bool real = true;
  bool nonneg = true;
  /// 1 inside the object support, 0 outside. Empty means no support limit.
  std::optional<Tensor> support;

  static Constraints none() { return Constraints{false, false, std::nullopt}; }
};

struct IterState {
  /// Current estimate. The imaginary part stays zero under a real constraint.
  fourier::ComplexSpectrum estimate;
  int iterations = 0;
  /// residuals[k] = ||omega(x_{k+1}) - omega||_2
  std::vector<double> residuals;

  const Tensor& image() const { return estimate.real; }
};

/// Steps (i)-(ii): Fourier transform x, keep its phase and substitute the
/// measured magnitude. Bins with no phase information take phase 0.
fourier::ComplexSpectrum substitute_magnitude(const fourier::ComplexSpectrum& x,
                                              const Tensor& omega);

/// Projection onto the object constraints.
fourier::ComplexSpectrum project(const fourier::ComplexSpectrum& x, const Constraints& c);

IterState error_reduction(const Tensor& omega, const Tensor& x0, int iters,
                          const Constraints& c = {});

/// Feedback outside the constraint set: x_{k+1} = x_k - beta x~_{k+1}.
/// The returned estimate is projected onto the constraints.
IterState hio(const Tensor& omega, const Tensor& x0, double beta, int iters,
              const Constraints& c = {});

inline constexpr double kDefaultBeta = 0.9;

/// Real part of the inverse DFT of omega with uniform random phases.
Tensor random_phase_init(const Tensor& omega, std::uint64_t seed);

/// Mask that is 1 on the unpadded image inside the padded grid.
Tensor support_mask(std::size_t n, const fourier::Padding& pad);

/// min over phi of this is the classical lifted formulation; here it is only
/// evaluated: ||F(x) - omega * phi||^2 for unit-modulus phi.
double phasecut_objective(const Tensor& x, const fourier::ComplexSpectrum& phi,
                          const Tensor& omega);

double magnitude_residual(const fourier::ComplexSpectrum& x, const Tensor& omega);

}  // namespace prdad::classical
