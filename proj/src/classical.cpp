#include "prdad/classical.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "prdad/errors.hpp"

namespace prdad::classical {

using fourier::ComplexSpectrum;

namespace {

void check_inputs(const Tensor& omega, const Tensor& x0, int iters, const Constraints& c) {
  if (iters <= 0) throw ContractError("iteration count must be positive, got " + std::to_string(iters));
  if (omega.rank() != 2) throw DimensionError("magnitude must be [H,W], got " + shape_str(omega.shape()));
  if (x0.shape() != omega.shape()) {
    throw DimensionError("initial estimate " + shape_str(x0.shape()) +
                         " does not match measurement " + shape_str(omega.shape()));
  }
  for (auto v : omega.span()) {
    if (!(v >= 0)) throw ContractError("magnitude has a negative or NaN entry");
  }
  if (c.support && c.support->shape() != omega.shape()) {
    throw DimensionError("support " + shape_str(c.support->shape()) +
                         " does not match measurement " + shape_str(omega.shape()));
  }
}

ComplexSpectrum as_complex(const Tensor& x) { return {x, Tensor(x.shape())}; }

// Step (iii): back to image space after the substitution.
ComplexSpectrum magnitude_step(const ComplexSpectrum& x, const Tensor& omega) {
  return fourier::idft2_complex(substitute_magnitude(x, omega));
}

// Whether entry i of x~ satisfies the object constraints.
bool admissible(const ComplexSpectrum& x, std::size_t i, const Constraints& c) {
  if (c.support && (*c.support)[i] == 0) return false;
  if (c.nonneg && x.real[i] < 0) return false;
  return true;
}

}  // namespace

ComplexSpectrum substitute_magnitude(const ComplexSpectrum& x, const Tensor& omega) {
  ComplexSpectrum f = fourier::dft2(x);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double m = std::hypot(f.real[i], f.imag[i]);
    if (m < fourier::kZeroModulus) {
      f.real[i] = omega[i];
      f.imag[i] = 0;
    } else {
      f.real[i] *= omega[i] / m;
      f.imag[i] *= omega[i] / m;
    }
  }
  return f;
}

ComplexSpectrum project(const ComplexSpectrum& x, const Constraints& c) {
  ComplexSpectrum y = x;
  for (std::size_t i = 0; i < y.real.size(); ++i) {
    if (c.real) y.imag[i] = 0;
    if (c.nonneg && y.real[i] < 0) y.real[i] = 0;
    if (c.support && (*c.support)[i] == 0) {
      y.real[i] = 0;
      y.imag[i] = 0;
    }
  }
  return y;
}

double magnitude_residual(const ComplexSpectrum& x, const Tensor& omega) {
  const Tensor w = fourier::magnitude(fourier::dft2(x));
  double s = 0;
  for (std::size_t i = 0; i < w.size(); ++i) s += (w[i] - omega[i]) * (w[i] - omega[i]);
  return std::sqrt(s);
}

IterState error_reduction(const Tensor& omega, const Tensor& x0, int iters,
                          const Constraints& c) {
  check_inputs(omega, x0, iters, c);
  IterState st{as_complex(x0), 0, {}};
  st.residuals.reserve(iters);
  for (int k = 0; k < iters; ++k) {
    st.estimate = project(magnitude_step(st.estimate, omega), c);
    st.residuals.push_back(magnitude_residual(st.estimate, omega));
    ++st.iterations;
  }
  return st;
}

IterState hio(const Tensor& omega, const Tensor& x0, double beta, int iters,
              const Constraints& c) {
  if (!(beta > 0 && beta <= 1)) throw ContractError("hio: beta must lie in (0, 1]");
  check_inputs(omega, x0, iters, c);
  ComplexSpectrum x = as_complex(x0);
  IterState st{x, 0, {}};
  st.residuals.reserve(iters);
  for (int k = 0; k < iters; ++k) {
    ComplexSpectrum xt = magnitude_step(x, omega);
    if (c.real) xt.imag.fill(0);
    for (std::size_t i = 0; i < xt.real.size(); ++i) {
      if (!admissible(xt, i, c)) {
        xt.real[i] = x.real[i] - beta * xt.real[i];
        xt.imag[i] = x.imag[i] - beta * xt.imag[i];
      }
    }
    x = std::move(xt);
    st.estimate = project(x, c);
    st.residuals.push_back(magnitude_residual(st.estimate, omega));
    ++st.iterations;
  }
  return st;
}

Tensor random_phase_init(const Tensor& omega, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  Tensor phi(omega.shape());
  for (auto& v : phi.span()) v = u(rng);
  return fourier::idft2(fourier::polar(omega, phi));
}

Tensor support_mask(std::size_t n, const fourier::Padding& pad) {
  return fourier::zero_pad(Tensor::full({n, n}, 1.0), pad);
}

double phasecut_objective(const Tensor& x, const ComplexSpectrum& phi, const Tensor& omega) {
  if (phi.real.shape() != omega.shape() || phi.imag.shape() != omega.shape() ||
      x.shape() != omega.shape()) {
    throw DimensionError("phasecut_objective: shapes differ");
  }
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (std::abs(std::hypot(phi.real[i], phi.imag[i]) - 1) > 1e-9) {
      throw ContractError("phasecut_objective: phase entry " + std::to_string(i) +
                          " is not unit modulus");
    }
  }
  const ComplexSpectrum f = fourier::dft2(x);
  double s = 0;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double dr = f.real[i] - omega[i] * phi.real[i];
    const double di = f.imag[i] - omega[i] * phi.imag[i];
    s += dr * dr + di * di;
  }
  return s;
}

}  // namespace prdad::classical
