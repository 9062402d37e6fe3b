#pragma once

// Bias-corrected Adam over a fixed list of parameters.

#include <cstdint>
#include <vector>

#include "prdad/autodiff.hpp"

namespace prdad::optim {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Multiplies lr after every epoch; 1 keeps it constant.
  double decay = 1.0;

  /// Throws ConfigError on non-positive lr/eps or betas outside [0,1).
  void validate() const;
};

template <typename T>
class Adam {
 public:
  Adam(std::vector<ad::Parameter<T>*> params, AdamConfig cfg);

  /// One update from the gradients currently stored in the parameters.
  /// Frozen parameters are skipped and keep their moments.
  void step();
  void end_epoch() { lr_ *= cfg_.decay; }

  std::uint64_t steps() const noexcept { return steps_; }
  double lr() const noexcept { return lr_; }
  const AdamConfig& config() const noexcept { return cfg_; }

  // Exposed for checkpointing.
  std::vector<BasicTensor<T>>& first_moments() { return m_; }
  std::vector<BasicTensor<T>>& second_moments() { return v_; }
  const std::vector<ad::Parameter<T>*>& params() const { return params_; }
  void restore(std::uint64_t steps, double lr) {
    steps_ = steps;
    lr_ = lr;
  }

 private:
  std::vector<ad::Parameter<T>*> params_;
  std::vector<BasicTensor<T>> m_, v_;
  AdamConfig cfg_;
  double lr_;
  std::uint64_t steps_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace prdad::optim
