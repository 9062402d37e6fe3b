#include "prdad/optim.hpp"

#include <cmath>

namespace prdad::optim {

void AdamConfig::validate() const {
  if (!(lr > 0)) throw ConfigError("adam: lr must be positive");
  if (!(eps > 0)) throw ConfigError("adam: eps must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ConfigError("adam: betas must lie in [0, 1)");
  if (!(decay > 0 && decay <= 1)) throw ConfigError("adam: decay must lie in (0, 1]");
}

template <typename T>
Adam<T>::Adam(std::vector<ad::Parameter<T>*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg), lr_(cfg.lr) {
  cfg_.validate();
  for (auto* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

template <typename T>
void Adam<T>::step() {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1 - std::pow(cfg_.beta1, t), c2 = 1 - std::pow(cfg_.beta2, t);
  // w -= lr * m_hat / (sqrt(v_hat) + eps), with the 1/c1 of m_hat folded
  // into the step size.
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  const T step = static_cast<T>(lr_ / c1);
  const T inv_c2 = static_cast<T>(1 / c2);
  const T eps = static_cast<T>(cfg_.eps);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto* p = params_[k];
    if (!p->trainable) continue;
    T* w = p->value.data();
    const T* g = p->grad.data();
    T* m = m_[k].data();
    T* v = v_[k].data();
    const long n = static_cast<long>(p->value.size());
#pragma omp parallel for simd schedule(static) if (n > 65536)
    for (long i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      w[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace prdad::optim
