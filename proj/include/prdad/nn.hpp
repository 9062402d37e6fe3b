#pragma once

// Named parameter registry and the small layer vocabulary the networks are
// assembled from.

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "prdad/ops.hpp"

namespace prdad::nn {

enum class Activation { ReLU, PReLU };

/// Owns the parameters and batch-norm statistics of a model. Layers keep
/// raw pointers into the registry; deque storage keeps them stable, so a
/// registry may be moved but not copied.
template <typename T>
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  /// Throws ContractError when `name` is already registered.
  ad::Parameter<T>& add(const std::string& name, BasicTensor<T> value);
  ad::BatchNormState<T>& add_state(const std::string& name, std::size_t channels);

  std::vector<ad::Parameter<T>*> parameters();
  std::vector<const ad::Parameter<T>*> parameters() const;
  std::vector<std::pair<std::string, ad::BatchNormState<T>*>> states();
  std::vector<std::pair<std::string, const ad::BatchNormState<T>*>> states() const;

  ad::Parameter<T>* find(const std::string& name);
  /// Number of scalar weights.
  std::size_t count() const;
  void set_trainable(bool on);

 private:
  void check_unique(const std::string& name) const;

  std::deque<ad::Parameter<T>> params_;
  std::deque<std::pair<std::string, ad::BatchNormState<T>>> states_;
};

/// y = act(W x + b). `act` is skipped when `activation` is false.
template <typename T>
struct Dense {
  ad::Parameter<T>* weight = nullptr;
  ad::Parameter<T>* bias = nullptr;
  ad::Parameter<T>* slope = nullptr;  // PReLU coefficient, null for ReLU
  bool activation = true;

  ad::Var apply(ad::Tape<T>& t, ad::Var x) const;
};

/// conv3x3 -> [batchnorm] -> [activation].
template <typename T>
struct ConvBlock {
  ad::Parameter<T>* kernel = nullptr;
  ad::Parameter<T>* bias = nullptr;
  ad::Parameter<T>* gamma = nullptr;
  ad::Parameter<T>* beta = nullptr;
  ad::BatchNormState<T>* stats = nullptr;
  ad::Parameter<T>* slope = nullptr;
  bool batchnorm = true;
  bool activation = true;
  Activation kind = Activation::PReLU;

  ad::Var apply(ad::Tape<T>& t, ad::Var x, ad::Mode mode) const;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases, 0.25
/// for PReLU slopes, unit gamma and zero beta.
template <typename T>
Dense<T> make_dense(ParameterSet<T>& ps, const std::string& name, std::size_t in,
                    std::size_t out, bool activation, std::mt19937_64& rng);

template <typename T>
ConvBlock<T> make_conv(ParameterSet<T>& ps, const std::string& name, std::size_t in_ch,
                       std::size_t out_ch, bool batchnorm, bool activation, Activation kind,
                       std::mt19937_64& rng);

inline constexpr double kInitialSlope = 0.25;

}  // namespace prdad::nn
