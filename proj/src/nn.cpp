#include "prdad/nn.hpp"

#include <cmath>

namespace prdad::nn {

template <typename T>
void ParameterSet<T>::check_unique(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) throw ContractError("duplicate parameter name " + name);
  for (const auto& s : states_)
    if (s.first == name) throw ContractError("duplicate state name " + name);
}

template <typename T>
ad::Parameter<T>& ParameterSet<T>::add(const std::string& name, BasicTensor<T> value) {
  check_unique(name);
  return params_.emplace_back(name, std::move(value));
}

template <typename T>
ad::BatchNormState<T>& ParameterSet<T>::add_state(const std::string& name,
                                                  std::size_t channels) {
  check_unique(name);
  return states_.emplace_back(name, ad::BatchNormState<T>(channels)).second;
}

template <typename T>
std::vector<ad::Parameter<T>*> ParameterSet<T>::parameters() {
  std::vector<ad::Parameter<T>*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

template <typename T>
std::vector<const ad::Parameter<T>*> ParameterSet<T>::parameters() const {
  std::vector<const ad::Parameter<T>*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, ad::BatchNormState<T>*>> ParameterSet<T>::states() {
  std::vector<std::pair<std::string, ad::BatchNormState<T>*>> out;
  for (auto& s : states_) out.emplace_back(s.first, &s.second);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const ad::BatchNormState<T>*>> ParameterSet<T>::states()
    const {
  std::vector<std::pair<std::string, const ad::BatchNormState<T>*>> out;
  for (const auto& s : states_) out.emplace_back(s.first, &s.second);
  return out;
}

template <typename T>
ad::Parameter<T>* ParameterSet<T>::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename T>
std::size_t ParameterSet<T>::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
void ParameterSet<T>::set_trainable(bool on) {
  for (auto& p : params_) p.trainable = on;
}

template <typename T>
ad::Var Dense<T>::apply(ad::Tape<T>& t, ad::Var x) const {
  ad::Var y = ad::affine(t, x, t.param(*weight), t.param(*bias));
  if (!activation) return y;
  return slope ? ad::prelu(t, y, t.param(*slope)) : ad::relu(t, y);
}

template <typename T>
ad::Var ConvBlock<T>::apply(ad::Tape<T>& t, ad::Var x, ad::Mode mode) const {
  ad::Var y = ad::conv2d(t, x, t.param(*kernel), t.param(*bias));
  if (batchnorm) y = ad::batchnorm2d(t, y, t.param(*gamma), t.param(*beta), *stats, mode);
  if (!activation) return y;
  return kind == Activation::PReLU ? ad::prelu(t, y, t.param(*slope)) : ad::relu(t, y);
}

namespace {

// Drawn in double so both precisions start from the same weights.
template <typename T>
BasicTensor<T> uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  BasicTensor<T> out(std::move(shape));
  for (auto& v : out.span()) v = static_cast<T>(u(rng));
  return out;
}

}  // namespace

template <typename T>
Dense<T> make_dense(ParameterSet<T>& ps, const std::string& name, std::size_t in,
                    std::size_t out, bool activation, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Dense<T> d;
  d.weight = &ps.add(name + ".weight", uniform<T>({out, in}, bound, rng));
  d.bias = &ps.add(name + ".bias", uniform<T>({out}, bound, rng));
  d.activation = activation;
  if (activation)
    d.slope = &ps.add(name + ".prelu", BasicTensor<T>::scalar(static_cast<T>(kInitialSlope)));
  return d;
}

template <typename T>
ConvBlock<T> make_conv(ParameterSet<T>& ps, const std::string& name, std::size_t in_ch,
                       std::size_t out_ch, bool batchnorm, bool activation, Activation kind,
                       std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * 9));
  ConvBlock<T> c;
  c.kernel = &ps.add(name + ".weight", uniform<T>({out_ch, in_ch, 3, 3}, bound, rng));
  c.bias = &ps.add(name + ".bias", uniform<T>({out_ch}, bound, rng));
  c.batchnorm = batchnorm;
  c.activation = activation;
  c.kind = kind;
  if (batchnorm) {
    c.gamma = &ps.add(name + ".bn.gamma", BasicTensor<T>::full({out_ch}, T{1}));
    c.beta = &ps.add(name + ".bn.beta", BasicTensor<T>({out_ch}));
    c.stats = &ps.add_state(name + ".bn", out_ch);
  }
  if (activation && kind == Activation::PReLU)
    c.slope = &ps.add(name + ".prelu", BasicTensor<T>::scalar(static_cast<T>(kInitialSlope)));
  return c;
}

#define PRDAD_INSTANTIATE(T)                                                              \
  template class ParameterSet<T>;                                                         \
  template struct Dense<T>;                                                               \
  template struct ConvBlock<T>;                                                           \
  template Dense<T> make_dense<T>(ParameterSet<T>&, const std::string&, std::size_t,     \
                                  std::size_t, bool, std::mt19937_64&);                   \
  template ConvBlock<T> make_conv<T>(ParameterSet<T>&, const std::string&, std::size_t,  \
                                     std::size_t, bool, bool, Activation, std::mt19937_64&);

PRDAD_INSTANTIATE(float)
PRDAD_INSTANTIATE(double)
#undef PRDAD_INSTANTIATE

}  // namespace prdad::nn
