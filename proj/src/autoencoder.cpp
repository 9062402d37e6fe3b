#include "prdad/autoencoder.hpp"

#include <chrono>
#include <cmath>

namespace prdad::autoencoder {

void EncoderConfig::validate() const {
  if (input_size < 4 || input_size % 4 != 0)
    throw ConfigError("encoder: input size " + std::to_string(input_size) +
                      " is not a positive multiple of 4");
  for (auto w : widths)
    if (w == 0) throw ConfigError("encoder: channel widths must be positive");
}

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  std::size_t in = 1;
  for (std::size_t b = 0; b < 3; ++b) {
    const std::string name = "encoder.block" + std::to_string(b + 1);
    const std::size_t w = cfg_.widths[b];
    const auto act = b == 2 ? nn::Activation::PReLU : cfg_.activation;
    convs_.push_back(nn::make_conv(ps_, name + ".conv1", in, w, true, true, cfg_.activation, rng));
    convs_.push_back(nn::make_conv(ps_, name + ".conv2", w, w, true, true, act, rng));
    in = w;
  }
}

template <typename T>
ad::Var Encoder<T>::forward(ad::Tape<T>& t, ad::Var x, ad::Mode mode) const {
  const auto& s = t.value(x).shape();
  if (s.size() != 4 || s[1] != 1 || s[2] != cfg_.input_size || s[3] != cfg_.input_size)
    throw DimensionError("encoder: expected [B,1," + std::to_string(cfg_.input_size) + "," +
                         std::to_string(cfg_.input_size) + "], got " + shape_str(s));
  for (std::size_t b = 0; b < 3; ++b) {
    x = convs_[2 * b].apply(t, x, mode);
    x = convs_[2 * b + 1].apply(t, x, mode);
    if (b < 2) x = ad::avgpool2(t, x);
  }
  return x;
}

template <typename T>
Decoder<T>::Decoder(const EncoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const auto& w = cfg_.widths;
  // Block k undoes encoder block 4-k: N -> w1, w1 -> w0, w0 -> w0.
  const std::size_t ins[3] = {w[2], w[1], w[0]};
  const std::size_t outs[3] = {w[1], w[0], w[0]};
  for (std::size_t b = 0; b < 3; ++b) {
    const std::string name = "decoder.block" + std::to_string(b + 1);
    convs_.push_back(
        nn::make_conv(ps_, name + ".conv1", ins[b], outs[b], true, true, cfg_.activation, rng));
    convs_.push_back(
        nn::make_conv(ps_, name + ".conv2", outs[b], outs[b], true, true, cfg_.activation, rng));
  }
  convs_.push_back(
      nn::make_conv(ps_, "decoder.out", w[0], 1, false, false, cfg_.activation, rng));
}

template <typename T>
ad::Var Decoder<T>::forward(ad::Tape<T>& t, ad::Var r, ad::Mode mode) const {
  const auto want = cfg_.representation_shape(t.value(r).shape().at(0));
  if (t.value(r).shape() != want)
    throw DimensionError("decoder: expected " + shape_str(want) + ", got " +
                         shape_str(t.value(r).shape()));
  for (std::size_t b = 0; b < 3; ++b) {
    if (b > 0) r = ad::upsample_bilinear2(t, r);
    r = convs_[2 * b].apply(t, r, mode);
    r = convs_[2 * b + 1].apply(t, r, mode);
  }
  return convs_.back().apply(t, r, mode);
}

template <typename T>
std::vector<ad::Parameter<T>*> Autoencoder<T>::parameters() {
  auto p = encoder.params().parameters();
  for (auto* q : decoder.params().parameters()) p.push_back(q);
  return p;
}

template <typename T>
std::size_t Autoencoder<T>::parameter_count() const {
  return encoder.params().count() + decoder.params().count();
}

template <typename T>
AeLoss<T> ae_loss(ad::Tape<T>& t, const Autoencoder<T>& ae, ad::Var x, double lambda_sparse,
                  ad::Mode mode) {
  AeLoss<T> l;
  l.repr = ae.encoder.forward(t, x, mode);
  l.recon = ae.decoder.forward(t, l.repr, mode);
  l.mse = ad::mean(t, ad::square(t, ad::sub(t, l.recon, x)));
  l.l1 = ad::mean(t, ad::abs(t, l.repr));
  l.total = ad::add(t, l.mse, ad::scale(t, l.l1, static_cast<T>(lambda_sparse)));
  return l;
}

template <typename T>
double active_fraction(const BasicTensor<T>& repr, double rel) {
  const std::size_t B = repr.dim(0), per = repr.size() / B;
  double acc = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const T* p = repr.data() + b * per;
    double mx = 0;
    for (std::size_t i = 0; i < per; ++i) mx = std::max(mx, std::abs(double(p[i])));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < per; ++i) hits += std::abs(double(p[i])) > rel * mx;
    acc += static_cast<double>(hits) / static_cast<double>(per);
  }
  return acc / static_cast<double>(B);
}

namespace {

template <typename T>
BasicTensor<T> to_input(const Tensor& batch01, const data::AugmentationSpec& spec) {
  Tensor z = data::normalize(batch01, spec.mu, spec.sigma);
  const std::size_t B = z.dim(0), n = z.dim(1);
  return std::move(z).reshaped({B, 1, n, n}).template cast<T>();
}

}  // namespace

template <typename T>
std::vector<EpochLog> train_autoencoder(Autoencoder<T>& ae, const Tensor& images,
                                        const data::AugmentationSpec& spec,
                                        const TrainConfig& cfg,
                                        optim::Adam<T>& adam,
                                        const std::function<void(const EpochLog&)>& on_epoch,
                                        std::size_t first_epoch) {
  if (images.rank() != 3 || images.dim(0) == 0)
    throw ContractError("train_autoencoder: empty or malformed image set");
  const std::size_t N = images.dim(0);
  if (cfg.batch_size == 0 || cfg.batch_size > N)
    throw ConfigError("train_autoencoder: batch size " + std::to_string(cfg.batch_size) +
                      " outside [1, " + std::to_string(N) + "]");
  std::vector<EpochLog> logs;
  for (std::size_t epoch = first_epoch; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    auto order = data::split_indices(N, 0.0, data::sample_seed(cfg.seed, epoch, ~0ULL)).first;
    EpochLog log;
    log.epoch = epoch;
    double mse = 0, l1 = 0, active = 0;
    std::size_t seen = 0;
    for (std::size_t s = 0; s < N; s += cfg.batch_size) {
      std::vector<std::size_t> idx(order.begin() + s,
                                   order.begin() + std::min(N, s + cfg.batch_size));
      Tensor raw = data::augmented_batch(images, idx, spec, cfg.seed, epoch, cfg.augment);
      ad::Tape<T> tape;
      try {
        auto x = tape.constant(to_input<T>(raw, spec));
        auto l = ae_loss(tape, ae, x, cfg.lambda_sparse, ad::Mode::Train);
        tape.backward(l.total);
        adam.step();
        const double b = static_cast<double>(idx.size());
        mse += tape.value(l.mse).item() * b;
        l1 += tape.value(l.l1).item() * b;
        active += active_fraction(tape.value(l.repr)) * b;
        seen += idx.size();
      } catch (const NumericError& e) {
        throw DivergenceError("autoencoder training diverged at epoch " + std::to_string(epoch) +
                              ", step " + std::to_string(adam.steps()) + ": " + e.what());
      }
    }
    adam.end_epoch();
    const double dn = static_cast<double>(seen);
    log.mse = mse / dn;
    log.l1 = l1 / dn;
    log.loss = log.mse + cfg.lambda_sparse * log.l1;
    log.active = active / dn;
    log.step = adam.steps();
    log.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    logs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return logs;
}

template <typename T>
std::vector<EpochLog> train_autoencoder(Autoencoder<T>& ae, const Tensor& images,
                                        const data::AugmentationSpec& spec,
                                        const TrainConfig& cfg,
                                        const std::function<void(const EpochLog&)>& on_epoch) {
  optim::Adam<T> adam(ae.parameters(), cfg.adam);
  return train_autoencoder(ae, images, spec, cfg, adam, on_epoch, 0);
}

template <typename T>
BasicTensor<T> encode(const Encoder<T>& enc, const Tensor& images,
                      const data::AugmentationSpec& spec, std::size_t batch) {
  const std::size_t N = images.dim(0);
  BasicTensor<T> out(enc.config().representation_shape(N));
  const std::size_t per = out.size() / N;
  for (std::size_t s = 0; s < N; s += batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = s; i < std::min(N, s + batch); ++i) idx.push_back(i);
    ad::Tape<T> t;
    auto r = enc.forward(t, t.constant(to_input<T>(data::gather(images, idx), spec)),
                         ad::Mode::Eval);
    std::copy(t.value(r).data(), t.value(r).data() + t.value(r).size(), out.data() + s * per);
  }
  return out;
}

template <typename T>
BasicTensor<T> reconstruct(const Autoencoder<T>& ae, const Tensor& images,
                           const data::AugmentationSpec& spec, std::size_t batch) {
  const std::size_t N = images.dim(0), n = images.dim(1);
  BasicTensor<T> out({N, n, n});
  for (std::size_t s = 0; s < N; s += batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = s; i < std::min(N, s + batch); ++i) idx.push_back(i);
    ad::Tape<T> t;
    auto r = ae.encoder.forward(t, t.constant(to_input<T>(data::gather(images, idx), spec)),
                                ad::Mode::Eval);
    auto y = ae.decoder.forward(t, r, ad::Mode::Eval);
    std::copy(t.value(y).data(), t.value(y).data() + t.value(y).size(), out.data() + s * n * n);
  }
  return out;
}

#define PRDAD_INSTANTIATE(T)                                                                  \
  template class Encoder<T>;                                                                  \
  template class Decoder<T>;                                                                  \
  template struct Autoencoder<T>;                                                             \
  template AeLoss<T> ae_loss<T>(ad::Tape<T>&, const Autoencoder<T>&, ad::Var, double,        \
                                ad::Mode);                                                    \
  template double active_fraction<T>(const BasicTensor<T>&, double);                         \
  template std::vector<EpochLog> train_autoencoder<T>(                                        \
      Autoencoder<T>&, const Tensor&, const data::AugmentationSpec&, const TrainConfig&,     \
      const std::function<void(const EpochLog&)>&);                                           \
  template std::vector<EpochLog> train_autoencoder<T>(                                        \
      Autoencoder<T>&, const Tensor&, const data::AugmentationSpec&, const TrainConfig&,     \
      optim::Adam<T>&, const std::function<void(const EpochLog&)>&, std::size_t);             \
  template BasicTensor<T> encode<T>(const Encoder<T>&, const Tensor&,                         \
                                    const data::AugmentationSpec&, std::size_t);              \
  template BasicTensor<T> reconstruct<T>(const Autoencoder<T>&, const Tensor&,                \
                                         const data::AugmentationSpec&, std::size_t);

PRDAD_INSTANTIATE(float)
PRDAD_INSTANTIATE(double)
#undef PRDAD_INSTANTIATE

}  // namespace prdad::autoencoder
