#include "prdad/prdad.hpp"

#include <cmath>

namespace prdad::model {

Shape PRDADConfig::representation_shape(std::size_t batch) const {
  if (decoder == DecoderKind::Trained) return encoder.representation_shape(batch);
  return {batch, 1, image_size, image_size};
}

std::size_t PRDADConfig::representation_numel() const {
  return shape_numel(representation_shape(1));
}

void PRDADConfig::validate() const {
  if (image_size == 0) throw ConfigError("model: image size must be positive");
  for (auto h : hidden)
    if (h == 0) throw ConfigError("model: hidden widths must be positive");
  if (padding.fraction < 0) throw ConfigError("model: negative padding fraction");
  if (input_scale < 0) throw ConfigError("model: negative input scale");
  if (finetune_fraction < 0 || finetune_fraction > 1)
    throw ConfigError("model: finetune fraction must lie in [0, 1]");
  if (decoder == DecoderKind::Packet) {
    if (image_size & (image_size - 1))
      throw ConfigError("model: packet decoder needs a power-of-two image size, got " +
                        std::to_string(image_size));
    if (packet_depth > wavelet::full_depth(image_size))
      throw ConfigError("model: packet depth " + std::to_string(packet_depth) +
                        " exceeds log2 of the image size");
    if (finetune_fraction > 0)
      throw ConfigError("model: the packet decoder has no weights to fine-tune");
  } else {
    encoder.validate();
    if (encoder.input_size != image_size)
      throw ConfigError("model: encoder input size " + std::to_string(encoder.input_size) +
                        " differs from image size " + std::to_string(image_size));
  }
}

template <typename T>
PRDAD<T>::PRDAD(const PRDADConfig& cfg, std::uint64_t seed,
                std::unique_ptr<autoencoder::Autoencoder<T>> ae)
    : cfg_(cfg), ae_(std::move(ae)) {
  cfg_.validate();
  if ((cfg_.decoder == DecoderKind::Trained) != static_cast<bool>(ae_))
    throw ConfigError(cfg_.decoder == DecoderKind::Trained
                          ? "model: trained decoder requested without an autoencoder"
                          : "model: packet decoder given an autoencoder");
  if (ae_) {
    const auto& ec = ae_->encoder.config();
    if (ec.widths != cfg_.encoder.widths || ec.input_size != cfg_.encoder.input_size)
      throw ConfigError("model: autoencoder layout differs from the configured encoder");
    ae_->encoder.params().set_trainable(false);
    ae_->decoder.params().set_trainable(false);
  }
  std::mt19937_64 rng(seed);
  const std::size_t m = cfg_.magnitude_size();
  const std::size_t dims[5] = {m * m, cfg_.hidden[0], cfg_.hidden[1], cfg_.hidden[2],
                                cfg_.representation_numel()};
  for (std::size_t l = 0; l < 4; ++l)
    mlp_.push_back(nn::make_dense(mlp_ps_, "mlp.layer" + std::to_string(l + 1), dims[l],
                                  dims[l + 1], true, rng));
  const std::size_t ch = cfg_.representation_shape(1)[1];
  for (std::size_t b = 0; b < cfg_.enhancement(); ++b)
    for (std::size_t c = 0; c < 2; ++c)
      enh_.push_back(nn::make_conv(enh_ps_,
                                   "enhance.block" + std::to_string(b + 1) + ".conv" +
                                       std::to_string(c + 1),
                                   ch, ch, true, true, nn::Activation::PReLU, rng));
}

template <typename T>
BasicTensor<T> PRDAD<T>::prepare_input(const BasicTensor<T>& omega) const {
  const std::size_t m = cfg_.magnitude_size();
  if (omega.rank() != 3 || omega.dim(1) != m || omega.dim(2) != m)
    throw DimensionError("model: magnitude input " + shape_str(omega.shape()) +
                         " does not match [B," + std::to_string(m) + "," + std::to_string(m) +
                         "]");
  const T s = static_cast<T>(cfg_.effective_input_scale());
  BasicTensor<T> out = omega.reshaped({omega.dim(0), m * m});
  for (auto& v : out.span()) {
    v *= s;
    if (cfg_.input == MagnitudeInput::Log1p) v = std::log1p(v);
  }
  return out;
}

template <typename T>
typename PRDAD<T>::Output PRDAD<T>::forward(ad::Tape<T>& t, ad::Var omega,
                                            ad::Mode mode) const {
  const std::size_t B = t.value(omega).dim(0);
  Output o;
  ad::Var h = t.constant(prepare_input(t.value(omega)));
  for (const auto& layer : mlp_) h = layer.apply(t, h);
  o.mlp = ad::reshape(t, h, cfg_.representation_shape(B));
  o.repr = o.mlp;
  for (const auto& c : enh_) o.repr = c.apply(t, o.repr, mode);
  o.image = decode(t, o.repr, mode);
  return o;
}

template <typename T>
ad::Var PRDAD<T>::decode(ad::Tape<T>& t, ad::Var repr, ad::Mode mode) const {
  if (cfg_.decoder == DecoderKind::Packet)
    return wavelet::packet_synthesis(t, repr, cfg_.packet_depth, cfg_.tree);
  // A frozen decoder keeps its batch statistics as well as its weights.
  return ae_->decoder.forward(t, repr, finetune_ ? mode : ad::Mode::Eval);
}

template <typename T>
BasicTensor<T> PRDAD<T>::target_representation(const BasicTensor<T>& x) const {
  if (cfg_.decoder == DecoderKind::Packet)
    return wavelet::analyze(x, cfg_.packet_depth, cfg_.tree);
  ad::Tape<T> t;
  auto r = ae_->encoder.forward(t, t.constant(x), ad::Mode::Eval);
  return t.value(r);
}

template <typename T>
ad::Var PRDAD<T>::rotate_repr(ad::Tape<T>& t, ad::Var repr) const {
  if (cfg_.decoder == DecoderKind::Trained) return ad::rotate_pi(t, repr);
  const std::size_t d = cfg_.packet_depth;
  auto img = wavelet::packet_synthesis(t, repr, d, cfg_.tree);
  return wavelet::packet_analysis(t, ad::rotate_pi(t, img), d, cfg_.tree);
}

template <typename T>
void PRDAD<T>::set_decoder_finetune(bool on) {
  finetune_ = on && ae_ != nullptr;
  if (ae_) ae_->decoder.params().set_trainable(finetune_);
}

template <typename T>
std::vector<ad::Parameter<T>*> PRDAD<T>::parameters() {
  auto p = mlp_ps_.parameters();
  for (auto* q : enh_ps_.parameters()) p.push_back(q);
  if (ae_)
    for (auto* q : ae_->decoder.params().parameters()) p.push_back(q);
  return p;
}

template <typename T>
std::vector<std::pair<std::string, ad::BatchNormState<T>*>> PRDAD<T>::states() {
  auto s = enh_ps_.states();
  if (ae_) {
    for (auto& q : ae_->encoder.params().states()) s.push_back(q);
    for (auto& q : ae_->decoder.params().states()) s.push_back(q);
  }
  return s;
}

template <typename T>
std::size_t PRDAD<T>::parameter_count() const {
  return mlp_ps_.count() + enh_ps_.count() + (ae_ ? ae_->decoder.params().count() : 0);
}

template class PRDAD<float>;
template class PRDAD<double>;

}  // namespace prdad::model
