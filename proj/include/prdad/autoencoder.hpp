#pragma once

// Convolutional encoder-decoder that learns an over-complete, sparse,
// low-resolution representation of images.
//
// Encoder: three DownConv blocks, each [conv3x3 -> batchnorm -> act] x 2.
// Only the first two blocks pool, so a 32x32 input becomes N maps of 8x8.
// Decoder: the mirror image (one block at the representation resolution,
// then two upsampling blocks) followed by one linear conv to a single
// channel.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "prdad/data.hpp"
#include "prdad/nn.hpp"
#include "prdad/optim.hpp"

namespace prdad::autoencoder {

struct EncoderConfig {
  std::size_t input_size = 32;
  /// Channel widths of the three blocks; the last one is N.
  std::array<std::size_t, 3> widths{32, 64, 128};
  /// Activation inside the blocks. The representation itself always goes
  /// through a PReLU so it can hold negative coefficients.
  nn::Activation activation = nn::Activation::PReLU;

  std::size_t maps() const { return widths[2]; }
  std::size_t map_size() const { return input_size / 4; }
  Shape representation_shape(std::size_t batch) const {
    return {batch, maps(), map_size(), map_size()};
  }
  /// Throws ConfigError when the input does not divide into two poolings.
  void validate() const;
};

template <typename T>
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, std::uint64_t seed);
  /// x [B,1,n,n] -> [B,N,n/4,n/4].
  ad::Var forward(ad::Tape<T>& t, ad::Var x, ad::Mode mode) const;

  const EncoderConfig& config() const { return cfg_; }
  nn::ParameterSet<T>& params() { return ps_; }
  const nn::ParameterSet<T>& params() const { return ps_; }

 private:
  EncoderConfig cfg_;
  nn::ParameterSet<T> ps_;
  std::vector<nn::ConvBlock<T>> convs_;
};

template <typename T>
class Decoder {
 public:
  Decoder(const EncoderConfig& cfg, std::uint64_t seed);
  /// [B,N,n/4,n/4] -> [B,1,n,n].
  ad::Var forward(ad::Tape<T>& t, ad::Var repr, ad::Mode mode) const;

  const EncoderConfig& config() const { return cfg_; }
  nn::ParameterSet<T>& params() { return ps_; }
  const nn::ParameterSet<T>& params() const { return ps_; }

 private:
  EncoderConfig cfg_;
  nn::ParameterSet<T> ps_;
  std::vector<nn::ConvBlock<T>> convs_;
};

template <typename T>
struct Autoencoder {
  Autoencoder(const EncoderConfig& cfg, std::uint64_t seed)
      : encoder(cfg, seed), decoder(cfg, seed ^ 0x9e3779b97f4a7c15ULL) {}
  Encoder<T> encoder;
  Decoder<T> decoder;

  std::vector<ad::Parameter<T>*> parameters();
  std::size_t parameter_count() const;
};

template <typename T>
Encoder<T> build_encoder(const EncoderConfig& cfg, std::uint64_t seed = 0) {
  return Encoder<T>(cfg, seed);
}
template <typename T>
Decoder<T> build_decoder(const EncoderConfig& cfg, std::uint64_t seed = 0) {
  return Decoder<T>(cfg, seed);
}

template <typename T>
struct AeLoss {
  ad::Var total;
  ad::Var mse;
  ad::Var l1;
  ad::Var repr;
  ad::Var recon;
};

/// Per-pixel reconstruction MSE plus lambda times the per-coefficient mean
/// |E(x)|, both averaged over the batch.
template <typename T>
AeLoss<T> ae_loss(ad::Tape<T>& t, const Autoencoder<T>& ae, ad::Var x, double lambda_sparse,
                  ad::Mode mode);

/// Mean over samples of the fraction of entries with |a| > rel * max|a|,
/// the maximum taken per sample.
template <typename T>
double active_fraction(const BasicTensor<T>& repr, double rel = 0.1);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lambda_sparse = 0.05;
  optim::AdamConfig adam;
  std::uint64_t seed = 0;
  bool augment = true;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::uint64_t step = 0;
  double loss = 0;
  double mse = 0;
  double l1 = 0;
  double active = 0;
  double seconds = 0;
};

/// `images` are [N,n,n] on the [0,1] scale; the spec supplies the
/// normalization and augmentation. Throws ContractError on an empty set and
/// DivergenceError when the loss stops being finite.
template <typename T>
std::vector<EpochLog> train_autoencoder(Autoencoder<T>& ae, const Tensor& images,
                                        const data::AugmentationSpec& spec,
                                        const TrainConfig& cfg,
                                        const std::function<void(const EpochLog&)>& on_epoch = {});
/// Continues with an optimizer that may carry state from an earlier run;
/// epochs [first_epoch, cfg.epochs) are trained.
template <typename T>
std::vector<EpochLog> train_autoencoder(Autoencoder<T>& ae, const Tensor& images,
                                        const data::AugmentationSpec& spec,
                                        const TrainConfig& cfg, optim::Adam<T>& adam,
                                        const std::function<void(const EpochLog&)>& on_epoch,
                                        std::size_t first_epoch);

/// Eval-mode encoding of [N,n,n] images on the [0,1] scale, in batches.
template <typename T>
BasicTensor<T> encode(const Encoder<T>& enc, const Tensor& images,
                      const data::AugmentationSpec& spec, std::size_t batch = 128);
/// Eval-mode reconstruction, returned on the normalized scale as [N,n,n].
template <typename T>
BasicTensor<T> reconstruct(const Autoencoder<T>& ae, const Tensor& images,
                           const data::AugmentationSpec& spec, std::size_t batch = 128);

}  // namespace prdad::autoencoder
