#pragma once

// Inference network: padded Fourier magnitude -> MLP -> representation ->
// convolutional enhancement -> decoder -> image.
//
// The decoder is either the fixed Haar packet synthesis (the representation
// is then the n x n packet coefficient grid) or the decoder half of a
// trained autoencoder, frozen unless fine-tuning is switched on. There is
// deliberately no inverse Fourier layer anywhere in the graph.

#include <memory>
#include <optional>

#include "prdad/autoencoder.hpp"
#include "prdad/fourier.hpp"
#include "prdad/wavelet.hpp"

namespace prdad::model {

enum class DecoderKind { Packet, Trained };
enum class MagnitudeInput { Raw, Log1p };

struct PRDADConfig {
  std::size_t image_size = 32;
  fourier::Padding padding{0.5};
  std::array<std::size_t, 3> hidden{2048, 4096, 4096};
  DecoderKind decoder = DecoderKind::Packet;
  /// Packet decoder only; 0 = full depth.
  std::size_t packet_depth = 0;
  /// Full packet tree, or the dyadic tree that splits only the LL band.
  wavelet::Tree tree = wavelet::Tree::Packet;
  /// Trained decoder only: the autoencoder the representation comes from.
  autoencoder::EncoderConfig encoder;
  /// Unset: 3 blocks for a trained decoder, none for the packet decoder.
  std::optional<std::size_t> enhancement_blocks;
  MagnitudeInput input = MagnitudeInput::Raw;
  /// Factor applied to the magnitudes before the MLP; 0 picks 1/m, which
  /// is the unitary DFT scaling of an m x m grid.
  double input_scale = 0;
  /// Fraction of the final epochs during which the trained decoder is
  /// unfrozen; 0 keeps it frozen throughout.
  double finetune_fraction = 0;

  std::size_t magnitude_size() const { return padding.padded_size(image_size); }
  std::size_t enhancement() const {
    return enhancement_blocks.value_or(decoder == DecoderKind::Trained ? 3 : 0);
  }
  double effective_input_scale() const {
    return input_scale > 0 ? input_scale : 1.0 / static_cast<double>(magnitude_size());
  }
  /// [B, N, s, s] for a trained decoder, [B, 1, n, n] for packets.
  Shape representation_shape(std::size_t batch) const;
  std::size_t representation_numel() const;
  /// Throws ConfigError on inconsistent sizes.
  void validate() const;
};

template <typename T>
class PRDAD {
 public:
  /// A trained decoder needs its autoencoder; the encoder half is kept frozen
  /// to produce the ground-truth representation for the encode loss.
  PRDAD(const PRDADConfig& cfg, std::uint64_t seed,
        std::unique_ptr<autoencoder::Autoencoder<T>> ae = nullptr);

  struct Output {
    ad::Var mlp;    // raw MLP output in representation layout
    ad::Var repr;   // after enhancement
    ad::Var image;  // [B, 1, n, n], normalized scale
  };

  /// omega [B, m, m] as produced by the forward model.
  Output forward(ad::Tape<T>& t, ad::Var omega, ad::Mode mode) const;
  /// Network input from magnitudes: scaling and the optional log.
  BasicTensor<T> prepare_input(const BasicTensor<T>& omega) const;

  /// Ground-truth representation of normalized images [B, 1, n, n].
  BasicTensor<T> target_representation(const BasicTensor<T>& x) const;
  /// Point reflection in representation space.
  ad::Var rotate_repr(ad::Tape<T>& t, ad::Var repr) const;
  /// The decoder on its own, for tests and the oracle path.
  ad::Var decode(ad::Tape<T>& t, ad::Var repr, ad::Mode mode) const;

  void set_decoder_finetune(bool on);
  bool decoder_finetune() const { return finetune_; }

  const PRDADConfig& config() const { return cfg_; }
  /// Everything the optimizer may touch, decoder included (frozen
  /// parameters are skipped by the optimizer itself).
  std::vector<ad::Parameter<T>*> parameters();
  std::vector<std::pair<std::string, ad::BatchNormState<T>*>> states();
  std::size_t parameter_count() const;
  nn::ParameterSet<T>& mlp_params() { return mlp_ps_; }
  const nn::ParameterSet<T>& mlp_params() const { return mlp_ps_; }
  nn::ParameterSet<T>& enhancement_params() { return enh_ps_; }
  const nn::ParameterSet<T>& enhancement_params() const { return enh_ps_; }
  autoencoder::Autoencoder<T>* autoencoder() { return ae_.get(); }
  const autoencoder::Autoencoder<T>* autoencoder() const { return ae_.get(); }

 private:
  PRDADConfig cfg_;
  nn::ParameterSet<T> mlp_ps_, enh_ps_;
  std::vector<nn::Dense<T>> mlp_;
  std::vector<nn::ConvBlock<T>> enh_;
  std::unique_ptr<autoencoder::Autoencoder<T>> ae_;
  bool finetune_ = false;
};

}  // namespace prdad::model
