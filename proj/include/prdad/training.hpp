#pragma once

// The four reconstruction losses, their weighted sum and the training loop.
//
// Every loss is a per-pixel (or per-coefficient) mean so the weights keep
// their meaning across resolutions. The magnitude loss compares unitary
// magnitudes |F x| / sqrt(HW); by Parseval that puts it on the same scale as
// the pixel MSE.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prdad/data.hpp"
#include "prdad/optim.hpp"
#include "prdad/prdad.hpp"

namespace prdad::training {

struct LossWeights {
  double mse = 1.0;
  double mag = 0.1;
  double sparse = 1e-4;
  double encode = 1.0;

  /// Throws ConfigError on negative weights or when all are zero.
  void validate() const;
};

/// Batch mean over samples of min(|x - xh|^2, |x - rot(xh)|^2) / pixels.
template <typename T>
ad::Var loss_mse_rot(ad::Tape<T>& t, ad::Var x, ad::Var xhat);

/// Batch mean over samples of |w(x) - w(xh)|^2 / bins, with w the unitary
/// padded magnitude.
template <typename T>
ad::Var loss_mag_cycle(ad::Tape<T>& t, ad::Var x, ad::Var xhat, const fourier::Padding& pad);

/// Mean |T| per coefficient.
template <typename T>
ad::Var loss_sparse(ad::Tape<T>& t, ad::Var repr);

template <typename T>
using RotateRepr = std::function<ad::Var(ad::Tape<T>&, ad::Var)>;

/// Batch mean over samples of min(|T - Th|^2, |T - rot(Th)|^2) / coeffs.
template <typename T>
ad::Var loss_encode_rot(ad::Tape<T>& t, ad::Var target, ad::Var repr,
                        const RotateRepr<T>& rotate);

/// rotate_repr for N feature maps: each map is point-reflected.
template <typename T>
RotateRepr<T> map_rotation();
/// rotate_repr for packet coefficients: analyze(rotate(synthesize(.))).
template <typename T>
RotateRepr<T> packet_rotation(std::size_t depth, wavelet::Tree tree = wavelet::Tree::Packet);

template <typename T>
struct LossTerms {
  ad::Var mse, mag, sparse, encode, total;
};

template <typename T>
LossTerms<T> total_loss(ad::Tape<T>& t, ad::Var x, ad::Var xhat, ad::Var target, ad::Var repr,
                        const LossWeights& w, const fourier::Padding& pad,
                        const RotateRepr<T>& rotate);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  LossWeights weights;
  optim::AdamConfig adam;
  std::uint64_t seed = 0;
  bool augment = true;
  /// Held-out share of the training images scored after every epoch.
  double val_fraction = 0.05;
  /// Write a checkpoint every k epochs (0: only at the end).
  std::size_t checkpoint_every = 0;
  /// Clip validation reconstructions to [0,1] before scoring.
  bool clamp_val = false;

  void validate(std::size_t dataset_size) const;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::uint64_t step = 0;
  double mse = 0, mag = 0, sparse = 0, encode = 0, total = 0;
  // Validation metrics on the [0,1] scale after orientation resolution;
  // NaN without a validation split.
  double val_mse = 0, val_mae = 0, val_ssim = 0, val_psnr = 0;
  double seconds = 0;
  bool finetune = false;
};

/// Column header and row formatting of the training log. Wall time is kept
/// out of it so repeated runs produce identical logs.
std::string log_header();
std::string log_row(const EpochLog& e);

template <typename T>
struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  /// Called with the number of completed epochs.
  std::function<void(std::size_t)> on_checkpoint;
};

/// Images are [N, n, n] on the [0,1] scale. Throws DivergenceError when a
/// loss turns non-finite; `on_checkpoint` has by then been called for the
/// last good epoch. `adam` may carry state from an earlier run.
template <typename T>
std::vector<EpochLog> train_prdad(model::PRDAD<T>& net, const Tensor& images,
                                  const data::AugmentationSpec& spec, const TrainConfig& cfg,
                                  optim::Adam<T>& adam, const TrainHooks<T>& hooks = {},
                                  std::size_t first_epoch = 0);

/// Normalized images [B, n, n] -> network batch pieces.
template <typename T>
struct Batch {
  BasicTensor<T> omega;   // [B, m, m]
  BasicTensor<T> x;       // [B, 1, n, n]
  BasicTensor<T> target;  // representation layout
};
template <typename T>
Batch<T> make_batch(const model::PRDAD<T>& net, const Tensor& normalized);

/// Eval-mode reconstructions of [0,1]-scale images, returned on the [0,1]
/// scale as one [n, n] tensor per image, optionally clipped to [0,1].
template <typename T>
std::vector<Tensor> predict(const model::PRDAD<T>& net, const Tensor& images,
                            const data::AugmentationSpec& spec, std::size_t batch = 100,
                            bool clamp = false);

}  // namespace prdad::training
