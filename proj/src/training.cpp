#include "prdad/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "prdad/metrics.hpp"

namespace prdad::training {

void LossWeights::validate() const {
  for (double w : {mse, mag, sparse, encode})
    if (!(w >= 0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
  if (mse + mag + sparse + encode <= 0) throw ConfigError("at least one loss weight must be > 0");
}

namespace {

// Per-sample mean squared difference, [B].
template <typename T>
ad::Var per_sample_mse(ad::Tape<T>& t, ad::Var a, ad::Var b) {
  const auto& s = t.value(a).shape();
  const std::size_t per = shape_numel(s) / s.at(0);
  return ad::scale(t, ad::sum_per_sample(t, ad::square(t, ad::sub(t, a, b))),
                   static_cast<T>(1.0 / static_cast<double>(per)));
}

template <typename T>
void require_same_shape(const ad::Tape<T>& t, ad::Var a, ad::Var b, const char* op) {
  if (t.value(a).shape() != t.value(b).shape())
    throw DimensionError(std::string(op) + ": " + shape_str(t.value(a).shape()) + " vs " +
                         shape_str(t.value(b).shape()));
}

template <typename T>
ad::Var unitary_magnitude(ad::Tape<T>& t, ad::Var x, const fourier::Padding& pad) {
  auto w = fourier::forward_model(t, x, pad);
  const auto& s = t.value(w).shape();
  const double bins = static_cast<double>(s[s.size() - 1] * s[s.size() - 2]);
  return ad::scale(t, w, static_cast<T>(1.0 / std::sqrt(bins)));
}

}  // namespace

template <typename T>
ad::Var loss_mse_rot(ad::Tape<T>& t, ad::Var x, ad::Var xhat) {
  require_same_shape(t, x, xhat, "loss_mse_rot");
  auto direct = per_sample_mse(t, x, xhat);
  auto flipped = per_sample_mse(t, x, ad::rotate_pi(t, xhat));
  return ad::mean(t, ad::minimum(t, direct, flipped));
}

template <typename T>
ad::Var loss_mag_cycle(ad::Tape<T>& t, ad::Var x, ad::Var xhat, const fourier::Padding& pad) {
  require_same_shape(t, x, xhat, "loss_mag_cycle");
  return ad::mean(t, per_sample_mse(t, unitary_magnitude(t, x, pad),
                                    unitary_magnitude(t, xhat, pad)));
}

template <typename T>
ad::Var loss_sparse(ad::Tape<T>& t, ad::Var repr) {
  return ad::mean(t, ad::abs(t, repr));
}

template <typename T>
ad::Var loss_encode_rot(ad::Tape<T>& t, ad::Var target, ad::Var repr,
                        const RotateRepr<T>& rotate) {
  require_same_shape(t, target, repr, "loss_encode_rot");
  auto direct = per_sample_mse(t, target, repr);
  auto flipped = per_sample_mse(t, target, rotate(t, repr));
  return ad::mean(t, ad::minimum(t, direct, flipped));
}

template <typename T>
RotateRepr<T> map_rotation() {
  return [](ad::Tape<T>& t, ad::Var r) { return ad::rotate_pi(t, r); };
}

template <typename T>
RotateRepr<T> packet_rotation(std::size_t depth, wavelet::Tree tree) {
  return [depth, tree](ad::Tape<T>& t, ad::Var r) {
    auto img = wavelet::packet_synthesis(t, r, depth, tree);
    return wavelet::packet_analysis(t, ad::rotate_pi(t, img), depth, tree);
  };
}

template <typename T>
LossTerms<T> total_loss(ad::Tape<T>& t, ad::Var x, ad::Var xhat, ad::Var target, ad::Var repr,
                        const LossWeights& w, const fourier::Padding& pad,
                        const RotateRepr<T>& rotate) {
  LossTerms<T> l;
  l.mse = loss_mse_rot(t, x, xhat);
  l.mag = loss_mag_cycle(t, x, xhat, pad);
  l.sparse = loss_sparse(t, repr);
  l.encode = loss_encode_rot(t, target, repr, rotate);
  auto term = [&](ad::Var v, double k) { return ad::scale(t, v, static_cast<T>(k)); };
  l.total = ad::add(t, ad::add(t, term(l.mse, w.mse), term(l.mag, w.mag)),
                    ad::add(t, term(l.sparse, w.sparse), term(l.encode, w.encode)));
  return l;
}

void TrainConfig::validate(std::size_t dataset_size) const {
  weights.validate();
  adam.validate();
  if (epochs == 0) throw ConfigError("training: epochs must be positive");
  if (!(val_fraction >= 0 && val_fraction < 1))
    throw ConfigError("training: val_fraction must lie in [0, 1)");
  const auto held = static_cast<std::size_t>(std::llround(val_fraction * dataset_size));
  const std::size_t usable = dataset_size - std::min(held, dataset_size);
  if (batch_size == 0 || batch_size > usable)
    throw ConfigError("training: batch size " + std::to_string(batch_size) + " outside [1, " +
                      std::to_string(usable) + "]");
}

std::string log_header() {
  return "epoch,step,loss_mse,loss_mag,loss_sparse,loss_encode,loss_total,"
         "val_mse,val_mae,val_ssim,val_psnr,decoder_finetune";
}

std::string log_row(const EpochLog& e) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu,%llu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d",
                e.epoch, static_cast<unsigned long long>(e.step), e.mse, e.mag, e.sparse,
                e.encode, e.total, e.val_mse, e.val_mae, e.val_ssim, e.val_psnr,
                e.finetune ? 1 : 0);
  return buf;
}

template <typename T>
Batch<T> make_batch(const model::PRDAD<T>& net, const Tensor& normalized) {
  const std::size_t B = normalized.dim(0), n = normalized.dim(1);
  Batch<T> b;
  b.omega = fourier::forward_model(normalized, net.config().padding).template cast<T>();
  b.x = normalized.reshaped({B, 1, n, n}).template cast<T>();
  b.target = net.target_representation(b.x);
  return b;
}

template <typename T>
std::vector<Tensor> predict(const model::PRDAD<T>& net, const Tensor& images,
                            const data::AugmentationSpec& spec, std::size_t batch, bool clamp) {
  const std::size_t N = images.dim(0), n = images.dim(1);
  std::vector<Tensor> out;
  out.reserve(N);
  for (std::size_t s = 0; s < N; s += batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = s; i < std::min(N, s + batch); ++i) idx.push_back(i);
    Tensor z = data::normalize(data::gather(images, idx), spec.mu, spec.sigma);
    ad::Tape<T> t;
    auto o = net.forward(
        t, t.constant(fourier::forward_model(z, net.config().padding).template cast<T>()),
        ad::Mode::Eval);
    const auto& img = t.value(o.image);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      Tensor x({n, n});
      for (std::size_t i = 0; i < n * n; ++i) x[i] = static_cast<double>(img[k * n * n + i]);
      out.push_back(data::denormalize(x, spec.mu, spec.sigma));
      if (clamp)
        for (auto& v : out.back().span()) v = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

template <typename T>
std::vector<EpochLog> train_prdad(model::PRDAD<T>& net, const Tensor& images,
                                  const data::AugmentationSpec& spec, const TrainConfig& cfg,
                                  optim::Adam<T>& adam, const TrainHooks<T>& hooks,
                                  std::size_t first_epoch) {
  if (images.rank() != 3 || images.dim(0) == 0)
    throw ContractError("train_prdad: empty or malformed image set");
  if (images.dim(1) != net.config().image_size || images.dim(2) != net.config().image_size)
    throw DimensionError("train_prdad: images " + shape_str(images.shape()) +
                         " do not match the model size " +
                         std::to_string(net.config().image_size));
  cfg.validate(images.dim(0));
  auto [train_idx, val_idx] = data::split_indices(images.dim(0), cfg.val_fraction, cfg.seed);
  const Tensor val_images = val_idx.empty() ? Tensor() : data::gather(images, val_idx);
  std::vector<Tensor> val_targets;
  for (std::size_t k = 0; k < val_idx.size(); ++k) {
    const std::size_t n = images.dim(1);
    Tensor x({n, n});
    std::copy_n(val_images.data() + k * n * n, n * n, x.data());
    val_targets.push_back(std::move(x));
  }

  const auto rotate = net.config().decoder == model::DecoderKind::Packet
                          ? packet_rotation<T>(net.config().packet_depth, net.config().tree)
                          : map_rotation<T>();
  const double ft = net.config().finetune_fraction;
  const std::size_t ft_epochs =
      ft > 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ft * cfg.epochs))) : 0;

  std::vector<EpochLog> logs;
  const std::size_t N = train_idx.size();
  for (std::size_t epoch = first_epoch; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLog log;
    log.epoch = epoch;
    log.finetune = ft_epochs > 0 && epoch + ft_epochs >= cfg.epochs;
    net.set_decoder_finetune(log.finetune);
    const auto perm = data::split_indices(N, 0.0, data::sample_seed(cfg.seed, epoch, ~0ULL)).first;
    double sums[5] = {0, 0, 0, 0, 0};
    for (std::size_t s = 0; s < N; s += cfg.batch_size) {
      std::vector<std::size_t> idx;
      for (std::size_t k = s; k < std::min(N, s + cfg.batch_size); ++k)
        idx.push_back(train_idx[perm[k]]);
      Tensor raw = data::augmented_batch(images, idx, spec, cfg.seed, epoch, cfg.augment);
      Batch<T> b = make_batch(net, data::normalize(raw, spec.mu, spec.sigma));
      ad::Tape<T> t;
      try {
        auto o = net.forward(t, t.constant(std::move(b.omega)), ad::Mode::Train);
        auto l = total_loss(t, t.constant(std::move(b.x)), o.image,
                            t.constant(std::move(b.target)), o.repr, cfg.weights,
                            net.config().padding, rotate);
        t.backward(l.total);
        adam.step();
        const double w = static_cast<double>(idx.size());
        const ad::Var vs[5] = {l.mse, l.mag, l.sparse, l.encode, l.total};
        for (int k = 0; k < 5; ++k) sums[k] += w * static_cast<double>(t.value(vs[k]).item());
      } catch (const NumericError& e) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(adam.steps() + 1) + ": " + e.what());
      }
    }
    adam.end_epoch();
    const double dn = static_cast<double>(N);
    log.mse = sums[0] / dn;
    log.mag = sums[1] / dn;
    log.sparse = sums[2] / dn;
    log.encode = sums[3] / dn;
    log.total = sums[4] / dn;
    log.step = adam.steps();
    if (val_idx.empty()) {
      log.val_mse = log.val_mae = log.val_ssim = log.val_psnr =
          std::numeric_limits<double>::quiet_NaN();
    } else {
      auto rep = metrics::score(predict(net, val_images, spec, 100, cfg.clamp_val), val_targets, true, 1.0);
      log.val_mse = rep.mean.mse;
      log.val_mae = rep.mean.mae;
      log.val_ssim = rep.mean.ssim;
      log.val_psnr = rep.mean.psnr;
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    logs.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
    const bool last = epoch + 1 == cfg.epochs;
    if (hooks.on_checkpoint &&
        (last || (cfg.checkpoint_every && (epoch + 1) % cfg.checkpoint_every == 0)))
      hooks.on_checkpoint(epoch + 1);
  }
  net.set_decoder_finetune(false);
  return logs;
}

#define PRDAD_INSTANTIATE(T)                                                                   \
  template ad::Var loss_mse_rot<T>(ad::Tape<T>&, ad::Var, ad::Var);                            \
  template ad::Var loss_mag_cycle<T>(ad::Tape<T>&, ad::Var, ad::Var, const fourier::Padding&); \
  template ad::Var loss_sparse<T>(ad::Tape<T>&, ad::Var);                                      \
  template ad::Var loss_encode_rot<T>(ad::Tape<T>&, ad::Var, ad::Var, const RotateRepr<T>&);   \
  template RotateRepr<T> map_rotation<T>();                                                    \
  template RotateRepr<T> packet_rotation<T>(std::size_t, wavelet::Tree);                      \
  template LossTerms<T> total_loss<T>(ad::Tape<T>&, ad::Var, ad::Var, ad::Var, ad::Var,        \
                                      const LossWeights&, const fourier::Padding&,             \
                                      const RotateRepr<T>&);                                   \
  template Batch<T> make_batch<T>(const model::PRDAD<T>&, const Tensor&);                      \
  template std::vector<Tensor> predict<T>(const model::PRDAD<T>&, const Tensor&,               \
                                          const data::AugmentationSpec&, std::size_t, bool);   \
  template std::vector<EpochLog> train_prdad<T>(model::PRDAD<T>&, const Tensor&,               \
                                                const data::AugmentationSpec&,                 \
                                                const TrainConfig&, optim::Adam<T>&,           \
                                                const TrainHooks<T>&, std::size_t);

PRDAD_INSTANTIATE(float)
PRDAD_INSTANTIATE(double)
#undef PRDAD_INSTANTIATE

}  // namespace prdad::training
