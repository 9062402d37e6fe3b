#pragma once

// Dataset ingestion, preprocessing and augmentation.
//
// Images travel through the pipeline in this order:
//   load (bytes / 255) -> center crop -> resize        once, at load time
//   augment on the [0,1] scale                          per epoch and sample
//   normalize -> zero pad -> |DFT|                      per batch

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "prdad/fourier.hpp"

namespace prdad::data {

/// Reads an IDX image file (magic 0x00000803), gzip-compressed or plain.
/// Returns [count, rows, cols] with pixel bytes scaled by 1/255.
Tensor load_idx(const std::filesystem::path& path);
/// Label file (magic 0x00000801).
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);

/// Binary (P5) PGM, 8 or 16 bit, scaled to [0,1].
Tensor read_pgm(const std::filesystem::path& path);
/// Writes [H, W] values clamped to [0,1] as an 8-bit P5 PGM.
void write_pgm(const std::filesystem::path& path, const Tensor& image);

enum class ResizeMethod { Bilinear, Area };

/// Resampling of the last two dims. Bilinear uses half-pixel centres with
/// edge clamp; Area averages the input over each output pixel's footprint,
/// which conserves mass exactly.
Tensor resize(const Tensor& x, std::size_t height, std::size_t width,
              ResizeMethod method = ResizeMethod::Bilinear);
/// Central square crop of the last two dims.
Tensor center_crop(const Tensor& x);
Tensor normalize(const Tensor& x, double mu, double sigma);
Tensor denormalize(const Tensor& x, double mu, double sigma);

struct Range {
  double lo = 0;
  double hi = 0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct Blur {
  std::size_t kernel = 5;
  Range sigma;
  friend bool operator==(const Blur&, const Blur&) = default;
};

struct AugmentationSpec {
  std::size_t resize = 32;
  ResizeMethod resize_method = ResizeMethod::Bilinear;
  bool center_crop = false;
  double mu = 0.1307;
  double sigma = 0.3081;
  /// Oversampling fraction; 0 disables padding.
  double pad_fraction = 0.5;
  /// Firing probability shared by every enabled random transform.
  double bernoulli = 0.25;
  bool hflip = false;
  /// Degrees. The magnitude is drawn from the range, the sign at random.
  std::optional<Range> rotation;
  /// Maximum shift as a fraction of width (first) and height (second).
  std::optional<Range> translation;
  std::optional<Range> scaling;
  std::optional<Blur> blur;
  std::optional<Range> gamma;

  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;

  /// Throws ConfigError on unordered ranges or probabilities outside [0,1].
  void validate() const;
  fourier::Padding padding() const { return fourier::Padding{pad_fraction}; }
};

/// Built-in specs: "mnist", "emnist", "kmnist", "fashion-mnist", "celeba".
AugmentationSpec dataset_spec(const std::string& name);
const std::vector<std::string>& dataset_names();

/// One augmented copy of an [H, W] image on the [0,1] scale.
Tensor augment(const Tensor& image, const AugmentationSpec& spec, std::mt19937_64& rng);

/// Point transforms used inside augment, exposed for tests.
Tensor hflip(const Tensor& image);
/// Inverse-mapped affine warp about the image centre with bilinear sampling
/// and zero fill. Shifts are in pixels.
Tensor warp(const Tensor& image, double degrees, double scale, double shift_x, double shift_y);
Tensor gaussian_blur(const Tensor& image, std::size_t kernel, double sigma);
Tensor gamma_correct(const Tensor& image, double gamma);

/// Fixed coefficient transform used as ground truth for the encode loss.
using Encoder = std::function<Tensor(const Tensor&)>;

struct Sample {
  Tensor omega;  // [m, m]
  Tensor x;      // [n, n], normalized
  Tensor t;      // encoder(x)
};
Sample make_sample(const Tensor& x, const fourier::Padding& pad, const Encoder& encoder);

struct Dataset {
  std::string name;
  Tensor train;  // [N, n, n] on the [0,1] scale
  Tensor test;
  std::size_t count_train() const { return train.dim(0); }
  std::size_t count_test() const { return test.dim(0); }
};

struct DatasetSource {
  std::string name = "mnist";
  std::filesystem::path root;
  /// Caps on the number of images taken from each split (0 = all).
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
};

/// Loads a dataset directory. MNIST-family names look for the published IDX
/// file names (optionally .gz); "celeba" reads train/ and test/ folders of
/// PGM files. Images are cropped and resized per the built-in spec.
Dataset load_dataset(const DatasetSource& src, const AugmentationSpec& spec);

/// Index split of [0, n): a seeded shuffle with `fraction` of the indices
/// held out for validation.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double fraction, std::uint64_t seed);

/// Rows `idx` of a [N, ...] tensor.
Tensor gather(const Tensor& images, const std::vector<std::size_t>& idx);

/// Seed for an (epoch, sample) pair so augmentation does not depend on the
/// order or thread in which samples are produced.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index);

/// Augments the rows `idx` of images into a [B, n, n] batch. Each sample uses
/// its own generator, so any worker count gives the same batch.
Tensor augmented_batch(const Tensor& images, const std::vector<std::size_t>& idx,
                       const AugmentationSpec& spec, std::uint64_t seed, std::uint64_t epoch,
                       bool enabled);

}  // namespace prdad::data
