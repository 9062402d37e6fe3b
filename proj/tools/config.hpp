#pragma once

// Experiment configuration: a small INI dialect with a fixed schema.
//
//   # comment            whole-line comments start with '#' or ';'
//   [section]
//   key = value          lists are comma separated: hidden = 2048,4096,4096
//
// Every key has a default. Unknown sections or keys, duplicates and
// unparsable values are rejected with ConfigError before any work starts.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prdad/autoencoder.hpp"
#include "prdad/data.hpp"
#include "prdad/prdad.hpp"
#include "prdad/training.hpp"

namespace prdad::cli {

enum class Precision { Float, Double };

struct EvalSettings {
  bool orientation_resolve = true;
  double peak = 1.0;
  /// Clip reconstructions to the valid pixel range before scoring.
  bool clamp = true;
  /// Number of (original, recovered) pairs in the exported image grid.
  std::size_t grid = 16;
  std::size_t batch = 100;
  /// Debug hook: score the ground truth against itself.
  bool oracle = false;
};

struct BaselineSettings {
  enum class Method { ErrorReduction, HIO } method = Method::ErrorReduction;
  int iterations = 500;
  double beta = 0.9;
  /// Test images to run; 0 takes the whole test split.
  std::size_t count = 0;
  bool support = true;
  bool nonneg = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  Precision precision = Precision::Float;
  std::filesystem::path out = "runs/experiment";

  data::DatasetSource source;
  data::AugmentationSpec spec = data::dataset_spec("mnist");
  bool augment = true;

  autoencoder::TrainConfig ae;
  model::PRDADConfig model;
  std::filesystem::path autoencoder_checkpoint;
  training::TrainConfig train;
  EvalSettings eval;
  BaselineSettings baseline;
};

/// Which checkpoint a hash is meant for. The autoencoder hash ignores the
/// PR-DAD sections and vice versa.
enum class Stage { Autoencoder, PRDAD };

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config in the same dialect, one key per line in schema
/// order. parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& c);
/// Every key with its default and a one-line description.
std::string commented_example();

/// FNV-1a over the keys that shape a stage's model and training stream.
/// Keys that may change on resume (epoch counts, paths, eval settings) are
/// left out.
std::uint64_t config_hash(const ExperimentConfig& c, Stage stage);

/// Cross-field checks after parsing.
void validate(const ExperimentConfig& c);

}  // namespace prdad::cli
