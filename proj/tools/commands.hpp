#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "config.hpp"

namespace prdad::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kDivergence = 3,
  kIoError = 4,
};

struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> checkpoint;
  /// 0 keeps the OpenMP default.
  int workers = 0;
  /// export-figures only; defaults to the output directory.
  std::optional<std::filesystem::path> run_dir;
};

/// Runs one command and maps failures onto exit codes, printing a one-line
/// diagnostic to stderr.
int run(const std::string& command, const Options& opt);

/// The config a command would run with: file (or defaults) plus flag
/// overrides.
ExperimentConfig effective_config(const Options& opt);

// Output file names inside a run directory.
inline constexpr const char* kConfigFile = "config.ini";
inline constexpr const char* kVersionFile = "version.txt";
inline constexpr const char* kAeLog = "ae_log.csv";
inline constexpr const char* kAeCheckpoint = "autoencoder.ckpt";
inline constexpr const char* kTrainLog = "train_log.csv";
inline constexpr const char* kTimingLog = "timing.csv";
inline constexpr const char* kPrdadCheckpoint = "prdad.ckpt";

}  // namespace prdad::cli
