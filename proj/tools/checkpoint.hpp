#pragma once

// Checkpoint container.
//
//   offset  size  field
//   0       8     magic "PRDADCKP"
//   8       4     format version (u32, little endian)
//   12      8     manifest length L (u64)
//   20      L     manifest, UTF-8 JSON
//   20+L    ...   blob data, concatenated
//   end-4   4     CRC-32 of every preceding byte
//
// The manifest records the checkpoint kind, precision, config hash, the
// fully resolved config text, training progress and one entry per blob:
// name, dtype ("f32" or "f64"), shape and byte offset into the data area.
// Blob data are little-endian IEEE floats in row-major order. Parameters are
// stored under their registry names, batch-norm statistics as
// "<state>.running_mean" / ".running_var", and Adam moments as
// "adam.m:<param>" / "adam.v:<param>".

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "prdad/autoencoder.hpp"
#include "prdad/optim.hpp"
#include "prdad/prdad.hpp"

namespace prdad::cli {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Blob {
  std::string name;
  Shape shape;
  bool f64 = false;
  std::vector<unsigned char> bytes;
};

struct Checkpoint {
  nlohmann::json manifest = nlohmann::json::object();
  std::vector<Blob> blobs;

  const Blob* find(const std::string& name) const;
};

/// Writes to a sibling temporary file and renames it into place, so the
/// previous checkpoint survives an interrupted write. Throws IoError.
void save(const std::filesystem::path& path, const Checkpoint& ck);
/// Throws IoError when the file is missing and FormatError when it is
/// truncated, corrupted or of another format version.
Checkpoint load(const std::filesystem::path& path);

template <typename T>
void put_tensor(Checkpoint& ck, const std::string& name, const BasicTensor<T>& x);
/// Copies a blob into `x`, which must already have the stored shape and
/// precision. Throws FormatError otherwise.
template <typename T>
void get_tensor(const Checkpoint& ck, const std::string& name, BasicTensor<T>& x);

/// Parameters and batch-norm statistics of one registry.
template <typename T>
void put_params(Checkpoint& ck, const nn::ParameterSet<T>& ps);
template <typename T>
void get_params(const Checkpoint& ck, nn::ParameterSet<T>& ps);

template <typename T>
void put_adam(Checkpoint& ck, optim::Adam<T>& adam);
/// Restores moments, step count and learning rate when the checkpoint has
/// them; returns false when it carries no optimizer state.
template <typename T>
bool get_adam(const Checkpoint& ck, optim::Adam<T>& adam);

template <typename T>
void put_autoencoder(Checkpoint& ck, const autoencoder::Autoencoder<T>& ae);
template <typename T>
void get_autoencoder(const Checkpoint& ck, autoencoder::Autoencoder<T>& ae);

/// MLP, enhancement blocks and, for a trained decoder, the whole
/// autoencoder it was built around.
template <typename T>
void put_prdad(Checkpoint& ck, const model::PRDAD<T>& net);
template <typename T>
void get_prdad(const Checkpoint& ck, model::PRDAD<T>& net);

}  // namespace prdad::cli
