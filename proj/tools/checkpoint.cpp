#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include <zlib.h>

#include "prdad/errors.hpp"

namespace prdad::cli {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written as native little-endian floats");

namespace {

constexpr char kMagic[8] = {'P', 'R', 'D', 'A', 'D', 'C', 'K', 'P'};

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

std::uint32_t crc(const void* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

}  // namespace

const Blob* Checkpoint::find(const std::string& name) const {
  for (const auto& b : blobs)
    if (b.name == name) return &b;
  return nullptr;
}

void save(const std::filesystem::path& path, const Checkpoint& ck) {
  nlohmann::json manifest = ck.manifest;
  nlohmann::json entries = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& b : ck.blobs) {
    entries.push_back({{"name", b.name},
                       {"dtype", b.f64 ? "f64" : "f32"},
                       {"shape", b.shape},
                       {"offset", offset},
                       {"bytes", b.bytes.size()}});
    offset += b.bytes.size();
  }
  manifest["blobs"] = entries;
  const std::string text = manifest.dump();

  std::string head(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(head, kCheckpointVersion);
  put_le<std::uint64_t>(head, text.size());
  head += text;

  std::uint32_t c = crc(head.data(), head.size());
  for (const auto& b : ck.blobs)
    c = static_cast<std::uint32_t>(crc32(c, b.bytes.data(), static_cast<uInt>(b.bytes.size())));
  std::string tail;
  put_le<std::uint32_t>(tail, c);

  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& b : ck.blobs)
      out.write(reinterpret_cast<const char*>(b.bytes.data()),
                static_cast<std::streamsize>(b.bytes.size()));
    out.write(tail.data(), static_cast<std::streamsize>(tail.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string() + ": ";
  constexpr std::size_t kHead = sizeof kMagic + 4 + 8;
  if (buf.size() < kHead + 4 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw FormatError(where + "not a checkpoint file");
  if (crc(buf.data(), buf.size() - 4) != get_le<std::uint32_t>(buf.data() + buf.size() - 4))
    throw FormatError(where + "checksum mismatch, the file is corrupted or truncated");
  const auto version = get_le<std::uint32_t>(buf.data() + sizeof kMagic);
  if (version != kCheckpointVersion)
    throw FormatError(where + "format version " + std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointVersion));
  const auto len = get_le<std::uint64_t>(buf.data() + sizeof kMagic + 4);
  if (len > buf.size() - kHead - 4) throw FormatError(where + "manifest overruns the file");

  Checkpoint ck;
  try {
    ck.manifest = nlohmann::json::parse(buf.begin() + kHead, buf.begin() + kHead + len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "bad manifest: " + e.what());
  }
  const std::size_t data = kHead + len, data_end = buf.size() - 4;
  for (const auto& e : ck.manifest.at("blobs")) {
    Blob b;
    b.name = e.at("name").get<std::string>();
    b.f64 = e.at("dtype").get<std::string>() == "f64";
    b.shape = e.at("shape").get<Shape>();
    const auto off = e.at("offset").get<std::uint64_t>();
    const auto n = e.at("bytes").get<std::uint64_t>();
    if (data + off + n > data_end) throw FormatError(where + "blob " + b.name + " overruns");
    b.bytes.assign(buf.begin() + data + off, buf.begin() + data + off + n);
    ck.blobs.push_back(std::move(b));
  }
  ck.manifest.erase("blobs");
  return ck;
}

template <typename T>
void put_tensor(Checkpoint& ck, const std::string& name, const BasicTensor<T>& x) {
  Blob b;
  b.name = name;
  b.shape = x.shape();
  b.f64 = sizeof(T) == 8;
  b.bytes.resize(x.size() * sizeof(T));
  std::memcpy(b.bytes.data(), x.data(), b.bytes.size());
  ck.blobs.push_back(std::move(b));
}

template <typename T>
void get_tensor(const Checkpoint& ck, const std::string& name, BasicTensor<T>& x) {
  const Blob* b = ck.find(name);
  if (!b) throw FormatError("checkpoint has no entry " + name);
  if (b->f64 != (sizeof(T) == 8))
    throw FormatError("checkpoint entry " + name + " is stored in " +
                      (b->f64 ? "double" : "float") + " precision");
  if (b->shape != x.shape())
    throw FormatError("checkpoint entry " + name + " has shape " + shape_str(b->shape) +
                      ", the model expects " + shape_str(x.shape()));
  std::memcpy(x.data(), b->bytes.data(), b->bytes.size());
}

template <typename T>
void put_params(Checkpoint& ck, const nn::ParameterSet<T>& ps) {
  for (const auto* p : ps.parameters()) put_tensor(ck, p->name, p->value);
  for (const auto& [name, s] : ps.states()) {
    put_tensor(ck, name + ".running_mean", s->running_mean);
    put_tensor(ck, name + ".running_var", s->running_var);
  }
}

template <typename T>
void get_params(const Checkpoint& ck, nn::ParameterSet<T>& ps) {
  for (auto* p : ps.parameters()) get_tensor(ck, p->name, p->value);
  for (auto& [name, s] : ps.states()) {
    get_tensor(ck, name + ".running_mean", s->running_mean);
    get_tensor(ck, name + ".running_var", s->running_var);
  }
}

template <typename T>
void put_adam(Checkpoint& ck, optim::Adam<T>& adam) {
  ck.manifest["adam"] = {{"steps", adam.steps()}, {"lr", adam.lr()}};
  const auto& ps = adam.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    put_tensor(ck, "adam.m:" + ps[i]->name, adam.first_moments()[i]);
    put_tensor(ck, "adam.v:" + ps[i]->name, adam.second_moments()[i]);
  }
}

template <typename T>
bool get_adam(const Checkpoint& ck, optim::Adam<T>& adam) {
  if (!ck.manifest.contains("adam")) return false;
  const auto& ps = adam.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    get_tensor(ck, "adam.m:" + ps[i]->name, adam.first_moments()[i]);
    get_tensor(ck, "adam.v:" + ps[i]->name, adam.second_moments()[i]);
  }
  adam.restore(ck.manifest["adam"].at("steps").get<std::uint64_t>(),
               ck.manifest["adam"].at("lr").get<double>());
  return true;
}

template <typename T>
void put_autoencoder(Checkpoint& ck, const autoencoder::Autoencoder<T>& ae) {
  put_params(ck, ae.encoder.params());
  put_params(ck, ae.decoder.params());
}

template <typename T>
void get_autoencoder(const Checkpoint& ck, autoencoder::Autoencoder<T>& ae) {
  get_params(ck, ae.encoder.params());
  get_params(ck, ae.decoder.params());
}

template <typename T>
void put_prdad(Checkpoint& ck, const model::PRDAD<T>& net) {
  put_params(ck, net.mlp_params());
  put_params(ck, net.enhancement_params());
  if (net.autoencoder()) put_autoencoder(ck, *net.autoencoder());
}

template <typename T>
void get_prdad(const Checkpoint& ck, model::PRDAD<T>& net) {
  get_params(ck, net.mlp_params());
  get_params(ck, net.enhancement_params());
  if (net.autoencoder()) get_autoencoder(ck, *net.autoencoder());
}

#define PRDAD_INSTANTIATE(T)                                                          \
  template void put_tensor<T>(Checkpoint&, const std::string&, const BasicTensor<T>&); \
  template void get_tensor<T>(const Checkpoint&, const std::string&, BasicTensor<T>&); \
  template void put_params<T>(Checkpoint&, const nn::ParameterSet<T>&);              \
  template void get_params<T>(const Checkpoint&, nn::ParameterSet<T>&);              \
  template void put_adam<T>(Checkpoint&, optim::Adam<T>&);                           \
  template bool get_adam<T>(const Checkpoint&, optim::Adam<T>&);                     \
  template void put_autoencoder<T>(Checkpoint&, const autoencoder::Autoencoder<T>&); \
  template void get_autoencoder<T>(const Checkpoint&, autoencoder::Autoencoder<T>&); \
  template void put_prdad<T>(Checkpoint&, const model::PRDAD<T>&);                   \
  template void get_prdad<T>(const Checkpoint&, model::PRDAD<T>&);

PRDAD_INSTANTIATE(float)
PRDAD_INSTANTIATE(double)
#undef PRDAD_INSTANTIATE

}  // namespace prdad::cli
