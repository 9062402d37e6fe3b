#include "prdad/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "prdad/errors.hpp"

namespace prdad::data {

namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> read_all(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  int got;
  while ((got = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + got);
  const bool failed = got < 0;
  gzclose(f);
  if (failed) throw IoError("read error in " + path.string());
  return out;
}

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

// Parses the IDX header, checks the magic and returns dims plus payload offset.
std::pair<std::vector<std::size_t>, std::size_t> idx_header(const std::vector<unsigned char>& b,
                                                            std::uint32_t want_magic,
                                                            const fs::path& path) {
  if (b.size() < 4) throw FormatError(path.string() + ": file too short for an IDX header");
  const std::uint32_t magic = be32(b.data());
  if (magic != want_magic) {
    char msg[128];
    std::snprintf(msg, sizeof msg, ": IDX magic 0x%08x, expected 0x%08x", magic, want_magic);
    throw FormatError(path.string() + msg);
  }
  const std::size_t ndim = magic & 0xff;
  if (b.size() < 4 + 4 * ndim) throw FormatError(path.string() + ": truncated IDX header");
  std::vector<std::size_t> dims(ndim);
  std::size_t total = 1;
  constexpr std::size_t kMaxBytes = std::size_t{1} << 36;
  for (std::size_t i = 0; i < ndim; ++i) {
    dims[i] = be32(b.data() + 4 + 4 * i);
    if (dims[i] == 0) throw FormatError(path.string() + ": zero IDX dimension");
    if (dims[i] > kMaxBytes / total) throw FormatError(path.string() + ": IDX dimensions overflow");
    total *= dims[i];
  }
  const std::size_t offset = 4 + 4 * ndim;
  if (b.size() - offset < total) {
    throw FormatError(path.string() + ": truncated IDX payload, expected " + std::to_string(total) +
                      " bytes, found " + std::to_string(b.size() - offset));
  }
  return {dims, offset};
}

double sample_bilinear(const double* img, long H, long W, double y, double x) {
  // zero outside the pixel grid
  const long y0 = static_cast<long>(std::floor(y)), x0 = static_cast<long>(std::floor(x));
  const double fy = y - y0, fx = x - x0;
  auto px = [&](long r, long c) {
    return (r < 0 || c < 0 || r >= H || c >= W) ? 0.0 : img[r * W + c];
  };
  return (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
         fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p) { return uniform(rng, 0, 1) < p; }

void check_range(const std::optional<Range>& r, const char* name) {
  if (r && !(r->lo <= r->hi)) {
    throw ConfigError(std::string("augmentation ") + name + " range is not ordered");
  }
}

std::size_t plane_size(const Tensor& x, const char* op) {
  if (x.rank() != 2) throw DimensionError(std::string(op) + ": expected [H,W], got " + shape_str(x.shape()));
  return x.dim(0);
}

}  // namespace

Tensor load_idx(const fs::path& path) {
  const auto bytes = read_all(path);
  const auto [dims, off] = idx_header(bytes, 0x00000803, path);
  Tensor out(Shape{dims[0], dims[1], dims[2]});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bytes[off + i] / 255.0;
  return out;
}

std::vector<std::uint8_t> load_idx_labels(const fs::path& path) {
  const auto bytes = read_all(path);
  const auto [dims, off] = idx_header(bytes, 0x00000801, path);
  return {bytes.begin() + off, bytes.begin() + off + dims[0]};
}

Tensor read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw FormatError(path.string() + ": not a binary PGM");
  auto next_int = [&]() {
    long v = -1;
    while (in >> std::ws && in.peek() == '#') in.ignore(1 << 20, '\n');
    in >> v;
    return v;
  };
  const long w = next_int(), h = next_int(), maxv = next_int();
  if (w <= 0 || h <= 0 || maxv <= 0 || maxv > 65535) {
    throw FormatError(path.string() + ": bad PGM header");
  }
  in.get();
  const std::size_t bps = maxv > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w * h) * bps);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw FormatError(path.string() + ": truncated PGM payload");
  }
  Tensor img(Shape{static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = bps == 1 ? raw[i] : raw[2 * i] * 256.0 + raw[2 * i + 1];
    img[i] = v / static_cast<double>(maxv);
  }
  return img;
}

void write_pgm(const fs::path& path, const Tensor& image) {
  if (image.rank() != 2) throw DimensionError("write_pgm: expected [H,W], got " + shape_str(image.shape()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
  std::vector<unsigned char> raw(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    raw[i] = static_cast<unsigned char>(std::lround(std::clamp(image[i], 0.0, 1.0) * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

// Row-stochastic [out, in] matrix of footprint overlaps.
std::vector<double> area_weights(std::size_t in, std::size_t out) {
  std::vector<double> w(out * in, 0.0);
  const double step = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double a = i * step, b = (i + 1) * step;
    for (std::size_t k = static_cast<std::size_t>(a); k < in && k < b; ++k) {
      const double lo = std::max(a, double(k)), hi = std::min(b, double(k + 1));
      if (hi > lo) w[i * in + k] = (hi - lo) / step;
    }
  }
  return w;
}

Tensor resize_area(const Tensor& x, std::size_t height, std::size_t width) {
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  const auto wy = area_weights(H, height), wx = area_weights(W, width);
  Shape s = x.shape();
  s[s.size() - 2] = height;
  s[s.size() - 1] = width;
  Tensor y(s);
  const std::size_t planes = x.size() / (H * W);
  std::vector<double> rows(H * width);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* a = x.data() + p * H * W;
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t j = 0; j < width; ++j) {
        double acc = 0;
        for (std::size_t k = 0; k < W; ++k) acc += wx[j * W + k] * a[r * W + k];
        rows[r * width + j] = acc;
      }
    double* b = y.data() + p * height * width;
    for (std::size_t i = 0; i < height; ++i)
      for (std::size_t j = 0; j < width; ++j) {
        double acc = 0;
        for (std::size_t r = 0; r < H; ++r) acc += wy[i * H + r] * rows[r * width + j];
        b[i * width + j] = acc;
      }
  }
  return y;
}

}  // namespace

Tensor resize(const Tensor& x, std::size_t height, std::size_t width, ResizeMethod method) {
  if (x.rank() < 2) throw DimensionError("resize: rank below 2");
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
  if (H == height && W == width) return x;
  if (method == ResizeMethod::Area) return resize_area(x, height, width);
  Shape s = x.shape();
  s[s.size() - 2] = height;
  s[s.size() - 1] = width;
  Tensor y(s);
  const std::size_t planes = x.size() / (H * W);
  auto src = [](std::size_t i, std::size_t in, std::size_t out) {
    const double v = (i + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    return std::clamp(v, 0.0, static_cast<double>(in - 1));
  };
  for (std::size_t p = 0; p < planes; ++p) {
    const double* a = x.data() + p * H * W;
    double* b = y.data() + p * height * width;
    for (std::size_t i = 0; i < height; ++i) {
      const double sy = src(i, H, height);
      const std::size_t y0 = static_cast<std::size_t>(sy), y1 = std::min(y0 + 1, H - 1);
      const double fy = sy - y0;
      for (std::size_t j = 0; j < width; ++j) {
        const double sx = src(j, W, width);
        const std::size_t x0 = static_cast<std::size_t>(sx), x1 = std::min(x0 + 1, W - 1);
        const double fx = sx - x0;
        b[i * width + j] = (1 - fy) * ((1 - fx) * a[y0 * W + x0] + fx * a[y0 * W + x1]) +
                           fy * ((1 - fx) * a[y1 * W + x0] + fx * a[y1 * W + x1]);
      }
    }
  }
  return y;
}

Tensor center_crop(const Tensor& x) {
  const std::size_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1), s = std::min(H, W);
  if (H == W) return x;
  const std::size_t r0 = (H - s) / 2, c0 = (W - s) / 2, planes = x.size() / (H * W);
  Shape sh = x.shape();
  sh[sh.size() - 2] = s;
  sh[sh.size() - 1] = s;
  Tensor y(sh);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < s; ++i)
      std::copy_n(x.data() + p * H * W + (r0 + i) * W + c0, s, y.data() + p * s * s + i * s);
  return y;
}

Tensor normalize(const Tensor& x, double mu, double sigma) {
  Tensor y = x;
  for (auto& v : y.span()) v = (v - mu) / sigma;
  return y;
}

Tensor denormalize(const Tensor& x, double mu, double sigma) {
  Tensor y = x;
  for (auto& v : y.span()) v = v * sigma + mu;
  return y;
}

void AugmentationSpec::validate() const {
  if (resize == 0) throw ConfigError("augmentation resize must be positive");
  if (!(sigma > 0)) throw ConfigError("normalization sigma must be positive");
  if (!(pad_fraction >= 0)) throw ConfigError("pad fraction must be nonnegative");
  if (!(bernoulli >= 0 && bernoulli <= 1)) throw ConfigError("bernoulli probability outside [0,1]");
  check_range(rotation, "rotation");
  check_range(scaling, "scaling");
  check_range(gamma, "gamma");
  if (translation && (translation->lo < 0 || translation->hi >= 0.5)) {
    throw ConfigError("translation fractions must lie in [0, 0.5)");
  }
  if (scaling && scaling->lo <= 0) throw ConfigError("scaling range must be positive");
  if (gamma && gamma->lo <= 0) throw ConfigError("gamma range must be positive");
  if (blur) {
    if (blur->kernel % 2 == 0 || blur->kernel > resize) {
      throw ConfigError("blur kernel must be odd and no larger than the image");
    }
    if (!(blur->sigma.lo > 0 && blur->sigma.lo <= blur->sigma.hi)) {
      throw ConfigError("blur sigma range must be positive and ordered");
    }
  }
}

AugmentationSpec dataset_spec(const std::string& name) {
  AugmentationSpec s;
  s.translation = Range{0.025, 0.025};
  s.scaling = Range{0.9, 1.2};
  if (name == "mnist" || name == "emnist") return s;
  if (name == "kmnist") {
    s.bernoulli = 0.5;
    return s;
  }
  if (name == "fashion-mnist") {
    s.pad_fraction = 0.25;
    s.rotation = Range{1.0, 2.5};
    s.translation = Range{0.0125, 0.025};
    s.scaling = Range{0.95, 1.1};
    return s;
  }
  if (name == "celeba") {
    s.resize = 64;
    s.center_crop = true;
    s.mu = 0.5;
    s.sigma = 0.5;
    s.pad_fraction = 0.0;
    s.bernoulli = 0.5;
    s.hflip = true;
    s.blur = Blur{5, Range{0.5, 1.5}};
    s.gamma = Range{0.85, 1.125};
    return s;
  }
  throw ConfigError("unknown dataset '" + name + "'");
}

const std::vector<std::string>& dataset_names() {
  static const std::vector<std::string> names{"mnist", "emnist", "kmnist", "fashion-mnist", "celeba"};
  return names;
}

Tensor hflip(const Tensor& image) {
  const std::size_t H = image.dim(0), W = image.dim(1);
  Tensor y(image.shape());
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) y.at(i, j) = image.at(i, W - 1 - j);
  return y;
}

Tensor warp(const Tensor& image, double degrees, double scale, double shift_x, double shift_y) {
  plane_size(image, "warp");
  const long H = static_cast<long>(image.dim(0)), W = static_cast<long>(image.dim(1));
  const double cy = (H - 1) / 2.0, cx = (W - 1) / 2.0;
  const double th = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(th) / scale, s = std::sin(th) / scale;
  Tensor y(image.shape());
  for (long i = 0; i < H; ++i)
    for (long j = 0; j < W; ++j) {
      const double dy = i - cy - shift_y, dx = j - cx - shift_x;
      // inverse of rotate-then-scale: R(-th) / scale
      const double sx = c * dx + s * dy + cx, sy = -s * dx + c * dy + cy;
      y[static_cast<std::size_t>(i * W + j)] = sample_bilinear(image.data(), H, W, sy, sx);
    }
  return y;
}

Tensor gaussian_blur(const Tensor& image, std::size_t kernel, double sigma) {
  plane_size(image, "gaussian_blur");
  const std::size_t H = image.dim(0), W = image.dim(1);
  const long r = static_cast<long>(kernel / 2);
  std::vector<double> w(kernel);
  double tot = 0;
  for (long t = -r; t <= r; ++t) tot += w[t + r] = std::exp(-0.5 * t * t / (sigma * sigma));
  for (auto& v : w) v /= tot;
  auto clampi = [](long v, long n) { return std::clamp(v, 0L, n - 1); };
  Tensor tmp(image.shape()), y(image.shape());
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) {
      double s = 0;
      for (long t = -r; t <= r; ++t) s += w[t + r] * image.at(i, clampi(long(j) + t, W));
      tmp.at(i, j) = s;
    }
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) {
      double s = 0;
      for (long t = -r; t <= r; ++t) s += w[t + r] * tmp.at(clampi(long(i) + t, H), j);
      y.at(i, j) = s;
    }
  return y;
}

Tensor gamma_correct(const Tensor& image, double gamma) {
  Tensor y = image;
  for (auto& v : y.span()) v = std::pow(std::max(v, 0.0), gamma);
  return y;
}

Tensor augment(const Tensor& image, const AugmentationSpec& spec, std::mt19937_64& rng) {
  plane_size(image, "augment");
  const double p = spec.bernoulli;
  Tensor x = image;
  // Draw every gate and parameter in a fixed order so the stream consumed
  // does not depend on which transforms fire.
  const bool flip = coin(rng, p);
  const bool rot = coin(rng, p);
  const double angle = spec.rotation ? uniform(rng, spec.rotation->lo, spec.rotation->hi) : 0.0;
  const bool neg = coin(rng, 0.5);
  const bool move = coin(rng, p);
  const double tx = spec.translation ? uniform(rng, -spec.translation->lo, spec.translation->lo) : 0.0;
  const double ty = spec.translation ? uniform(rng, -spec.translation->hi, spec.translation->hi) : 0.0;
  const bool zoom = coin(rng, p);
  const double r = spec.scaling ? uniform(rng, spec.scaling->lo, spec.scaling->hi) : 1.0;
  const bool soften = coin(rng, p);
  const double bs = spec.blur ? uniform(rng, spec.blur->sigma.lo, spec.blur->sigma.hi) : 0.0;
  const bool tone = coin(rng, p);
  const double g = spec.gamma ? uniform(rng, spec.gamma->lo, spec.gamma->hi) : 1.0;

  if (spec.hflip && flip) x = hflip(x);
  const double deg = (spec.rotation && rot) ? (neg ? -angle : angle) : 0.0;
  const double sx = (spec.translation && move) ? tx * static_cast<double>(x.dim(1)) : 0.0;
  const double sy = (spec.translation && move) ? ty * static_cast<double>(x.dim(0)) : 0.0;
  const double sc = (spec.scaling && zoom) ? r : 1.0;
  if (deg != 0 || sx != 0 || sy != 0 || sc != 1) x = warp(x, deg, sc, sx, sy);
  if (spec.blur && soften) x = gaussian_blur(x, spec.blur->kernel, bs);
  if (spec.gamma && tone) x = gamma_correct(x, g);
  return x;
}

Sample make_sample(const Tensor& x, const fourier::Padding& pad, const Encoder& encoder) {
  return Sample{fourier::forward_model(x, pad), x, encoder(x)};
}

namespace {

fs::path find_file(const fs::path& root, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    for (const char* ext : {"", ".gz"}) {
      fs::path p = root / (n + ext);
      if (fs::exists(p)) return p;
    }
  }
  throw IoError("none of the expected files (" + names.front() + "[.gz], ...) exist under " +
                root.string());
}

Tensor transpose_planes(const Tensor& x) {
  const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2);
  Tensor y(Shape{N, W, H});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) y[(n * W + j) * H + i] = x[(n * H + i) * W + j];
  return y;
}

Tensor take_first(const Tensor& x, std::size_t limit) {
  if (limit == 0 || limit >= x.dim(0)) return x;
  std::vector<std::size_t> idx(limit);
  std::iota(idx.begin(), idx.end(), 0);
  return gather(x, idx);
}

Tensor load_pgm_folder(const fs::path& dir, std::size_t limit, const AugmentationSpec& spec) {
  if (!fs::is_directory(dir)) throw IoError("no such directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (limit && files.size() > limit) files.resize(limit);
  if (files.empty()) throw IoError("no .pgm files in " + dir.string());
  const std::size_t n = spec.resize;
  Tensor out(Shape{files.size(), n, n});
  for (std::size_t k = 0; k < files.size(); ++k) {
    Tensor img = read_pgm(files[k]);
    if (spec.center_crop) img = center_crop(img);
    img = resize(img, n, n, spec.resize_method);
    std::copy_n(img.data(), n * n, out.data() + k * n * n);
  }
  return out;
}

Tensor prepare(Tensor x, const AugmentationSpec& spec) {
  if (spec.center_crop) x = center_crop(x);
  return resize(x, spec.resize, spec.resize, spec.resize_method);
}

}  // namespace

Dataset load_dataset(const DatasetSource& src, const AugmentationSpec& spec) {
  Dataset d;
  d.name = src.name;
  if (src.name == "celeba") {
    d.train = load_pgm_folder(src.root / "train", src.train_limit, spec);
    d.test = load_pgm_folder(src.root / "test", src.test_limit, spec);
    return d;
  }
  std::vector<std::string> train_names{"train-images-idx3-ubyte", "train-images.idx3-ubyte"};
  std::vector<std::string> test_names{"t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"};
  const bool emnist = src.name == "emnist";
  if (emnist) {
    train_names = {"emnist-balanced-train-images-idx3-ubyte"};
    test_names = {"emnist-balanced-test-images-idx3-ubyte"};
  } else if (src.name != "mnist" && src.name != "fashion-mnist" && src.name != "kmnist") {
    throw ConfigError("unknown dataset '" + src.name + "'");
  }
  Tensor train = take_first(load_idx(find_file(src.root, train_names)), src.train_limit);
  Tensor test = take_first(load_idx(find_file(src.root, test_names)), src.test_limit);
  // EMNIST stores images transposed relative to MNIST.
  if (emnist) {
    train = transpose_planes(train);
    test = transpose_planes(test);
  }
  d.train = prepare(std::move(train), spec);
  d.test = prepare(std::move(test), spec);
  return d;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double fraction,
                                                                            std::uint64_t seed) {
  if (!(fraction >= 0 && fraction < 1)) throw ConfigError("validation fraction must lie in [0,1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates written out so the permutation does not depend on the
  // standard library's shuffle.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(idx[i - 1], idx[j]);
  }
  const auto held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> val(idx.begin(), idx.begin() + held);
  std::vector<std::size_t> train(idx.begin() + held, idx.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {train, val};
}

Tensor gather(const Tensor& images, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw ContractError("gather: empty index list");
  const std::size_t row = images.size() / images.dim(0);
  Shape s = images.shape();
  s[0] = idx.size();
  Tensor out(s);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= images.dim(0)) throw DimensionError("gather: index out of range");
    std::copy_n(images.data() + idx[k] * row, row, out.data() + k * row);
  }
  return out;
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ epoch) ^ index);
}

Tensor augmented_batch(const Tensor& images, const std::vector<std::size_t>& idx,
                       const AugmentationSpec& spec, std::uint64_t seed, std::uint64_t epoch,
                       bool enabled) {
  Tensor batch = gather(images, idx);
  if (!enabled) return batch;
  const std::size_t n = images.dim(1), plane = n * images.dim(2);
  const long B = static_cast<long>(idx.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < B; ++k) {
    std::mt19937_64 rng(sample_seed(seed, epoch, idx[k]));
    Tensor img(Shape{images.dim(1), images.dim(2)});
    std::copy_n(batch.data() + k * plane, plane, img.data());
    Tensor out = augment(img, spec, rng);
    std::copy_n(out.data(), plane, batch.data() + k * plane);
  }
  return batch;
}

}  // namespace prdad::data
