#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "gradcheck.hpp"
#include "prdad/autoencoder.hpp"
#include "prdad/errors.hpp"

using namespace prdad;
using namespace prdad::autoencoder;
using prdad::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

EncoderConfig tiny() {
  EncoderConfig c;
  c.input_size = 16;
  c.widths = {4, 8, 8};
  return c;
}

// Bright blobs on a dark field, a stand-in for digits.
Tensor blob_images(std::size_t count, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.3 * n, 0.7 * n), rad(0.1 * n, 0.25 * n);
  Tensor out({count, n, n});
  for (std::size_t k = 0; k < count; ++k) {
    const double cy = pos(rng), cx = pos(rng), r = rad(rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double d = std::hypot(i - cy, j - cx);
        out[(k * n + i) * n + j] = d < r ? 1.0 : 0.0;
      }
  }
  return out;
}

// Zero conv biases keep a zero input exactly zero through every block; with
// biases the constant maps leave rounding noise that batchnorm amplifies.
template <typename Net>
void zero_biases(Net& net, const std::string& keep = "") {
  for (auto* p : net.params().parameters())
    if (p->name.ends_with(".bias") && p->name != keep) p->value.fill(0.0);
}

data::AugmentationSpec plain_spec(std::size_t n) {
  auto s = data::dataset_spec("mnist");
  s.resize = n;
  return s;
}

template <typename T>
double mean_image_baseline(const BasicTensor<T>& x) {
  const std::size_t N = x.dim(0), per = x.size() / N;
  std::vector<double> mu(per);
  for (std::size_t i = 0; i < x.size(); ++i) mu[i % per] += x[i] / N;
  double e = 0;
  for (std::size_t i = 0; i < x.size(); ++i) e += (x[i] - mu[i % per]) * (x[i] - mu[i % per]);
  return e / x.size();
}

}  // namespace

TEST_CASE("encoder output is N maps of n/4 and names are unique") {
  Encoder<double> enc({}, 0);
  ad::Tape<double> t;
  std::mt19937_64 rng(1);
  auto r = enc.forward(t, t.constant(random_tensor({2, 1, 32, 32}, rng)), ad::Mode::Train);
  CHECK(t.value(r).shape() == Shape{2, 128, 8, 8});

  EncoderConfig big;
  big.input_size = 64;
  big.widths = {4, 8, 64};
  Encoder<double> e64(big, 0);
  ad::Tape<double> t2;
  auto r2 = e64.forward(t2, t2.constant(random_tensor({1, 1, 64, 64}, rng)), ad::Mode::Train);
  CHECK(t2.value(r2).shape() == Shape{1, 64, 16, 16});

  Autoencoder<double> ae({}, 0);
  std::set<std::string> names;
  for (auto* p : ae.parameters()) CHECK(names.insert(p->name).second);
  // conv (9 ci co + co) + bn (2 co) + prelu (1) per layer
  auto layer = [](std::size_t ci, std::size_t co) { return 9 * ci * co + co + 2 * co + 1; };
  const std::size_t enc_count = layer(1, 32) + layer(32, 32) + layer(32, 64) + layer(64, 64) +
                                layer(64, 128) + layer(128, 128);
  CHECK(ae.encoder.params().count() == enc_count);
  const std::size_t dec_count = layer(128, 64) + layer(64, 64) + layer(64, 32) + layer(32, 32) +
                                layer(32, 32) + layer(32, 32) + (9 * 32 + 1);
  CHECK(ae.decoder.params().count() == dec_count);
  MESSAGE("autoencoder parameters: " << ae.parameter_count());
}

TEST_CASE("input of the wrong size is refused") {
  Encoder<double> enc(tiny(), 0);
  ad::Tape<double> t;
  CHECK_THROWS_AS(enc.forward(t, t.constant(Tensor({1, 1, 12, 12})), ad::Mode::Eval),
                  DimensionError);
  Decoder<double> dec(tiny(), 0);
  CHECK_THROWS_AS(dec.forward(t, t.constant(Tensor({1, 8, 3, 3})), ad::Mode::Eval),
                  DimensionError);
  EncoderConfig odd;
  odd.input_size = 30;
  CHECK_THROWS_AS(odd.validate(), ConfigError);
}

TEST_CASE("zero input propagates to the last batchnorm shift") {
  Encoder<double> enc(tiny(), 3);
  zero_biases(enc);
  // Each batchnorm sees an all-zero map and emits its shift; with earlier
  // shifts at zero only the last one shows.
  auto* beta = enc.params().find("encoder.block3.conv2.bn.beta");
  REQUIRE(beta);
  beta->value.fill(0.5);
  ad::Tape<double> t;
  auto r = enc.forward(t, t.constant(Tensor({2, 1, 16, 16})), ad::Mode::Train);
  for (auto v : t.value(r).span()) CHECK(v == 0.5);

  Decoder<double> dec(tiny(), 4);
  zero_biases(dec, "decoder.out.bias");
  auto* bias = dec.params().find("decoder.out.bias");
  REQUIRE(bias);
  const double b = bias->value[0];
  ad::Tape<double> t2;
  auto y = dec.forward(t2, t2.constant(Tensor({2, 8, 4, 4})), ad::Mode::Train);
  CHECK(t2.value(y).shape() == Shape{2, 1, 16, 16});
  for (auto v : t2.value(y).span()) CHECK(v == b);
}

TEST_CASE("decode(encode(x)) keeps the image shape") {
  Autoencoder<double> ae({}, 0);
  std::mt19937_64 rng(2);
  ad::Tape<double> t;
  auto x = t.constant(random_tensor({3, 1, 32, 32}, rng));
  auto y = ae.decoder.forward(t, ae.encoder.forward(t, x, ad::Mode::Eval), ad::Mode::Eval);
  CHECK(t.value(y).shape() == t.value(x).shape());
}

TEST_CASE("ae_loss: zero case, pure MSE and the sparsity term") {
  Autoencoder<double> ae(tiny(), 5);
  zero_biases(ae.encoder);
  zero_biases(ae.decoder);
  ad::Tape<double> t;
  auto zero = t.constant(Tensor({2, 1, 16, 16}));
  auto l0 = ae_loss(t, ae, zero, 0.1, ad::Mode::Train);
  CHECK(t.value(l0.total).item() == 0.0);

  std::mt19937_64 rng(6);
  const Tensor xv = random_tensor({2, 1, 16, 16}, rng);
  ad::Tape<double> t2;
  auto x = t2.constant(xv);
  auto l = ae_loss(t2, ae, x, 0.0, ad::Mode::Eval);
  const auto& rec = t2.value(l.recon);
  double e = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) e += (rec[i] - xv[i]) * (rec[i] - xv[i]);
  CHECK(t2.value(l.total).item() == doctest::Approx(e / xv.size()).epsilon(1e-12));

  ad::Tape<double> t3;
  auto l3 = ae_loss(t3, ae, t3.constant(xv), 2.0, ad::Mode::Eval);
  double a = 0;
  for (auto v : t3.value(l3.repr).span()) a += std::abs(v);
  a /= t3.value(l3.repr).size();
  CHECK(t3.value(l3.total).item() == doctest::Approx(e / xv.size() + 2.0 * a).epsilon(1e-12));
}

TEST_CASE("ae_loss gradient matches finite differences on a tiny model") {
  EncoderConfig c;
  c.input_size = 4;
  c.widths = {2, 2, 3};
  Autoencoder<double> ae(c, 7);
  std::mt19937_64 rng(8);
  Tensor x = random_tensor({2, 1, 4, 4}, rng);
  auto f = [&](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
    return ae_loss(t, ae, v[0], 0.05, ad::Mode::Train).total;
  };
  CHECK(prdad::testing::kink_distance({x}, f) > 1e-4);
  CHECK(prdad::testing::gradcheck({x}, f) < 1e-4);
}

TEST_CASE("a large sparsity weight drives mean |activation| down") {
  Autoencoder<double> ae(tiny(), 9);
  optim::Adam<double> adam(ae.parameters(), {});
  const Tensor batch = blob_images(8, 16, 10).reshaped({8, 1, 16, 16});
  std::vector<double> l1;
  for (int step = 0; step < 100; ++step) {
    ad::Tape<double> t;
    auto l = ae_loss(t, ae, t.constant(batch), 10.0, ad::Mode::Train);
    l1.push_back(t.value(l.l1).item());
    t.backward(l.total);
    adam.step();
  }
  int rises = 0;
  for (std::size_t i = 1; i < l1.size(); ++i) rises += l1[i] > l1[i - 1];
  MESSAGE("mean |a|: " << l1.front() << " -> " << l1.back() << ", rises " << rises);
  CHECK(rises == 0);
  CHECK(l1.back() < 0.5 * l1.front());
}

TEST_CASE("active fraction") {
  Tensor r({2, 1, 2, 2}, {1.0, 0.05, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0});
  // sample 0: |a| > 0.1 for 1 and -0.5; sample 1 has no entry above 0
  CHECK(active_fraction(r, 0.1) == doctest::Approx(0.25));
}

TEST_CASE("training beats the mean image, is seeded and responds to lambda") {
  const Tensor train = blob_images(200, 16, 11), test = blob_images(50, 16, 12);
  const auto spec = plain_spec(16);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 20;
  cfg.lambda_sparse = 0;
  cfg.augment = false;
  auto run = [&](double lambda, std::uint64_t seed) {
    Autoencoder<double> ae(tiny(), seed);
    TrainConfig c = cfg;
    c.lambda_sparse = lambda;
    auto logs = train_autoencoder(ae, train, spec, c);
    return std::make_pair(std::move(ae), logs);
  };
  auto [ae, logs] = run(0.0, 1);
  REQUIRE(logs.size() == 5);
  const auto rec = reconstruct(ae, test, spec);
  const Tensor target = data::normalize(test, spec.mu, spec.sigma);
  double e = 0;
  for (std::size_t i = 0; i < target.size(); ++i) e += (rec[i] - target[i]) * (rec[i] - target[i]);
  e /= target.size();
  const double base = mean_image_baseline(target);
  MESSAGE("reconstruction MSE " << e << " vs mean image " << base);
  CHECK(e < base);

  auto again = run(0.0, 1).second;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    CHECK(again[i].loss == logs[i].loss);
    CHECK(again[i].l1 == logs[i].l1);
  }

  auto reg = run(1e-3, 1).second;
  CHECK(reg.back().l1 < logs.back().l1);

  auto strong = run(3e-1, 1).second;
  MESSAGE("active fraction lambda 0 / 1e-3 / 0.3: " << logs.back().active << " / "
                                                    << reg.back().active << " / "
                                                    << strong.back().active);
  CHECK(strong.back().active <= reg.back().active);
  CHECK(reg.back().active <= logs.back().active + 0.02);
}

TEST_CASE("eval mode is deterministic") {
  Autoencoder<double> ae(tiny(), 13);
  const Tensor imgs = blob_images(4, 16, 14);
  const auto spec = plain_spec(16);
  CHECK(reconstruct(ae, imgs, spec) == reconstruct(ae, imgs, spec));
  CHECK(encode(ae.encoder, imgs, spec) == encode(ae.encoder, imgs, spec));
}

TEST_CASE("training errors") {
  Autoencoder<float> ae(tiny(), 0);
  const auto spec = plain_spec(16);
  CHECK_THROWS_AS(train_autoencoder(ae, Tensor(), spec, {}), ContractError);
  const Tensor imgs = blob_images(8, 16, 15);
  TrainConfig big;
  big.batch_size = 9;
  CHECK_THROWS_AS(train_autoencoder(ae, imgs, spec, big), ConfigError);
  TrainConfig wild;
  wild.batch_size = 4;
  wild.epochs = 3;
  wild.adam.lr = 1e30;
  CHECK_THROWS_AS(train_autoencoder(ae, imgs, spec, wild), DivergenceError);
}

TEST_CASE("mnist: 200 images, 5 epochs beat the mean image") {
  const fs::path root = PRDAD_MNIST_DIR;
  REQUIRE_MESSAGE(fs::exists(root / "train-images-idx3-ubyte.gz"),
                  "MNIST files missing, run tools/fetch_mnist.sh");
  const auto spec = data::dataset_spec("mnist");
  auto ds = data::load_dataset({"mnist", root, 200, 100}, spec);
  Autoencoder<float> ae({}, 0);
  TrainConfig cfg;
  cfg.epochs = 5;
  train_autoencoder(ae, ds.train, spec, cfg);
  const auto rec = reconstruct(ae, ds.test, spec);
  const Tensor target = data::normalize(ds.test, spec.mu, spec.sigma);
  double e = 0;
  for (std::size_t i = 0; i < target.size(); ++i) e += (rec[i] - target[i]) * (rec[i] - target[i]);
  e /= target.size();
  const double base = mean_image_baseline(target);
  MESSAGE("mnist reconstruction MSE " << e << " vs mean image " << base);
  CHECK(e < base);
}
