#include <doctest.h>

#include <random>
#include <set>

#include "gradcheck.hpp"
#include "prdad/errors.hpp"
#include "prdad/prdad.hpp"

using namespace prdad;
using namespace prdad::model;
using prdad::testing::random_tensor;

namespace {

PRDADConfig small_packet() {
  PRDADConfig c;
  c.image_size = 8;
  c.hidden = {16, 16, 16};
  return c;
}

PRDADConfig small_trained() {
  PRDADConfig c;
  c.image_size = 8;
  c.hidden = {16, 16, 16};
  c.decoder = DecoderKind::Trained;
  c.encoder.input_size = 8;
  c.encoder.widths = {2, 3, 4};
  return c;
}

std::unique_ptr<autoencoder::Autoencoder<double>> make_ae(const PRDADConfig& c) {
  return std::make_unique<autoencoder::Autoencoder<double>>(c.encoder, 11);
}

Tensor omega_batch(std::size_t B, const PRDADConfig& c, std::mt19937_64& rng) {
  Tensor x = random_tensor({B, c.image_size, c.image_size}, rng);
  return fourier::forward_model(x, c.padding);
}

}  // namespace

TEST_CASE("mlp widths follow the magnitude grid and the representation") {
  PRDADConfig c;
  c.decoder = DecoderKind::Trained;
  c.hidden = {8, 8, 8};  // keep the test light; only the end widths matter here
  PRDAD<float> net(c, 0, std::make_unique<autoencoder::Autoencoder<float>>(c.encoder, 0));
  CHECK(c.magnitude_size() == 48);
  auto& ps = net.mlp_params();
  CHECK(ps.find("mlp.layer1.weight")->value.shape() == Shape{8, 2304});
  CHECK(ps.find("mlp.layer4.weight")->value.shape() == Shape{8192, 8});
  CHECK(c.representation_shape(2) == Shape{2, 128, 8, 8});

  PRDADConfig d;
  CHECK(d.hidden == std::array<std::size_t, 3>{2048, 4096, 4096});
  CHECK(d.representation_numel() == 1024);
  CHECK(d.enhancement() == 0);
  CHECK(c.enhancement() == 3);
}

TEST_CASE("zero magnitudes give the composed biases") {
  PRDAD<double> net(small_packet(), 1);
  ad::Tape<double> t;
  auto o = net.forward(t, t.constant(Tensor({1, 12, 12})), ad::Mode::Eval);
  // Hand evaluation of the four affine + PReLU layers on a zero input.
  auto& ps = net.mlp_params();
  Tensor h({16});
  for (std::size_t i = 0; i < 16; ++i) h[i] = ps.find("mlp.layer1.bias")->value[i];
  auto act = [&](Tensor v, const std::string& layer) {
    const double a = ps.find(layer + ".prelu")->value[0];
    for (auto& x : v.span()) x = x > 0 ? x : a * x;
    return v;
  };
  h = act(h, "mlp.layer1");
  for (int l = 2; l <= 4; ++l) {
    const std::string name = "mlp.layer" + std::to_string(l);
    const auto& W = ps.find(name + ".weight")->value;
    const auto& b = ps.find(name + ".bias")->value;
    Tensor y(b.shape());
    for (std::size_t j = 0; j < W.dim(0); ++j) {
      double s = b[j];
      for (std::size_t k = 0; k < W.dim(1); ++k) s += W.at(j, k) * h[k];
      y[j] = s;
    }
    h = act(y, name);
  }
  const auto& mlp = t.value(o.mlp);
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(mlp[i] == doctest::Approx(h[i]).epsilon(1e-12));
}

TEST_CASE("random init produces negative representation entries") {
  std::mt19937_64 rng(2);
  PRDAD<double> net(small_packet(), 2);
  ad::Tape<double> t;
  auto o = net.forward(t, t.constant(omega_batch(4, net.config(), rng)), ad::Mode::Eval);
  int negative = 0;
  for (auto v : t.value(o.repr).span()) negative += v < 0;
  CHECK(negative > 0);
  CHECK(t.value(o.image).shape() == Shape{4, 1, 8, 8});
}

TEST_CASE("enhancement preserves shape and uses full-depth kernels") {
  auto c = small_trained();
  PRDAD<double> net(c, 3, make_ae(c));
  for (auto* p : net.enhancement_params().parameters())
    if (p->name.ends_with(".weight")) CHECK(p->value.shape() == Shape{4, 4, 3, 3});
  CHECK(net.enhancement_params().find("enhance.block3.conv2.weight"));
  std::mt19937_64 rng(4);
  ad::Tape<double> t;
  auto o = net.forward(t, t.constant(omega_batch(2, c, rng)), ad::Mode::Train);
  CHECK(t.value(o.repr).shape() == t.value(o.mlp).shape());
  CHECK(t.value(o.image).shape() == Shape{2, 1, 8, 8});

  auto c0 = c;
  c0.enhancement_blocks = 0;
  PRDAD<double> plain(c0, 3, make_ae(c0));
  ad::Tape<double> t2;
  auto o2 = plain.forward(t2, t2.constant(omega_batch(2, c, rng)), ad::Mode::Train);
  CHECK(o2.repr.id == o2.mlp.id);
}

TEST_CASE("packet decoder inverts packet analysis") {
  PRDAD<double> net(small_packet(), 5);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = random_tensor({3, 1, 8, 8}, rng);
    ad::Tape<double> t;
    auto y = net.decode(t, t.constant(net.target_representation(x)), ad::Mode::Eval);
    CHECK(max_abs_diff(t.value(y), x) < 1e-9);
  }
}

TEST_CASE("graph from magnitude to representation has no Fourier layer") {
  auto c = small_trained();
  PRDAD<double> net(c, 7, make_ae(c));
  std::mt19937_64 rng(8);
  ad::Tape<double> t;
  auto o = net.forward(t, t.constant(omega_batch(2, c, rng)), ad::Mode::Train);
  const std::set<ad::Op> allowed{ad::Op::Constant, ad::Op::Param,     ad::Op::Affine,
                                 ad::Op::PReLU,    ad::Op::Conv2d,    ad::Op::BatchNorm,
                                 ad::Op::Reshape};
  for (std::size_t i = 0; i <= o.repr.id; ++i) {
    INFO("node " << i << " op " << ad::op_name(t.node(i).op));
    CHECK(allowed.count(t.node(i).op) == 1);
  }
}

TEST_CASE("mlp weights receive gradients that match finite differences") {
  auto c = small_packet();
  c.hidden = {4, 4, 4};
  c.image_size = 4;
  c.padding = fourier::Padding{0.5};
  PRDAD<double> net(c, 9);
  std::mt19937_64 rng(10);
  const Tensor om = omega_batch(2, c, rng);
  auto* W = net.mlp_params().find("mlp.layer2.weight");
  const Tensor w0 = W->value;
  // Differentiate with respect to one layer's weights by routing them in as
  // a test input.
  auto f = [&](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
    W->value = t.value(v[0]);
    auto o = net.forward(t, t.constant(om), ad::Mode::Train);
    return ad::sum(t, ad::square(t, o.image));
  };
  ad::Tape<double> t;
  auto o = net.forward(t, t.constant(om), ad::Mode::Train);
  t.backward(ad::sum(t, ad::square(t, o.image)));
  double g2 = 0;
  for (auto v : W->grad.span()) g2 += v * v;
  CHECK(g2 > 0);
  // Central differences on the loss as a function of W.
  const double eps = 1e-6;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < w0.size(); ++i) {
    Tensor wp = w0, wm = w0;
    wp[i] += eps;
    wm[i] -= eps;
    const double up = prdad::testing::eval_loss({wp}, f);
    const double dn = prdad::testing::eval_loss({wm}, f);
    const double fd = (up - dn) / (2 * eps);
    num += (fd - W->grad[i]) * (fd - W->grad[i]);
    den += fd * fd;
  }
  W->value = w0;
  CHECK(std::sqrt(num / den) < 1e-5);
}

TEST_CASE("decoder fine-tuning toggles decoder gradients") {
  auto c = small_trained();
  PRDAD<double> net(c, 12, make_ae(c));
  std::mt19937_64 rng(13);
  const Tensor om = omega_batch(3, c, rng);
  auto decoder_grad = [&]() {
    ad::Tape<double> t;
    auto o = net.forward(t, t.constant(om), ad::Mode::Train);
    t.backward(ad::sum(t, ad::square(t, o.image)));
    double g = 0;
    for (auto* p : net.autoencoder()->decoder.params().parameters())
      for (auto v : p->grad.span()) g += std::abs(v);
    return g;
  };
  CHECK(!net.decoder_finetune());
  CHECK(decoder_grad() == 0.0);
  net.set_decoder_finetune(true);
  net.set_decoder_finetune(true);
  CHECK(net.decoder_finetune());
  CHECK(decoder_grad() > 0.0);
  net.set_decoder_finetune(false);
  CHECK(decoder_grad() == 0.0);
  for (auto* p : net.autoencoder()->encoder.params().parameters()) CHECK(!p->trainable);
}

TEST_CASE("frozen decoder: an optimizer step changes only mlp and enhancement") {
  auto c = small_trained();
  PRDAD<double> net(c, 14, make_ae(c));
  std::vector<Tensor> before;
  for (auto* p : net.parameters()) before.push_back(p->value);
  optim::Adam<double> adam(net.parameters(), {});
  std::mt19937_64 rng(15);
  ad::Tape<double> t;
  auto o = net.forward(t, t.constant(omega_batch(3, c, rng)), ad::Mode::Train);
  t.backward(ad::sum(t, ad::square(t, o.image)));
  adam.step();
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const bool moved = !(params[i]->value == before[i]);
    INFO(params[i]->name);
    if (params[i]->name.starts_with("decoder."))
      CHECK(!moved);
    else
      CHECK(moved);
  }
}

TEST_CASE("eval forward is deterministic and shapes are checked") {
  auto c = small_trained();
  PRDAD<double> net(c, 16, make_ae(c));
  std::mt19937_64 rng(17);
  const Tensor om = omega_batch(2, c, rng);
  ad::Tape<double> a, b;
  auto oa = net.forward(a, a.constant(om), ad::Mode::Eval);
  auto ob = net.forward(b, b.constant(om), ad::Mode::Eval);
  CHECK(a.value(oa.image) == b.value(ob.image));
  ad::Tape<double> bad;
  CHECK_THROWS_AS(net.forward(bad, bad.constant(Tensor({2, 10, 10})), ad::Mode::Eval),
                  DimensionError);
}

TEST_CASE("configuration errors") {
  auto c = small_trained();
  CHECK_THROWS_AS(PRDAD<double>(c, 0), ConfigError);
  CHECK_THROWS_AS(PRDAD<double>(small_packet(), 0, make_ae(c)), ConfigError);
  auto p = small_packet();
  p.image_size = 12;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = small_packet();
  p.packet_depth = 4;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = small_packet();
  p.finetune_fraction = 0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  auto m = small_trained();
  m.encoder.input_size = 16;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("magnitude input scaling and log option") {
  auto c = small_packet();
  PRDAD<double> net(c, 18);
  Tensor om = Tensor::full({1, 12, 12}, 24.0);
  auto in = net.prepare_input(om);
  CHECK(in.shape() == Shape{1, 144});
  CHECK(in[0] == doctest::Approx(2.0));
  c.input = MagnitudeInput::Log1p;
  c.input_scale = 0.5;
  PRDAD<double> lg(c, 18);
  CHECK(lg.prepare_input(om)[0] == doctest::Approx(std::log1p(12.0)));
}
