#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gradcheck.hpp"
#include "prdad/errors.hpp"
#include "prdad/training.hpp"

using namespace prdad;
using namespace prdad::training;
using prdad::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

double value(ad::Tape<double>& t, ad::Var v) { return t.value(v).item(); }

template <typename F>
double eval(F&& f) {
  ad::Tape<double> t;
  return value(t, f(t));
}

}  // namespace

TEST_CASE("rotate_pi examples") {
  Tensor x({2, 2}, {1, 2, 3, 4});
  CHECK(ad::rotate_pi(x) == Tensor({2, 2}, {4, 3, 2, 1}));
  std::mt19937_64 rng(1);
  Tensor r = random_tensor({3, 5, 7}, rng);
  CHECK(ad::rotate_pi(ad::rotate_pi(r)) == r);
  Tensor sym({3, 3}, {1, 2, 3, 4, 5, 4, 3, 2, 1});
  CHECK(ad::rotate_pi(sym) == sym);
}

TEST_CASE("loss_mse_rot: zero cases and the two-branch example") {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({3, 1, 6, 6}, rng);
  CHECK(eval([&](auto& t) { return loss_mse_rot(t, t.constant(x), t.constant(x)); }) == 0.0);
  CHECK(eval([&](auto& t) {
          return loss_mse_rot(t, t.constant(x), t.constant(ad::rotate_pi(x)));
        }) == 0.0);
  const Tensor a({1, 2, 2}, {1, 0, 0, 0}), b({1, 2, 2}, {0, 0, 0, 2});
  CHECK(eval([&](auto& t) { return loss_mse_rot(t, t.constant(a), t.constant(b)); }) ==
        doctest::Approx(0.25));

  const Tensor xh = random_tensor({3, 1, 6, 6}, rng);
  const double l1 = eval([&](auto& t) { return loss_mse_rot(t, t.constant(x), t.constant(xh)); });
  const double l2 = eval([&](auto& t) {
    return loss_mse_rot(t, t.constant(x), t.constant(ad::rotate_pi(xh)));
  });
  CHECK(l1 == l2);
  CHECK(l1 > 0);

  ad::Tape<double> t;
  CHECK_THROWS_AS(loss_mse_rot(t, t.constant(Tensor({1, 2, 2})), t.constant(Tensor({1, 3, 3}))),
                  DimensionError);
}

TEST_CASE("loss_mag_cycle: zero cases and scaling") {
  std::mt19937_64 rng(3);
  const fourier::Padding pad{0.5};
  const Tensor x = random_tensor({2, 1, 8, 8}, rng);
  CHECK(eval([&](auto& t) { return loss_mag_cycle(t, t.constant(x), t.constant(x), pad); }) ==
        0.0);
  const double rot = eval([&](auto& t) {
    return loss_mag_cycle(t, t.constant(x), t.constant(ad::rotate_pi(x)), pad);
  });
  CHECK(rot <= 1e-9);

  // |F(2x)| = 2|F(x)|, so the loss is the mean squared unitary magnitude.
  const double twice = eval([&](auto& t) {
    return loss_mag_cycle(t, t.constant(x), t.constant(x * 2.0), pad);
  });
  const Tensor w = fourier::forward_model(x, pad);
  const double bins = 12.0 * 12.0;
  CHECK(twice == doctest::Approx(sum_squares(w) / bins / bins / 2.0).epsilon(1e-12));

  // Parseval: the unitary magnitude loss never exceeds the padded pixel MSE
  // scaled by the pad ratio.
  const Tensor y = random_tensor({2, 1, 8, 8}, rng);
  const double mag = eval([&](auto& t) { return loss_mag_cycle(t, t.constant(x), t.constant(y), pad); });
  const double mse = eval([&](auto& t) {
    return ad::mean(t, ad::square(t, ad::sub(t, t.constant(x), t.constant(y))));
  });
  CHECK(mag <= mse * 64.0 / 144.0 + 1e-12);
}

TEST_CASE("loss_sparse") {
  CHECK(eval([](auto& t) { return loss_sparse(t, t.constant(Tensor({2, 1, 4, 4}))); }) == 0.0);
  std::mt19937_64 rng(4);
  const Tensor r = random_tensor({2, 1, 4, 4}, rng);
  const double a = eval([&](auto& t) { return loss_sparse(t, t.constant(r)); });
  const double b = eval([&](auto& t) { return loss_sparse(t, t.constant(r * -3.0)); });
  CHECK(b == doctest::Approx(3 * a).epsilon(1e-14));
  Tensor one({1, 1, 4, 4});
  one[5] = -2.5;
  CHECK(eval([&](auto& t) { return loss_sparse(t, t.constant(one)); }) ==
        doctest::Approx(2.5 / 16));
}

TEST_CASE("loss_encode_rot for feature maps and packets") {
  std::mt19937_64 rng(5);
  const Tensor T = random_tensor({2, 3, 4, 4}, rng);
  const auto maps = map_rotation<double>();
  CHECK(eval([&](auto& t) { return loss_encode_rot(t, t.constant(T), t.constant(T), maps); }) ==
        0.0);
  // Every map rotated: the rotated branch matches exactly.
  CHECK(eval([&](auto& t) {
          return loss_encode_rot(t, t.constant(T), t.constant(ad::rotate_pi(T)), maps);
        }) == 0.0);

  const auto packets = packet_rotation<double>(0);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor({1, 1, 32, 32}, rng);
    const Tensor c = wavelet::analyze(x, 0, wavelet::Tree::Packet);
    ad::Tape<double> t;
    auto r = packets(t, t.constant(c));
    const Tensor want = wavelet::analyze(ad::rotate_pi(x), 0, wavelet::Tree::Packet);
    worst = std::max(worst, max_abs_diff(t.value(r), want));
  }
  CHECK(worst <= 1e-10);

  const Tensor x = random_tensor({2, 1, 8, 8}, rng);
  const Tensor c = wavelet::analyze(x, 0, wavelet::Tree::Packet);
  const Tensor cr = wavelet::analyze(ad::rotate_pi(x), 0, wavelet::Tree::Packet);
  CHECK(eval([&](auto& t) { return loss_encode_rot(t, t.constant(c), t.constant(cr), packets); }) <=
        1e-20);
}

TEST_CASE("total_loss: single weights, linearity and gradient linearity") {
  std::mt19937_64 rng(6);
  const fourier::Padding pad{0.5};
  const Tensor x = random_tensor({2, 1, 8, 8}, rng), xh = random_tensor({2, 1, 8, 8}, rng);
  const Tensor T = wavelet::analyze(x, 0, wavelet::Tree::Packet);
  const Tensor Th = random_tensor({2, 1, 8, 8}, rng);
  const auto rot = packet_rotation<double>(0);

  auto run = [&](const LossWeights& w, Tensor* grad_xh = nullptr) {
    ad::Tape<double> t;
    auto vxh = t.variable(xh);
    auto vTh = t.variable(Th);
    auto l = total_loss(t, t.constant(x), vxh, t.constant(T), vTh, w, pad, rot);
    if (grad_xh) {
      t.backward(l.total);
      *grad_xh = t.grad(vxh) + t.grad(vTh);
    }
    return std::array<double, 5>{value(t, l.mse), value(t, l.mag), value(t, l.sparse),
                                 value(t, l.encode), value(t, l.total)};
  };
  auto only_mse = run({1, 0, 0, 0});
  CHECK(only_mse[4] == only_mse[0]);
  const LossWeights a{1, 0.1, 1e-4, 1}, b{0.5, 2, 0.3, 0.25};
  const LossWeights sum{a.mse + b.mse, a.mag + b.mag, a.sparse + b.sparse, a.encode + b.encode};
  auto la = run(a), lb = run(b), ls = run(sum);
  CHECK(ls[4] == doctest::Approx(la[4] + lb[4]).epsilon(1e-13));
  auto terms = la;
  CHECK(la[4] == doctest::Approx(terms[0] + 0.1 * terms[1] + 1e-4 * terms[2] + terms[3])
                     .epsilon(1e-13));

  Tensor ga, gb, gs;
  run(a, &ga);
  run(b, &gb);
  run(sum, &gs);
  CHECK(max_abs_diff(gs, ga + gb) <= 1e-12);

  // Rotating the prediction and the packet representation together leaves
  // every term unchanged.
  const Tensor xr = ad::rotate_pi(xh);
  const Tensor Tr = wavelet::analyze(ad::rotate_pi(wavelet::synthesize(Th, 0, wavelet::Tree::Packet)),
                                     0, wavelet::Tree::Packet);
  ad::Tape<double> t;
  auto l = total_loss(t, t.constant(x), t.constant(xr), t.constant(T), t.constant(Tr), a, pad, rot);
  CHECK(value(t, l.total) == doctest::Approx(la[4]).epsilon(1e-10));

  CHECK_THROWS_AS((LossWeights{0, 0, 0, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((LossWeights{1, -1, 0, 0}.validate()), ConfigError);
}

TEST_CASE("every loss matches central differences") {
  std::mt19937_64 rng(7);
  const fourier::Padding pad{0.5};
  int checked = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor x = random_tensor({2, 1, 4, 4}, rng);
    const Tensor xh = random_tensor({2, 1, 4, 4}, rng);
    const Tensor T = random_tensor({2, 1, 4, 4}, rng);
    prdad::testing::LossBuilder fs[4] = {
        [&](auto& t, const auto& v) { return loss_mse_rot(t, t.constant(x), v[0]); },
        [&](auto& t, const auto& v) { return loss_mag_cycle(t, t.constant(x), v[0], pad); },
        [&](auto& t, const auto& v) { return loss_sparse(t, v[0]); },
        [&](auto& t, const auto& v) {
          return loss_encode_rot(t, t.constant(T), v[0], packet_rotation<double>(0));
        }};
    for (auto& f : fs) {
      if (prdad::testing::kink_distance({xh}, f) < 1e-3) continue;
      CHECK(prdad::testing::gradcheck({xh}, f) <= 1e-4);
      ++checked;
    }
  }
  CHECK(checked >= 16);
}

TEST_CASE("adam: zero gradient, first step and determinism") {
  ad::Parameter<double> p("w", Tensor({3}, {1, 2, 3}));
  optim::Adam<double> adam({&p}, {});
  adam.step();
  CHECK(p.value == Tensor({3}, {1, 2, 3}));
  CHECK(adam.steps() == 1);

  ad::Parameter<double> q("w", Tensor({3}, {1, 2, 3}));
  q.grad = Tensor({3}, {0.5, -2, 7});
  optim::Adam<double> a2({&q}, {});
  a2.step();
  // m_hat = g and v_hat = g^2 after one step, so every coordinate moves by
  // lr * g / (|g| + eps).
  CHECK(q.value[0] == doctest::Approx(1 - 1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(q.value[1] == doctest::Approx(2 + 1e-3 * 2 / (2 + 1e-8)).epsilon(1e-12));
  CHECK(q.value[2] == doctest::Approx(3 - 1e-3).epsilon(1e-9));

  auto trajectory = [] {
    ad::Parameter<double> w("w", Tensor({2}, {0.3, -0.7}));
    optim::Adam<double> opt({&w}, {});
    for (int i = 0; i < 50; ++i) {
      w.grad = Tensor({2}, {2 * w.value[0] - 1, std::sin(w.value[1])});
      opt.step();
    }
    return w.value;
  };
  CHECK(trajectory() == trajectory());

  ad::Parameter<double> frozen("f", Tensor({1}, {5}));
  frozen.grad = Tensor({1}, {1});
  frozen.trainable = false;
  optim::Adam<double> a3({&frozen}, {});
  a3.step();
  CHECK(frozen.value[0] == 5);

  optim::AdamConfig bad;
  bad.lr = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.beta1 = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("training configuration is validated") {
  TrainConfig c;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(100), ConfigError);
  c.batch_size = 96;
  c.val_fraction = 0.05;
  CHECK_THROWS_AS(c.validate(100), ConfigError);
  c.batch_size = 95;
  CHECK_NOTHROW(c.validate(100));
  c.val_fraction = 1;
  CHECK_THROWS_AS(c.validate(100), ConfigError);
}

TEST_CASE("log rows are comma separated and free of wall time") {
  EpochLog e;
  e.epoch = 3;
  e.step = 40;
  e.total = 0.5;
  e.seconds = 12.5;
  const std::string row = log_row(e), header = log_header();
  CHECK(row.starts_with("3,40,"));
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
  CHECK(row.find("12.5") == std::string::npos);
}

namespace {

Tensor mnist_subset(std::size_t count) {
  const fs::path root = PRDAD_MNIST_DIR;
  REQUIRE_MESSAGE(fs::exists(root / "train-images-idx3-ubyte.gz"),
                  "MNIST files missing, run tools/fetch_mnist.sh");
  return data::load_dataset({"mnist", root, count, 1}, data::dataset_spec("mnist")).train;
}

}  // namespace

TEST_CASE("mnist smoke run: total loss falls over the epochs") {
  const Tensor imgs = mnist_subset(500);
  const auto spec = data::dataset_spec("mnist");
  model::PRDAD<float> net({}, 0);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.val_fraction = 0.1;
  optim::Adam<float> adam(net.parameters(), cfg.adam);
  auto logs = train_prdad(net, imgs, spec, cfg, adam);
  REQUIRE(logs.size() == 5);
  int falls = 0;
  for (std::size_t i = 1; i < logs.size(); ++i) {
    MESSAGE("epoch " << i << " total " << logs[i].total << " val mse " << logs[i].val_mse);
    falls += logs[i].total < logs[i - 1].total;
  }
  CHECK(falls >= 4 * 4 / 5);
  CHECK(logs.back().step == 5 * ((450 + 31) / 32));
}

TEST_CASE("encode loss alone reduces held-out representation error") {
  const Tensor imgs = mnist_subset(300);
  const auto spec = data::dataset_spec("mnist");
  model::PRDADConfig mc;
  mc.hidden = {256, 256, 256};
  model::PRDAD<double> net(mc, 1);
  Tensor held({50, 32, 32});
  std::copy_n(imgs.data() + 250 * 1024, 50 * 1024, held.data());
  Tensor train({250, 32, 32});
  std::copy_n(imgs.data(), 250 * 1024, train.data());
  auto encode_error = [&] {
    auto b = make_batch(net, data::normalize(held, spec.mu, spec.sigma));
    ad::Tape<double> t;
    auto o = net.forward(t, t.constant(b.omega), ad::Mode::Eval);
    return value(t, loss_encode_rot(t, t.constant(b.target), o.repr, packet_rotation<double>(0)));
  };
  const double before = encode_error();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.weights = {0, 0, 0, 1};
  cfg.val_fraction = 0;
  optim::Adam<double> adam(net.parameters(), cfg.adam);
  auto logs = train_prdad(net, train, spec, cfg, adam);
  const double after = encode_error();
  MESSAGE("held-out encode loss " << before << " -> " << after);
  CHECK(after < before);
  CHECK(std::isnan(logs.back().val_mse));
}

TEST_CASE("training twice from the same seed gives identical logs and weights") {
  const Tensor imgs = mnist_subset(96);
  const auto spec = data::dataset_spec("mnist");
  model::PRDADConfig mc;
  mc.hidden = {64, 64, 64};
  auto run = [&] {
    model::PRDAD<float> net(mc, 3);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 3;
    optim::Adam<float> adam(net.parameters(), cfg.adam);
    auto logs = train_prdad(net, imgs, spec, cfg, adam);
    std::string s;
    for (auto& l : logs) s += log_row(l) + "\n";
    return std::make_pair(s, net.mlp_params().find("mlp.layer4.weight")->value);
  };
  auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("divergence is reported") {
  const Tensor imgs = mnist_subset(64);
  const auto spec = data::dataset_spec("mnist");
  model::PRDADConfig mc;
  mc.hidden = {16, 16, 16};
  model::PRDAD<float> net(mc, 0);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.adam.lr = 1e30;
  cfg.val_fraction = 0;
  optim::Adam<float> adam(net.parameters(), cfg.adam);
  CHECK_THROWS_AS(train_prdad(net, imgs, spec, cfg, adam), DivergenceError);
}
