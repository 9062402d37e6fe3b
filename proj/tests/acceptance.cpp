// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.
//
//   acceptance [--only 1,2,...] [--cli PATH] [--work DIR] [--golden DIR]
//
// Criteria 6, 7 and 9 read MNIST through the configs in configs/, so the
// working directory must be the source tree. Every tolerance is pinned here
// and nowhere else.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "figures.hpp"
#include "gradcheck.hpp"
#include "prdad/classical.hpp"
#include "prdad/data.hpp"
#include "prdad/fourier.hpp"
#include "prdad/metrics.hpp"
#include "prdad/ops.hpp"
#include "prdad/training.hpp"
#include "prdad/wavelet.hpp"

namespace fs = std::filesystem;
using namespace prdad;
using prdad::testing::LossBuilder;
using prdad::testing::random_tensor;

namespace tol {
constexpr double kRoundTrip = 1e-10;
constexpr double kParseval = 1e-9;
constexpr double kFrame = 1e-9;
constexpr double kWaveletSeconds = 10;
constexpr double kDftRelative = 1e-10;
constexpr double kMagRotation = 1e-9;
constexpr double kDftSeconds = 5;
constexpr double kFdStep = 1e-5;
constexpr double kFdRelative = 1e-4;
constexpr int kFdPoints = 100;
constexpr double kKinkMargin = 1e-3;
constexpr double kGradSeconds = 60;
constexpr double kMagCycleRotation = 1e-9;
constexpr double kReprRotation = 1e-10;
// Residual increases beyond this count as increases; it only absorbs the
// last bits of the FFT round trip.
constexpr double kResidualSlack = 1e-12;
constexpr double kFixedPoint = 1e-12;
constexpr double kAeRatio = 5;
constexpr double kAeActive = 0.25;
constexpr double kAeSeconds = 30 * 60;
constexpr double kDeskMse = 0.03;
constexpr double kDeskSsim = 0.75;
constexpr double kDeskMargin = 0.2;
constexpr double kSsimSelf = 1e-12;
constexpr double kPsnr = 0.01;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [fails]");
  }
};

template <typename... A>
std::string fmt(const char* f, A... args) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Quadruple loop straight from the definition of the DFT.
fourier::ComplexSpectrum direct_dft(const Tensor& x) {
  const std::size_t H = x.dim(0), W = x.dim(1);
  fourier::ComplexSpectrum s{Tensor({H, W}), Tensor({H, W})};
  const double tau = 2 * std::numbers::pi;
  for (std::size_t u = 0; u < H; ++u)
    for (std::size_t v = 0; v < W; ++v) {
      std::complex<double> acc = 0;
      for (std::size_t j = 0; j < H; ++j)
        for (std::size_t k = 0; k < W; ++k) {
          const double a = -tau * (double(u * j) / H + double(v * k) / W);
          acc += x.at(j, k) * std::complex<double>(std::cos(a), std::sin(a));
        }
      s.real.at(u, v) = acc.real();
      s.imag.at(u, v) = acc.imag();
    }
  return s;
}

// --- 1 -----------------------------------------------------------------------

Outcome transforms() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double rt = 0, parseval = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Tensor x = random_tensor({32, 32}, rng);
    const double nx = std::sqrt(sum_squares(x));
    for (std::size_t d = 1; d <= wavelet::full_depth(32); ++d)
      for (auto tree : {wavelet::Tree::Packet, wavelet::Tree::Wavelet}) {
        const auto c = wavelet::packet_analysis(x, d, tree);
        rt = std::max(rt, max_abs_diff(wavelet::packet_synthesis(c), x));
        parseval = std::max(parseval, std::abs(std::sqrt(sum_squares(c.data)) - nx) / nx);
      }
  }
  const auto fb = wavelet::frame_bounds_estimate(
      [](const Tensor& a) { return wavelet::synthesize(a, 5, wavelet::Tree::Packet); },
      Shape{32, 32}, 1000, 101);
  const double secs = seconds_since(t0);
  o.require(rt <= tol::kRoundTrip, fmt("round trip %.2e <= %.0e", rt, tol::kRoundTrip));
  o.require(parseval <= tol::kParseval, fmt("Parseval %.2e <= %.0e", parseval, tol::kParseval));
  const double fe = std::max(std::abs(fb.lower - 1), std::abs(fb.upper - 1));
  o.require(fe <= tol::kFrame, fmt("frame bounds A=B=1 within %.2e <= %.0e", fe, tol::kFrame));
  o.require(secs < tol::kWaveletSeconds, fmt("%.2f s < %.0f s", secs, tol::kWaveletSeconds));
  return o;
}

// --- 2 -----------------------------------------------------------------------

Outcome dft() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(202);
  double rel = 0, rot = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = random_tensor({8, 8}, rng);
    const auto fast = fourier::dft2(x);
    const auto ref = direct_dft(x);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double dr = fast.real[i] - ref.real[i], di = fast.imag[i] - ref.imag[i];
      num += dr * dr + di * di;
      den += ref.real[i] * ref.real[i] + ref.imag[i] * ref.imag[i];
    }
    rel = std::max(rel, std::sqrt(num / den));
    rot = std::max(rot, max_abs_diff(fourier::magnitude(fourier::dft2(ad::rotate_pi(x))),
                                     fourier::magnitude(fast)));
  }
  // The same invariance through the padded forward model of a 32 x 32 image.
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = random_tensor({32, 32}, rng, 0, 1);
    rot = std::max(rot, max_abs_diff(fourier::forward_model(ad::rotate_pi(x), 0.5),
                                     fourier::forward_model(x, 0.5)));
  }
  const double secs = seconds_since(t0);
  o.require(rel <= tol::kDftRelative, fmt("relative error %.2e <= %.0e", rel, tol::kDftRelative));
  o.require(rot <= tol::kMagRotation,
            fmt("magnitude rotation gap %.2e <= %.0e", rot, tol::kMagRotation));
  o.require(secs < tol::kDftSeconds, fmt("%.2f s < %.0f s", secs, tol::kDftSeconds));
  return o;
}

// --- 3 -----------------------------------------------------------------------

// Scalar probe sum(y * w) with w fixed by the shape of y.
ad::Var contract(ad::Tape<double>& t, ad::Var y) {
  std::mt19937_64 rng(t.value(y).size());
  return ad::sum(t, ad::mul(t, y, t.constant(random_tensor(t.value(y).shape(), rng))));
}

struct GradCase {
  std::string name;
  std::function<std::vector<Tensor>(std::mt19937_64&)> inputs;
  LossBuilder f;
};

std::vector<GradCase> grad_cases() {
  using V = std::vector<ad::Var>;
  using T3 = ad::Tape<double>;
  auto u = [](Shape s) {
    return [s](std::mt19937_64& r) { return std::vector<Tensor>{random_tensor(s, r)}; };
  };
  auto u2 = [](Shape a, Shape b) {
    return [a, b](std::mt19937_64& r) {
      return std::vector<Tensor>{random_tensor(a, r), random_tensor(b, r)};
    };
  };
  // Fixed random matrix for the generic linear map.
  auto matrix = [] {
    std::mt19937_64 r(303);
    return random_tensor({6, 10}, r);
  }();
  auto apply = [](const Tensor& M, const Tensor& x, bool transpose) {
    const std::size_t R = M.dim(0), C = M.dim(1);
    Tensor y({transpose ? C : R});
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t j = 0; j < C; ++j) {
        if (transpose)
          y[j] += M.at(i, j) * x[i];
        else
          y[i] += M.at(i, j) * x[j];
      }
    return y;
  };
  const fourier::Padding pad{0.5};
  const Tensor target = [] {
    std::mt19937_64 r(304);
    return random_tensor({2, 1, 4, 4}, r);
  }();
  return {
      {"affine", [](auto& r) {
         return std::vector<Tensor>{random_tensor({3, 4}, r), random_tensor({5, 4}, r),
                                    random_tensor({5}, r)};
       },
       [](T3& t, const V& v) { return contract(t, ad::affine(t, v[0], v[1], v[2])); }},
      {"conv2d", [](auto& r) {
         return std::vector<Tensor>{random_tensor({2, 2, 5, 5}, r),
                                    random_tensor({3, 2, 3, 3}, r), random_tensor({3}, r)};
       },
       [](T3& t, const V& v) { return contract(t, ad::conv2d(t, v[0], v[1], v[2])); }},
      {"prelu", [](auto& r) {
         return std::vector<Tensor>{random_tensor({2, 6}, r), random_tensor({1}, r, 0, 0.5)};
       },
       [](T3& t, const V& v) { return contract(t, ad::prelu(t, v[0], v[1])); }},
      {"relu", u({2, 6}), [](T3& t, const V& v) { return contract(t, ad::relu(t, v[0])); }},
      {"batchnorm2d", [](auto& r) {
         return std::vector<Tensor>{random_tensor({3, 2, 2, 2}, r), random_tensor({2}, r),
                                    random_tensor({2}, r)};
       },
       [](T3& t, const V& v) {
         ad::BatchNormState<double> st(2);
         return contract(t, ad::batchnorm2d(t, v[0], v[1], v[2], st, ad::Mode::Train));
       }},
      {"avgpool2", u({2, 1, 4, 4}),
       [](T3& t, const V& v) { return contract(t, ad::avgpool2(t, v[0])); }},
      {"upsample_bilinear2", u({2, 1, 3, 3}),
       [](T3& t, const V& v) { return contract(t, ad::upsample_bilinear2(t, v[0])); }},
      {"add", u2({3, 4}, {3, 4}),
       [](T3& t, const V& v) { return contract(t, ad::add(t, v[0], v[1])); }},
      {"sub", u2({3, 4}, {3, 4}),
       [](T3& t, const V& v) { return contract(t, ad::sub(t, v[0], v[1])); }},
      {"mul", u2({3, 4}, {3, 4}),
       [](T3& t, const V& v) { return contract(t, ad::mul(t, v[0], v[1])); }},
      {"scale", u({3, 4}), [](T3& t, const V& v) { return contract(t, ad::scale(t, v[0], 1.7)); }},
      {"square", u({3, 4}), [](T3& t, const V& v) { return contract(t, ad::square(t, v[0])); }},
      {"abs", u({3, 4}), [](T3& t, const V& v) { return contract(t, ad::abs(t, v[0])); }},
      {"sum", u({3, 4}),
       [](T3& t, const V& v) { return ad::sum(t, ad::square(t, ad::sum(t, v[0]))); }},
      {"mean", u({3, 4}),
       [](T3& t, const V& v) { return ad::sum(t, ad::square(t, ad::mean(t, v[0]))); }},
      {"sum_per_sample", u({3, 2, 2}),
       [](T3& t, const V& v) { return contract(t, ad::sum_per_sample(t, v[0])); }},
      {"minimum", u2({3, 4}, {3, 4}),
       [](T3& t, const V& v) { return contract(t, ad::minimum(t, v[0], v[1])); }},
      {"reshape", u({3, 4}),
       [](T3& t, const V& v) { return contract(t, ad::reshape(t, v[0], Shape{2, 6})); }},
      {"rotate_pi", u({2, 3, 4}),
       [](T3& t, const V& v) { return contract(t, ad::rotate_pi(t, v[0])); }},
      {"concat", u2({2, 3}, {1, 3}),
       [](T3& t, const V& v) { return contract(t, ad::concat(t, {v[0], v[1]})); }},
      {"linear_map", u({10}),
       [=](T3& t, const V& v) {
         return contract(t, ad::linear_map<double>(
                                t, v[0], [=](const Tensor& x) { return apply(matrix, x, false); },
                                [=](const Tensor& g) { return apply(matrix, g, true); }));
       }},
      {"zero_pad", u({2, 5, 5}),
       [=](T3& t, const V& v) { return contract(t, fourier::zero_pad(t, v[0], pad)); }},
      {"dft2", u({2, 4, 6}),
       [](T3& t, const V& v) { return contract(t, fourier::dft2(t, v[0])); }},
      {"magnitude", u({2, 5, 4}),
       [](T3& t, const V& v) {
         return contract(t, fourier::magnitude(t, fourier::dft2(t, v[0])));
       }},
      {"packet_analysis", u({2, 1, 8, 8}),
       [](T3& t, const V& v) {
         return contract(t, wavelet::packet_analysis(t, v[0], 3, wavelet::Tree::Packet));
       }},
      {"packet_synthesis", u({2, 1, 8, 8}),
       [](T3& t, const V& v) {
         return contract(t, wavelet::packet_synthesis(t, v[0], 3, wavelet::Tree::Wavelet));
       }},
      {"loss_mse_rot", u({2, 1, 4, 4}),
       [=](T3& t, const V& v) { return training::loss_mse_rot(t, t.constant(target), v[0]); }},
      {"loss_mag_cycle", u({2, 1, 4, 4}),
       [=](T3& t, const V& v) {
         return training::loss_mag_cycle(t, t.constant(target), v[0], pad);
       }},
      {"loss_sparse", u({2, 1, 4, 4}),
       [](T3& t, const V& v) { return training::loss_sparse(t, v[0]); }},
      {"loss_encode_rot (packets)", u({2, 1, 4, 4}),
       [=](T3& t, const V& v) {
         return training::loss_encode_rot(t, t.constant(target), v[0],
                                          training::packet_rotation<double>(0));
       }},
      {"loss_encode_rot (maps)", u({2, 3, 4, 4}),
       [](T3& t, const V& v) {
         std::mt19937_64 r(305);
         return training::loss_encode_rot(t, t.constant(random_tensor({2, 3, 4, 4}, r)), v[0],
                                          training::map_rotation<double>());
       }},
  };
}

Outcome gradients() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(303);
  double worst = 0;
  std::string worst_name;
  int short_cases = 0;
  const auto cases = grad_cases();
  for (const auto& c : cases) {
    int checked = 0;
    for (int attempt = 0; checked < tol::kFdPoints && attempt < 20 * tol::kFdPoints; ++attempt) {
      const auto in = c.inputs(rng);
      if (prdad::testing::kink_distance(in, c.f) < tol::kKinkMargin) continue;
      const double e = prdad::testing::gradcheck(in, c.f, tol::kFdStep);
      if (!(e <= worst)) {
        worst = e;
        worst_name = c.name;
      }
      ++checked;
    }
    if (checked < tol::kFdPoints) {
      ++short_cases;
      o.require(false, c.name + " only " + std::to_string(checked) + " points");
    }
  }
  const double secs = seconds_since(t0);
  o.require(short_cases == 0, std::to_string(cases.size()) + " primitives and losses at " +
                                  std::to_string(tol::kFdPoints) + " points each");
  o.require(worst <= tol::kFdRelative,
            fmt("worst relative error %.2e <= %.0e", worst, tol::kFdRelative) + " (" +
                worst_name + ")");
  o.require(secs < tol::kGradSeconds, fmt("%.1f s < %.0f s", secs, tol::kGradSeconds));
  return o;
}

// --- 4 -----------------------------------------------------------------------

Outcome invariances() {
  Outcome o;
  std::mt19937_64 rng(404);
  const fourier::Padding pad{0.5};
  double mse = 0, mag = 0, repr = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = random_tensor({4, 1, 32, 32}, rng, 0, 1);
    ad::Tape<double> t;
    auto xv = t.constant(x), rv = t.constant(ad::rotate_pi(x));
    mse = std::max(mse, std::abs(t.value(training::loss_mse_rot(t, xv, rv)).item()));
    mag = std::max(mag, std::abs(t.value(training::loss_mag_cycle(t, xv, rv, pad)).item()));
    for (std::size_t depth = 1; depth <= 5; ++depth) {
      const Tensor c = wavelet::analyze(x, depth, wavelet::Tree::Packet);
      const auto rot = training::packet_rotation<double>(depth);
      const Tensor got = t.value(rot(t, t.constant(c)));
      const Tensor want = wavelet::analyze(ad::rotate_pi(x), depth, wavelet::Tree::Packet);
      repr = std::max(repr, max_abs_diff(got, want));
    }
  }
  o.require(mse == 0.0, fmt("loss_mse_rot(x, rot x) = %.1e (exactly 0)", mse));
  o.require(mag <= tol::kMagCycleRotation,
            fmt("loss_mag_cycle(x, rot x) = %.2e <= %.0e", mag, tol::kMagCycleRotation));
  o.require(repr <= tol::kReprRotation,
            fmt("packet rotate_repr gap %.2e <= %.0e", repr, tol::kReprRotation));
  return o;
}

// --- 5 -----------------------------------------------------------------------

Outcome classical_baseline() {
  Outcome o;
  const fourier::Padding pad{0.5};
  std::size_t increases = 0;
  double worst_inc = 0, fixed = 0, fixed_res = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(500 + seed);
    const Tensor img = random_tensor({16, 16}, rng, 0, 1);
    const Tensor truth = fourier::zero_pad(img, pad);
    const Tensor omega = fourier::magnitude(fourier::dft2(truth));
    classical::Constraints c;
    c.support = classical::support_mask(16, pad);
    const auto st =
        classical::error_reduction(omega, classical::random_phase_init(omega, seed), 200, c);
    for (std::size_t k = 1; k < st.residuals.size(); ++k) {
      const double inc = st.residuals[k] - st.residuals[k - 1];
      worst_inc = std::max(worst_inc, inc);
      increases += inc > tol::kResidualSlack;
    }
    const auto fp = classical::error_reduction(omega, truth, 200, c);
    fixed = std::max(fixed, max_abs_diff(fp.image(), truth));
    for (double r : fp.residuals) fixed_res = std::max(fixed_res, r);
  }
  o.require(increases == 0, fmt("%zu residual increases over 20 x 200 iterations "
                                "(largest step %.1e)",
                                increases, worst_inc));
  o.require(fixed <= tol::kFixedPoint,
            fmt("consistent start drifts %.1e <= %.0e", fixed, tol::kFixedPoint));
  o.require(fixed_res <= tol::kFixedPoint * 100,
            fmt("its residual stays at %.1e <= %.0e", fixed_res, tol::kFixedPoint * 100));
  return o;
}

// --- 6, 7, 9 -----------------------------------------------------------------

struct Env {
  fs::path work = "acceptance_runs";
  fs::path cli;
  fs::path golden;
};

int run_command(const std::string& cmd, const fs::path& config, const fs::path& out,
                const std::optional<fs::path>& checkpoint = std::nullopt) {
  cli::Options opt;
  opt.config = config;
  opt.out = out;
  opt.checkpoint = checkpoint;
  std::cout << "  running " << cmd << " with " << config.string() << std::endl;
  return cli::run(cmd, opt);
}

double csv_value(const fs::path& file, const std::string& column) {
  const auto cols = cli::read_csv_columns(file);
  const auto it = cols.find(column);
  if (it == cols.end() || it->second.empty()) return NAN;
  return it->second.back();
}

Outcome autoencoder_desk(const Env& env) {
  Outcome o;
  const fs::path out = env.work / "autoencoder";
  fs::remove_all(out);
  const auto t0 = std::chrono::steady_clock::now();
  const int rc = run_command("train-ae", "configs/mnist_ae.ini", out);
  const double secs = seconds_since(t0);
  o.require(rc == 0, "train-ae exit " + std::to_string(rc));
  if (rc != 0) return o;
  const fs::path rep = out / "ae_report.csv";
  const double ratio = csv_value(rep, "ratio"), active = csv_value(rep, "active_fraction");
  o.require(ratio >= tol::kAeRatio,
            fmt("mean-image MSE / test MSE = %.2f >= %.0f", ratio, tol::kAeRatio));
  o.require(active <= tol::kAeActive,
            fmt("active fraction %.3f <= %.2f", active, tol::kAeActive));
  o.require(secs < tol::kAeSeconds, fmt("%.0f s < %.0f s", secs, tol::kAeSeconds));
  return o;
}

Outcome prdad_desk(const Env& env) {
  Outcome o;
  const fs::path out = env.work / "prdad";
  const fs::path config = "configs/mnist_desk.ini";
  fs::remove_all(out);
  const auto t0 = std::chrono::steady_clock::now();
  int rc = run_command("train-prdad", config, out);
  o.require(rc == 0, "train-prdad exit " + std::to_string(rc));
  if (rc != 0) return o;
  rc = run_command("eval", config, out, out / cli::kPrdadCheckpoint);
  o.require(rc == 0, "eval exit " + std::to_string(rc));
  rc = rc ? rc : run_command("baseline", config, out);
  o.require(rc == 0, "baseline exit " + std::to_string(rc));
  if (!o.pass) return o;
  const double mse = csv_value(out / "eval" / "summary.csv", "mse");
  const double ssim = csv_value(out / "eval" / "summary.csv", "ssim");
  const double er = csv_value(out / "baseline" / "summary.csv", "ssim");
  o.require(mse <= tol::kDeskMse, fmt("test MSE %.4f <= %.2f", mse, tol::kDeskMse));
  o.require(ssim >= tol::kDeskSsim, fmt("test SSIM %.4f >= %.2f", ssim, tol::kDeskSsim));
  o.require(ssim - er >= tol::kDeskMargin,
            fmt("SSIM over error reduction (%.4f) by %.4f >= %.1f", er, ssim - er,
                tol::kDeskMargin));
  o.detail << "; " << static_cast<long>(seconds_since(t0)) << " s total";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) return {};
  return {std::istreambuf_iterator<char>(f), {}};
}

Outcome reproducibility(const Env& env) {
  Outcome o;
  if (env.cli.empty() || !fs::exists(env.cli)) {
    o.require(false, "CLI binary not found (pass --cli)");
    return o;
  }
  std::vector<fs::path> runs = {env.work / "repro_a", env.work / "repro_b"};
  for (const auto& r : runs) {
    fs::remove_all(r);
    const std::string cmd = "\"" + env.cli.string() +
                            "\" train-prdad --config configs/smoke.ini --seed 7 --workers 1 --out \"" +
                            r.string() + "\" > \"" + r.string() + ".stdout\" 2>&1";
    const int rc = std::system(cmd.c_str());
    o.require(rc == 0, "run " + r.filename().string() + " exit " + std::to_string(rc));
    if (rc != 0) return o;
  }
  std::size_t bytes = 0;
  for (const char* file : {cli::kPrdadCheckpoint, cli::kTrainLog}) {
    const std::string a = slurp(runs[0] / file), b = slurp(runs[1] / file);
    o.require(!a.empty() && a == b, std::string(file) + (a == b ? " identical" : " differs"));
    bytes += a.size();
  }
  o.detail << "; " << bytes << " bytes compared";
  return o;
}

// --- 8 -----------------------------------------------------------------------

std::optional<data::Range> json_range(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return data::Range{j[0].get<double>(), j[1].get<double>()};
}

Outcome table_fidelity(const Env& env) {
  Outcome o;
  std::ifstream f(env.golden / "table1.json");
  if (!f) {
    o.require(false, "golden table missing under " + env.golden.string());
    return o;
  }
  const auto golden = nlohmann::json::parse(f);
  std::size_t fields = 0, mismatches = 0;
  auto field = [&](bool ok, const std::string& what) {
    ++fields;
    if (!ok) {
      ++mismatches;
      o.require(false, what);
    }
  };
  for (const auto& [name, g] : golden.items()) {
    const auto s = data::dataset_spec(name);
    field(s.resize == g["resize"].get<std::size_t>(), name + ".resize");
    field(s.center_crop == g["center_crop"].get<bool>(), name + ".center_crop");
    field(s.mu == g["mu"].get<double>(), name + ".mu");
    field(s.sigma == g["sigma"].get<double>(), name + ".sigma");
    field(s.pad_fraction == g["pad_fraction"].get<double>(), name + ".pad_fraction");
    field(s.bernoulli == g["bernoulli"].get<double>(), name + ".bernoulli");
    field(s.hflip == g["hflip"].get<bool>(), name + ".hflip");
    field(s.rotation == json_range(g["rotation"]), name + ".rotation");
    field(s.translation == json_range(g["translation"]), name + ".translation");
    field(s.scaling == json_range(g["scaling"]), name + ".scaling");
    field((s.blur ? std::optional<data::Range>(s.blur->sigma) : std::nullopt) ==
              json_range(g["blur_sigma"]),
          name + ".blur");
    field(s.gamma == json_range(g["gamma"]), name + ".gamma");
  }
  const auto m = data::dataset_spec("mnist");
  field(m.mu == 0.1307 && m.sigma == 0.3081, "mnist normalization");
  field(m.pad_fraction == 0.5 && data::dataset_spec("fashion-mnist").pad_fraction == 0.25,
        "padding fractions");
  field(golden.size() == data::dataset_names().size(), "dataset count");
  o.require(mismatches == 0, fmt("%zu specs, %zu fields match", golden.size(),
                                 fields - mismatches));
  return o;
}

// --- 10 ----------------------------------------------------------------------

Outcome metric_sanity() {
  Outcome o;
  std::mt19937_64 rng(1010);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = random_tensor({32, 32}, rng, 0, 1);
    worst = std::max(worst, std::abs(metrics::ssim(x, x) - 1));
  }
  const Tensor flat({32, 32}, 0.5);
  worst = std::max(worst, std::abs(metrics::ssim(flat, flat) - 1));
  const double p = metrics::psnr_from_mse(6.5025, 255);
  o.require(worst <= tol::kSsimSelf, fmt("|ssim(x,x) - 1| = %.1e <= %.0e", worst, tol::kSsimSelf));
  o.require(std::abs(p - 40) <= tol::kPsnr, fmt("psnr(255, 6.5025) = %.4f (40 +- %.2f)", p, tol::kPsnr));
  return o;
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  Env env;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << a << " needs a value\n";
        std::exit(2);
      }
      return argv[++i];
    };
    if (a == "--only")
      only = parse_list(next());
    else if (a == "--cli")
      env.cli = next();
    else if (a == "--work")
      env.work = next();
    else if (a == "--golden")
      env.golden = next();
    else {
      std::cerr << "unknown argument " << a << "\n";
      return 2;
    }
  }
  fs::create_directories(env.work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"transform exactness", transforms},
      {"DFT oracle equivalence", dft},
      {"gradient suite", gradients},
      {"loss invariance", invariances},
      {"classical baseline properties", classical_baseline},
      {"autoencoder desk scale", [&] { return autoencoder_desk(env); }},
      {"PR-DAD desk scale", [&] { return prdad_desk(env); }},
      {"dataset table fidelity", [&] { return table_fidelity(env); }},
      {"reproducibility", [&] { return reproducibility(env); }},
      {"metric sanity", metric_sanity},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::cout << "criterion " << id << " " << criteria[k].first << ": "
              << (o.pass ? "PASS" : "FAIL") << " (" << o.detail.str() << ")" << std::endl;
  }
  return failed ? 1 : 0;
}
