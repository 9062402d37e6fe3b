// Production kernels against their plain-loop references. Run with
// --benchmark_filter=... to pick a family; the "threads" argument of the
// production variants caps OpenMP.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "prdad/fourier.hpp"
#include "prdad/kernels.hpp"
#include "prdad/metrics.hpp"

using namespace prdad;
namespace k = prdad::kernels;

namespace {

std::vector<float> noise(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1, 1);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

Tensor noise_tensor(Shape s, unsigned seed) {
  Tensor t(std::move(s));
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& x : t.span()) x = u(rng);
  return t;
}

// One MLP layer of the default network: a batch of 32 through 2304 -> 2048.
constexpr std::size_t kM = 32, kK = 2304, kN = 2048;

template <bool Reference>
void BM_gemm(benchmark::State& st) {
  if constexpr (!Reference) k::set_num_threads(static_cast<int>(st.range(0)));
  const auto A = noise(kM * kK, 1), B = noise(kN * kK, 2);
  std::vector<float> C(kM * kN);
  for (auto _ : st) {
    if constexpr (Reference)
      k::reference::gemm<float>(k::Trans::No, k::Trans::Yes, kM, kN, kK, 1.f, A.data(), B.data(),
                                0.f, C.data());
    else
      k::gemm<float>(k::Trans::No, k::Trans::Yes, kM, kN, kK, 1.f, A.data(), B.data(), 0.f,
                     C.data());
    benchmark::DoNotOptimize(C.data());
  }
  st.counters["GFLOP/s"] = benchmark::Counter(2.0 * kM * kN * kK, benchmark::Counter::kIsIterationInvariantRate,
                                              benchmark::Counter::kIs1000);
  k::set_num_threads(0);
}

// The middle encoder block: 32 images, 32 -> 64 channels at 16 x 16.
const k::Conv2dDims kConv{32, 32, 64, 16, 16};

template <bool Reference, bool Backward>
void BM_conv(benchmark::State& st) {
  if constexpr (!Reference) k::set_num_threads(static_cast<int>(st.range(0)));
  const auto& d = kConv;
  const auto x = noise(d.batch * d.in_ch * d.height * d.width, 3);
  const auto w = noise(d.out_ch * d.in_ch * 9, 4), b = noise(d.out_ch, 5);
  std::vector<float> y(d.batch * d.out_ch * d.height * d.width), dx(x.size()), dw(w.size()),
      db(b.size());
  const auto dy = noise(y.size(), 6);
  for (auto _ : st) {
    if constexpr (Backward) {
      if constexpr (Reference)
        k::reference::conv2d_backward(d, x.data(), w.data(), dy.data(), dx.data(), dw.data(),
                                      db.data());
      else
        k::conv2d_backward(d, x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data());
      benchmark::DoNotOptimize(dx.data());
    } else {
      if constexpr (Reference)
        k::reference::conv2d_forward(d, x.data(), w.data(), b.data(), y.data());
      else
        k::conv2d_forward(d, x.data(), w.data(), b.data(), y.data());
      benchmark::DoNotOptimize(y.data());
    }
  }
  k::set_num_threads(0);
}

// A training batch of padded magnitudes: 32 planes of 48 x 48.
template <bool Reference>
void BM_dft2(benchmark::State& st) {
  if constexpr (!Reference) k::set_num_threads(static_cast<int>(st.range(0)));
  const Tensor x = noise_tensor({32, 48, 48}, 7);
  for (auto _ : st) {
    auto s = Reference ? fourier::reference::dft2(x) : fourier::dft2(x);
    benchmark::DoNotOptimize(s.real.data());
  }
  k::set_num_threads(0);
}

void BM_ssim(benchmark::State& st) {
  const Tensor a = noise_tensor({32, 32}, 8), b = noise_tensor({32, 32}, 9);
  for (auto _ : st) benchmark::DoNotOptimize(metrics::ssim(a, b));
}

void thread_args(benchmark::internal::Benchmark* b) {
  for (int t = 1; t <= k::max_threads(); t *= 2) b->Arg(t);
  if ((k::max_threads() & (k::max_threads() - 1)) != 0) b->Arg(k::max_threads());
}

}  // namespace

BENCHMARK(BM_gemm<true>)->Name("gemm/reference")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gemm<false>)->Name("gemm/eigen_omp")->Apply(thread_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv<true, false>)->Name("conv2d_fwd/reference")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv<false, false>)->Name("conv2d_fwd/im2col_omp")->Apply(thread_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv<true, true>)->Name("conv2d_bwd/reference")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv<false, true>)->Name("conv2d_bwd/im2col_omp")->Apply(thread_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dft2<true>)->Name("dft2/direct")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dft2<false>)->Name("dft2/fft_omp")->Apply(thread_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ssim)->Name("ssim/32x32")->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
