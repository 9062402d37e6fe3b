#include "prdad/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "prdad/errors.hpp"
#include "prdad/ops.hpp"

namespace prdad::metrics {

namespace {

void check_same(const Tensor& x, const Tensor& y, const char* op) {
  if (x.size() != y.size() || x.rank() < 2 || y.rank() < 2 ||
      x.dim(x.rank() - 1) != y.dim(y.rank() - 1)) {
    throw DimensionError(std::string(op) + ": " + shape_str(x.shape()) + " vs " +
                         shape_str(y.shape()));
  }
}

std::vector<double> gaussian(std::size_t n, double sigma) {
  std::vector<double> w(n);
  const double c = (static_cast<double>(n) - 1) / 2;
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
    s += w[i];
  }
  for (auto& v : w) v /= s;
  return w;
}

// Valid-mode separable filtering of an H x W plane.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t H, std::size_t W,
                                 const std::vector<double>& w) {
  const std::size_t k = w.size(), oh = H - k + 1, ow = W - k + 1;
  std::vector<double> rows(H * ow), out(oh * ow);
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < ow; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += w[t] * img[i * W + j + t];
      rows[i * ow + j] = s;
    }
  for (std::size_t i = 0; i < oh; ++i)
    for (std::size_t j = 0; j < ow; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += w[t] * rows[(i + t) * ow + j];
      out[i * ow + j] = s;
    }
  return out;
}

}  // namespace

double compensated_sum(const std::vector<double>& v) {
  double s = 0, c = 0;
  for (double x : v) {
    if (!std::isfinite(x)) return std::accumulate(v.begin(), v.end(), 0.0);
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

double mse(const Tensor& x, const Tensor& y) {
  check_same(x, y, "mse");
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

double mae(const Tensor& x, const Tensor& y) {
  check_same(x, y, "mae");
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

double psnr_from_mse(double m, double peak) {
  if (m == 0) return std::numeric_limits<double>::infinity();
  return 10 * std::log10(peak * peak / m);
}

double psnr(const Tensor& x, const Tensor& y, double peak) {
  return psnr_from_mse(mse(x, y) * peak * peak, peak);
}

double ssim(const Tensor& x, const Tensor& y, const SsimOptions& opt) {
  check_same(x, y, "ssim");
  const std::size_t W = x.dim(x.rank() - 1), H = x.size() / W;
  std::vector<double> a(x.span().begin(), x.span().end()), b(y.span().begin(), y.span().end());
  std::size_t win = std::min({opt.window, H, W});
  std::vector<double> w = gaussian(win, opt.sigma);

  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mx = filter_valid(a, H, W, w), my = filter_valid(b, H, W, w);
  const auto sxx = filter_valid(aa, H, W, w), syy = filter_valid(bb, H, W, w),
             sxy = filter_valid(ab, H, W, w);
  const double c1 = (opt.k1 * opt.range) * (opt.k1 * opt.range);
  const double c2 = (opt.k2 * opt.range) * (opt.k2 * opt.range);
  std::vector<double> vals(mx.size());
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i];
    const double cxy = sxy[i] - mx[i] * my[i];
    vals[i] = ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
              ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return compensated_sum(vals) / static_cast<double>(vals.size());
}

void EvalReport::finalize() {
  const std::size_t n = images.size();
  if (n == 0) throw ContractError("evaluation report has no images");
  std::vector<double> m(n), a(n), s(n), p(n);
  std::size_t rot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = images[i].mse;
    a[i] = images[i].mae;
    s[i] = images[i].ssim;
    p[i] = images[i].psnr;
    rot += images[i].rotated;
  }
  const double dn = static_cast<double>(n);
  mean.mse = compensated_sum(m) / dn;
  mean.mae = compensated_sum(a) / dn;
  mean.ssim = compensated_sum(s) / dn;
  mean.psnr = compensated_sum(p) / dn;
  mean.rotated = rot * 2 > n;
  psnr_255_literal = psnr_from_mse(mean.mse, 255.0);
}

void EvalReport::write_csv(std::ostream& os) const {
  os << "index,mse,mae,ssim,psnr,rotated\n";
  char buf[160];
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& r = images[i];
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%d\n", i, r.mse, r.mae, r.ssim,
                  r.psnr, r.rotated ? 1 : 0);
    os << buf;
  }
}

EvalReport score(const std::vector<Tensor>& predictions, const std::vector<Tensor>& targets,
                 bool orientation_resolve, double peak) {
  if (predictions.size() != targets.size()) {
    throw DimensionError("score: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(targets.size()) + " targets");
  }
  EvalReport rep;
  rep.orientation_resolve = orientation_resolve;
  rep.peak = peak;
  rep.images.resize(targets.size());
  const long n = static_cast<long>(targets.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const Tensor& t = targets[i];
    Tensor p = predictions[i];
    bool rotated = false;
    if (orientation_resolve) {
      Tensor r = ad::rotate_pi(p);
      if (mse(r, t) < mse(p, t)) {
        p = std::move(r);
        rotated = true;
      }
    }
    ImageScore& s = rep.images[i];
    s.mse = mse(p, t);
    s.mae = mae(p, t);
    s.ssim = ssim(p, t);
    s.psnr = psnr(p, t, peak);
    s.rotated = rotated;
  }
  rep.finalize();
  return rep;
}

namespace {
std::string fmt_psnr(double v) {
  if (std::isinf(v)) return "inf";
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}
}  // namespace

std::string format_table(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %10s %10s %8s %9s %12s\n", "Model", "MSE", "MAE", "SSIM",
                "PSNR", "PSNR(255,lit)");
  os << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-24s %10.4f %10.4f %8.4f %9s %12s\n", r.model.c_str(),
                  r.mean.mse, r.mean.mae, r.mean.ssim, fmt_psnr(r.mean.psnr).c_str(),
                  fmt_psnr(r.psnr_255_literal).c_str());
    os << line;
  }
  return os.str();
}

void write_summary_csv(std::ostream& os, const std::vector<EvalReport>& reports) {
  os << "model,images,orientation_resolve,mse,mae,ssim,psnr,psnr_255_literal,seconds\n";
  char buf[320];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.3f\n", r.model.c_str(),
                  r.images.size(), r.orientation_resolve ? 1 : 0, r.mean.mse, r.mean.mae,
                  r.mean.ssim, r.mean.psnr, r.psnr_255_literal, r.seconds);
    os << buf;
  }
}

}  // namespace prdad::metrics
