#pragma once

// Image quality metrics and evaluation reports. Images are compared over
// their last two dims; leading dims of size 1 are allowed.

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "prdad/tensor.hpp"

namespace prdad::metrics {

double mse(const Tensor& x, const Tensor& y);
double mae(const Tensor& x, const Tensor& y);

/// 10 log10(peak^2 / mse). Returns +infinity when mse is zero.
double psnr_from_mse(double mse, double peak);
/// PSNR with both images rescaled so that `peak` corresponds to 1.0 in the
/// input scale, i.e. the mse is taken on the pixel scale implied by peak.
double psnr(const Tensor& x, const Tensor& y, double peak = 1.0);

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  /// Dynamic range of the input pixel scale.
  double range = 1.0;
};

/// Single-scale SSIM averaged over all valid window positions. Images smaller
/// than the window use one window covering the whole image.
double ssim(const Tensor& x, const Tensor& y, const SsimOptions& opt = {});

/// Sum with Neumaier compensation; order of equal inputs does not matter to
/// the last few ulps.
double compensated_sum(const std::vector<double>& v);

struct ImageScore {
  double mse = 0;
  double mae = 0;
  double ssim = 0;
  double psnr = 0;
  bool rotated = false;
};

struct EvalReport {
  std::string model;
  bool orientation_resolve = true;
  double peak = 1.0;
  std::vector<ImageScore> images;
  ImageScore mean;
  /// 10 log10(255^2 / mean mse), the literal formula applied to [0,1]-scale
  /// errors. Reported next to the consistent PSNR because the two
  /// conventions disagree.
  double psnr_255_literal = 0;
  double seconds = 0;

  void finalize();
  void write_csv(std::ostream& os) const;
};

/// Scores predictions against targets, both on the [0,1] pixel scale. With
/// orientation resolution each prediction is scored as the better of itself
/// and its point reflection under MSE.
EvalReport score(const std::vector<Tensor>& predictions, const std::vector<Tensor>& targets,
                 bool orientation_resolve = true, double peak = 1.0);

/// Text table with one row per report: Model, MSE, MAE, SSIM, PSNR.
std::string format_table(const std::vector<EvalReport>& reports);
void write_summary_csv(std::ostream& os, const std::vector<EvalReport>& reports);

}  // namespace prdad::metrics
