#include "figures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "prdad/errors.hpp"

namespace prdad::cli {

Tensor pair_grid(const std::vector<Tensor>& originals, const std::vector<Tensor>& recovered,
                 std::size_t columns) {
  if (originals.size() != recovered.size() || originals.empty())
    throw ContractError("pair_grid: need matching, non-empty image lists");
  const std::size_t h = originals[0].dim(0), w = originals[0].dim(1), gap = 2;
  const std::size_t cols = std::min(columns, originals.size());
  const std::size_t strips = (originals.size() + cols - 1) / cols;
  const std::size_t W = cols * w + (cols + 1) * gap;
  const std::size_t H = strips * 2 * h + (strips * 2 + 1) * gap;
  Tensor g = Tensor::full({H, W}, 0.5);
  auto blit = [&](const Tensor& img, std::size_t top, std::size_t left) {
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) g.at(top + i, left + j) = img.at(i, j);
  };
  for (std::size_t k = 0; k < originals.size(); ++k) {
    const std::size_t strip = k / cols, col = k % cols;
    const std::size_t left = gap + col * (w + gap);
    const std::size_t top = gap + strip * 2 * (h + gap);
    blit(originals[k], top, left);
    blit(recovered[k], top + h + gap, left);
  }
  return g;
}

Tensor line_plot(const std::vector<double>& ys, std::size_t width, std::size_t height) {
  Tensor img = Tensor::full({height, width}, 1.0);
  const std::size_t margin = 12;
  const std::size_t x0 = margin, x1 = width - margin, y0 = margin, y1 = height - margin;
  for (std::size_t x = x0; x <= x1; ++x) img.at(y1, x) = 0.0;
  for (std::size_t y = y0; y <= y1; ++y) img.at(y, x0) = 0.0;

  double lo = INFINITY, hi = -INFINITY;
  for (double v : ys)
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!std::isfinite(lo)) return img;
  if (hi == lo) hi = lo + 1;
  auto px = [&](std::size_t i) {
    const double t = ys.size() > 1 ? double(i) / double(ys.size() - 1) : 0.5;
    return double(x0) + t * double(x1 - x0);
  };
  auto py = [&](double v) { return double(y1) - (v - lo) / (hi - lo) * double(y1 - y0); };
  auto dot = [&](double x, double y) {
    const auto r = static_cast<std::size_t>(std::lround(y));
    const auto c = static_cast<std::size_t>(std::lround(x));
    if (r < height && c < width) img.at(r, c) = 0.0;
  };
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (!std::isfinite(ys[i])) continue;
    dot(px(i), py(ys[i]));
    if (i + 1 < ys.size() && std::isfinite(ys[i + 1])) {
      const double ax = px(i), ay = py(ys[i]), bx = px(i + 1), by = py(ys[i + 1]);
      const int steps = static_cast<int>(std::ceil(std::max(std::abs(bx - ax), std::abs(by - ay))));
      for (int s = 1; s <= steps; ++s) {
        const double t = double(s) / steps;
        dot(ax + t * (bx - ax), ay + t * (by - ay));
      }
    }
  }
  return img;
}

std::map<std::string, std::vector<double>> read_csv_columns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) names.push_back(cell);
  }
  std::map<std::string, std::vector<double>> cols;
  for (const auto& n : names) cols[n];
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (const auto& n : names) {
      double v = NAN;
      if (std::getline(ss, cell, ',') && !cell.empty()) {
        try {
          v = std::stod(cell);
        } catch (const std::exception&) {
        }
      }
      cols[n].push_back(v);
    }
  }
  return cols;
}

}  // namespace prdad::cli
