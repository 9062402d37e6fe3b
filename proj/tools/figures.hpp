#pragma once

// Raster figures written as PGM: image grids and simple line plots.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "prdad/tensor.hpp"

namespace prdad::cli {

/// Strips of up to `columns` images: a row of originals above the row of
/// their reconstructions, strips stacked top to bottom, separated by
/// mid-grey gutters.
Tensor pair_grid(const std::vector<Tensor>& originals, const std::vector<Tensor>& recovered,
                 std::size_t columns = 8);

/// One curve on white, scaled to span the plot area between its finite
/// minimum and maximum. Non-finite values leave gaps.
Tensor line_plot(const std::vector<double>& ys, std::size_t width = 480,
                 std::size_t height = 240);

/// Columns of a numeric CSV file with a header row. Empty or unparsable
/// cells become NaN.
std::map<std::string, std::vector<double>> read_csv_columns(const std::filesystem::path& path);

}  // namespace prdad::cli
