#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfield/common.hpp"

namespace cfield {

// W x H raster of continuous values in [0,1], row-major (row y, column x).
struct LabelGrid {
  int64_t w = 0;
  int64_t h = 0;
  std::vector<double> values;

  static LabelGrid zeros(int64_t w, int64_t h) { return {w, h, std::vector<double>(static_cast<size_t>(w * h), 0.0)}; }
  double& at(int64_t x, int64_t y) { return values[static_cast<size_t>(y * w + x)]; }
  double at(int64_t x, int64_t y) const { return values[static_cast<size_t>(y * w + x)]; }
  int64_t cells() const { return w * h; }
};

enum class GridFormat { Text, Binary, Pgm };

GridFormat grid_format_for_path(const std::string& path);

// Text: line 1 `W H`, then H lines of W decimals. Binary: magic `CFG1`,
// u32-LE W and H, then W*H f32-LE row-major. PGM (write-only): binary P5,
// 8-bit grayscale.
LabelGrid load_grid(const std::string& path);
// strict=true (predictions): out-of-range values are an error.
// strict=false (labels): they are clamped with a warning.
void save_grid(const std::string& path, const LabelGrid& grid, bool strict = true);

// 5x5 Gaussian blur (sigma in cells), zero padding at the border.
LabelGrid gaussian_blur5(const LabelGrid& grid, double sigma);

}  // namespace cfield
