#include "cfield/lds.hpp"

#include <algorithm>
#include <cmath>

namespace cfield {

namespace {

constexpr double kDensityFloor = 1e-12;

int64_t bins_for(double bin_width) { return static_cast<int64_t>(std::llround(1.0 / bin_width)); }

}  // namespace

std::vector<double> build_histogram(const std::vector<const LabelGrid*>& labels, double bin_width) {
  if (labels.empty()) fail_data("build_histogram: empty label stream");
  const int64_t bins = bins_for(bin_width);
  std::vector<double> density(static_cast<size_t>(bins), 0.0);
  int64_t total = 0;
  for (const LabelGrid* grid : labels) {
    for (double v : grid->values) {
      if (v < 0.0 || v > 1.0) fail_data("build_histogram: label value " + std::to_string(v) + " outside [0,1]");
      const int64_t b = std::min<int64_t>(bins - 1, static_cast<int64_t>(v / bin_width));
      density[static_cast<size_t>(b)] += 1.0;
      ++total;
    }
  }
  if (total == 0) fail_data("build_histogram: labels contain no cells");
  const double norm = 1.0 / (static_cast<double>(total) * bin_width);
  for (double& v : density) v *= norm;
  return density;
}

std::vector<double> smooth_density(const std::vector<double>& density, int kernel_size, double sigma) {
  if (kernel_size < 1 || kernel_size % 2 == 0) fail_config("smooth_density: kernel size must be odd");
  const int radius = kernel_size / 2;
  const int64_t bins = static_cast<int64_t>(density.size());
  if (bins <= radius) fail_config("smooth_density: kernel wider than histogram");

  std::vector<double> kernel(static_cast<size_t>(kernel_size));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[static_cast<size_t>(i + radius)];
  }
  for (double& v : kernel) v /= total;

  std::vector<double> smoothed(static_cast<size_t>(bins), 0.0);
  for (int64_t t = 0; t < bins; ++t) {
    double acc = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      int64_t idx = t + i;
      if (idx < 0) idx = -idx - 1;          // symmetric fold at the low edge
      if (idx >= bins) idx = 2 * bins - idx - 1;
      acc += kernel[static_cast<size_t>(i + radius)] * density[static_cast<size_t>(idx)];
    }
    smoothed[static_cast<size_t>(t)] = acc;
  }
  return smoothed;
}

LdsWeightTable LdsWeightTable::uniform() {
  LdsWeightTable table;
  table.enabled_ = false;
  table.bin_width_ = 0.001;
  table.weights_.assign(static_cast<size_t>(bins_for(table.bin_width_)), 1.0);
  return table;
}

LdsWeightTable LdsWeightTable::build(const std::vector<const LabelGrid*>& labels, const LdsConfig& config) {
  if (!config.enabled) return uniform();
  LdsWeightTable table;
  table.enabled_ = true;
  table.bin_width_ = config.bin_width;
  const std::vector<double> density = build_histogram(labels, config.bin_width);
  table.smoothed_ = smooth_density(density, config.kernel_size, config.sigma);

  const int64_t bins = static_cast<int64_t>(table.smoothed_.size());
  table.weights_.assign(static_cast<size_t>(bins), 0.0);
  std::vector<int64_t> observed;
  double weight_sum = 0.0;
  for (int64_t b = 0; b < bins; ++b) {
    const double p = table.smoothed_[static_cast<size_t>(b)];
    if (p > 0.0) {
      const double w = 1.0 / std::sqrt(std::max(p, kDensityFloor));
      table.weights_[static_cast<size_t>(b)] = w;
      weight_sum += w;
      observed.push_back(b);
    }
  }
  if (observed.empty()) fail_data("LdsWeightTable: no observed bins");
  const double mean = weight_sum / static_cast<double>(observed.size());
  for (int64_t b : observed) table.weights_[static_cast<size_t>(b)] /= mean;

  // unobserved bins inherit the nearest observed weight (ties go low)
  size_t cursor = 0;
  for (int64_t b = 0; b < bins; ++b) {
    if (table.smoothed_[static_cast<size_t>(b)] > 0.0) continue;
    while (cursor + 1 < observed.size() &&
           std::llabs(observed[cursor + 1] - b) < std::llabs(observed[cursor] - b))
      ++cursor;
    table.weights_[static_cast<size_t>(b)] = table.weights_[static_cast<size_t>(observed[cursor])];
  }
  return table;
}

LdsWeightTable LdsWeightTable::from_weights(std::vector<double> weights, double bin_width, bool enabled) {
  LdsWeightTable table;
  table.enabled_ = enabled;
  table.bin_width_ = bin_width;
  table.weights_ = std::move(weights);
  return table;
}

int64_t LdsWeightTable::bin_of(double y) const {
  const int64_t bins = static_cast<int64_t>(weights_.size());
  return std::clamp<int64_t>(static_cast<int64_t>(y / bin_width_), 0, bins - 1);
}

double LdsWeightTable::weight_for(double y) const { return weights_[static_cast<size_t>(bin_of(y))]; }

std::vector<double> LdsWeightTable::weights_for(const LabelGrid& label) const {
  std::vector<double> out(label.values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = weight_for(label.values[i]);
  return out;
}

}  // namespace cfield
