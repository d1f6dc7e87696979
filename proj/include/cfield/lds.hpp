#pragma once

#include <cstdint>
#include <vector>

#include "cfield/grid.hpp"

namespace cfield {

struct LdsConfig {
  bool enabled = true;
  double bin_width = 0.001;
  int kernel_size = 5;  // bins, odd
  double sigma = 2.0;   // bins
};

// Empirical label density per bin over [0,1]; sum(p) * bin_width == 1.
// Values of exactly 1.0 land in the last bin.
std::vector<double> build_histogram(const std::vector<const LabelGrid*>& labels, double bin_width);

// Discrete convolution with a normalized Gaussian kernel. The boundary is
// handled by symmetric (edge-repeating) folding, which conserves total mass
// and leaves a uniform density unchanged.
std::vector<double> smooth_density(const std::vector<double>& density, int kernel_size, double sigma);

// Per-bin loss weights: inverse square root of the smoothed density,
// mean-normalized to 1 over the observed bins; unobserved bins inherit the
// weight of the nearest observed bin.
class LdsWeightTable {
 public:
  // All-ones table (LDS disabled); weighted MSE degenerates to plain MSE.
  static LdsWeightTable uniform();
  static LdsWeightTable build(const std::vector<const LabelGrid*>& labels, const LdsConfig& config);
  // From serialized state.
  static LdsWeightTable from_weights(std::vector<double> weights, double bin_width, bool enabled);

  bool enabled() const { return enabled_; }
  double bin_width() const { return bin_width_; }
  int64_t bins() const { return static_cast<int64_t>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& smoothed_density() const { return smoothed_; }

  int64_t bin_of(double y) const;
  double weight_for(double y) const;
  std::vector<double> weights_for(const LabelGrid& label) const;

 private:
  bool enabled_ = false;
  double bin_width_ = 0.001;
  std::vector<double> weights_;
  std::vector<double> smoothed_;
};

}  // namespace cfield
