#pragma once

#include <string>
#include <vector>

#include "cfield/grid.hpp"

namespace cfield {

// Rank/linear correlation between prediction and label rasters. Undefined
// cases (constant input, all-tied ranks) return NaN after a warning.
double pearson(const std::vector<double>& a, const std::vector<double>& b);
double spearman(const std::vector<double>& a, const std::vector<double>& b);
// Kendall tau-b via O(n log n) inversion counting; equals the O(n^2) pair
// count including tie corrections.
double kendall(const std::vector<double>& a, const std::vector<double>& b);

// Average-rank transform with tie midranks.
std::vector<double> midranks(const std::vector<double>& values);

struct SampleMetrics {
  std::string name;
  double pearson = 0.0;
  double spearman = 0.0;
  double kendall = 0.0;
  bool valid = true;
};

struct MetricsReport {
  std::vector<SampleMetrics> samples;
  double mean_pearson = 0.0;
  double mean_spearman = 0.0;
  double mean_kendall = 0.0;
  int64_t excluded = 0;
  bool pooled = false;

  std::string to_json() const;
  std::string to_table() const;
};

// Per-sample correlation over all cells, then unweighted mean; with
// pooled=true all cells are concatenated into one correlation instead.
MetricsReport evaluate_dataset(const std::vector<LabelGrid>& preds, const std::vector<LabelGrid>& labels,
                               const std::vector<std::string>& names, bool pooled = false);

}  // namespace cfield
