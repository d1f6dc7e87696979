#include "cfield/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cfield/baseline.hpp"

namespace cfield {

namespace {

// Cluster spread and background fraction. Half the nodes fall in a uniform
// filler carpet whose cell-level speckle is preserved by the label's
// center-cell rasterization but washed out by footprint-spread density
// rasters, so learned features have real headroom over the hand-crafted
// baseline.
constexpr double kSigmaMin = 2.0;
constexpr double kSigmaMax = 8.0;
constexpr double kBackgroundFraction = 0.5;

}  // namespace

SyntheticSample gen_synthetic(uint64_t seed, int64_t n_nodes, int64_t n_clusters, int64_t w_cells, int64_t h_cells) {
  if (n_clusters < 1 || n_nodes < n_clusters) fail_config("gen_synthetic: need n_nodes >= n_clusters >= 1");
  if (w_cells < 8 || h_cells < 8) fail_config("gen_synthetic: resolution must be at least 8x8");

  std::mt19937_64 rng(seed);
  const double w = static_cast<double>(w_cells), h = static_cast<double>(h_cells);

  SyntheticSample out;
  out.nodes.extent = {0.0, 0.0, w, h};
  out.nodes.nodes.reserve(static_cast<size_t>(n_nodes));

  std::uniform_real_distribution<double> ux(0.1 * w, 0.9 * w);
  std::uniform_real_distribution<double> uy(0.1 * h, 0.9 * h);
  std::uniform_real_distribution<double> usigma(kSigmaMin, kSigmaMax);
  struct Cluster {
    double cx, cy, sigma;
  };
  std::vector<Cluster> clusters;
  for (int64_t c = 0; c < n_clusters; ++c) clusters.push_back({ux(rng), uy(rng), usigma(rng)});

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int64_t> pick(0, n_clusters - 1);
  std::uniform_real_distribution<double> ulogsize(std::log(0.5), std::log(4.0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int64_t i = 0; i < n_nodes; ++i) {
    Node n;
    n.id = "n" + std::to_string(i);
    if (unit(rng) < kBackgroundFraction) {
      n.x = unit(rng) * w;
      n.y = unit(rng) * h;
    } else {
      const Cluster& c = clusters[static_cast<size_t>(pick(rng))];
      n.x = std::clamp(c.cx + gauss(rng) * c.sigma, 0.0, w);
      n.y = std::clamp(c.cy + gauss(rng) * c.sigma, 0.0, h);
    }
    n.w = std::exp(ulogsize(rng));
    n.h = std::exp(ulogsize(rng));
    out.nodes.nodes.push_back(std::move(n));
  }

  // label: per-cell area mass by owning cell (the cell holding the node
  // center), then a 5x5 sigma-1 blur, max-normalized
  LabelGrid mass = LabelGrid::zeros(w_cells, h_cells);
  const NormalizedCoords coords = normalize(out.nodes, w_cells, h_cells);
  for (int64_t i = 0; i < out.nodes.size(); ++i) {
    const Node& n = out.nodes.nodes[static_cast<size_t>(i)];
    const int64_t cx = static_cast<int64_t>(std::floor(coords.x[static_cast<size_t>(i)]));
    const int64_t cy = static_cast<int64_t>(std::floor(coords.y[static_cast<size_t>(i)]));
    mass.at(cx, cy) += n.w * n.h;
  }
  out.label = max_normalize(gaussian_blur5(mass, 1.0));
  return out;
}

}  // namespace cfield
