#pragma once

#include <cstdint>

#include "cfield/grid.hpp"
#include "cfield/nodeset.hpp"

namespace cfield {

struct SyntheticSample {
  NodeSet nodes;
  LabelGrid label;
};

// Desk-scale stand-in for real placement dumps: nodes drawn from a seeded
// mixture of 2-D Gaussians (plus a uniform background fraction) clipped to
// the extent, footprints log-uniform in [0.5, 4] cells. The label is the
// area-weighted cell density raster blurred by a 5x5 Gaussian (sigma = 1
// cell) and max-normalized; the generator itself is the label oracle.
SyntheticSample gen_synthetic(uint64_t seed, int64_t n_nodes, int64_t n_clusters, int64_t w_cells, int64_t h_cells);

}  // namespace cfield
