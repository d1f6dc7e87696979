#pragma once

#include <string>
#include <vector>

#include "cfield/grid.hpp"
#include "cfield/nodeset.hpp"

namespace cfield {

// Hand-crafted feature rasters used as comparison inputs for CNN-style
// baselines. Pure functions over the node set.

// Each node rectangle contributes its overlap area (in cell units, clipped
// to the raster) to every covered cell. Not normalized; the total equals the
// clipped node area.
LabelGrid density_raster(const NodeSet& nodes, int64_t w_cells, int64_t h_cells);

// density_raster max-normalized into [0,1].
LabelGrid cell_density_map(const NodeSet& nodes, int64_t w_cells, int64_t h_cells);

struct Net {
  std::string name;
  std::vector<std::string> node_ids;
};

// JSONL, one {"net": id, "nodes": [ids]} object per line.
std::vector<Net> parse_nets(const std::string& path);
std::vector<Net> parse_nets_text(const std::string& text, const std::string& origin);

// Rectangular uniform wire density: each net spreads (w+h)/(w*h) over its
// center bounding box in cell units; boxes thinner than one cell snap to the
// cell column/row containing the box center. Max-normalized.
LabelGrid rudy_map(const std::vector<Net>& nets, const NodeSet& nodes, int64_t w_cells, int64_t h_cells);

// rudy_map before max-normalization, for additivity checks.
LabelGrid rudy_raster(const std::vector<Net>& nets, const NodeSet& nodes, int64_t w_cells, int64_t h_cells);

LabelGrid max_normalize(const LabelGrid& grid);

}  // namespace cfield
