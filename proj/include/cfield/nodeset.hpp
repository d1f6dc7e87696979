#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfield/common.hpp"

namespace cfield {

// A placed circuit component: center position plus footprint, in layout units.
struct Node {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

struct Extent {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

// Raw placement point cloud. Invariants: w, h > 0 for every node and all
// centers lie inside the extent; enforced by parse/validate.
struct NodeSet {
  std::vector<Node> nodes;
  Extent extent;
  int64_t size() const { return static_cast<int64_t>(nodes.size()); }
};

enum class NodeFormat { Csv, Jsonl };

NodeFormat node_format_for_path(const std::string& path);

// CSV: optional `#extent x0 y0 x1 y1` line, then header `id,x,y,w,h`, then
// one row per node. JSONL: optional first line {"extent":[x0,y0,x1,y1]},
// then one {"id","x","y","w","h"} object per line. Without an extent
// directive the extent is the bounding box of the node rectangles.
NodeSet parse_nodes(const std::string& path);
NodeSet parse_nodes(const std::string& path, NodeFormat format);
NodeSet parse_nodes_text(const std::string& text, NodeFormat format, const std::string& origin);

void write_nodes(const std::string& path, const NodeSet& nodes);
void write_nodes(const std::string& path, const NodeSet& nodes, NodeFormat format);

void validate_nodes(const NodeSet& nodes, const std::string& origin);

// Node centers mapped linearly onto the base grid: coordinates lie in
// [0, w_cells) x [0, h_cells), with the max edge clamped into the last cell.
struct NormalizedCoords {
  int64_t w_cells = 0;
  int64_t h_cells = 0;
  std::vector<double> x;
  std::vector<double> y;
  int64_t size() const { return static_cast<int64_t>(x.size()); }
};

NormalizedCoords normalize(const NodeSet& nodes, int64_t w_cells, int64_t h_cells);

// Grid size in base cells per dimension; a stage at scale s uses dx=dy=s.
struct GridSpec {
  int64_t dx = 1;
  int64_t dy = 1;
  int64_t grid_w(int64_t w_cells) const { return (w_cells + dx - 1) / dx; }
  int64_t grid_h(int64_t h_cells) const { return (h_cells + dy - 1) / dy; }
};

// Compact segment ids over the occupied grids, enumerated in row-major scan
// order. cell_of_segment[s] is the row-major linear cell of segment s.
struct GridAssignment {
  std::vector<int64_t> segment_of;       // n entries, in [0, m)
  std::vector<int64_t> cell_of_segment;  // m entries, strictly increasing
  int64_t grid_w = 0;
  int64_t grid_h = 0;
  int64_t num_segments() const { return static_cast<int64_t>(cell_of_segment.size()); }
};

GridAssignment assign_grid(const NormalizedCoords& coords, const GridSpec& spec);

}  // namespace cfield
