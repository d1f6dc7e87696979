#include "cfield/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace cfield {

namespace {

// Adds `value * overlap(rect, cell)` to every cell the rectangle covers.
// The rectangle is given in cell units and clipped to the raster.
void splat_rect(LabelGrid& grid, double x0, double y0, double x1, double y1, double value) {
  x0 = std::max(x0, 0.0);
  y0 = std::max(y0, 0.0);
  x1 = std::min(x1, static_cast<double>(grid.w));
  y1 = std::min(y1, static_cast<double>(grid.h));
  if (x0 >= x1 || y0 >= y1) return;
  const int64_t cx0 = static_cast<int64_t>(std::floor(x0));
  const int64_t cx1 = std::min<int64_t>(grid.w - 1, static_cast<int64_t>(std::floor(x1 - 1e-12)));
  const int64_t cy0 = static_cast<int64_t>(std::floor(y0));
  const int64_t cy1 = std::min<int64_t>(grid.h - 1, static_cast<int64_t>(std::floor(y1 - 1e-12)));
  for (int64_t cy = cy0; cy <= cy1; ++cy) {
    const double oy = std::min(y1, static_cast<double>(cy + 1)) - std::max(y0, static_cast<double>(cy));
    if (oy <= 0.0) continue;
    for (int64_t cx = cx0; cx <= cx1; ++cx) {
      const double ox = std::min(x1, static_cast<double>(cx + 1)) - std::max(x0, static_cast<double>(cx));
      if (ox <= 0.0) continue;
      grid.at(cx, cy) += value * ox * oy;
    }
  }
}

}  // namespace

LabelGrid max_normalize(const LabelGrid& grid) {
  LabelGrid out = grid;
  double mx = 0.0;
  for (double v : out.values) mx = std::max(mx, v);
  if (mx > 0.0)
    for (double& v : out.values) v /= mx;
  return out;
}

LabelGrid density_raster(const NodeSet& set, int64_t w_cells, int64_t h_cells) {
  LabelGrid grid = LabelGrid::zeros(w_cells, h_cells);
  if (set.nodes.empty()) return grid;
  if (!(set.extent.width() > 0.0) || !(set.extent.height() > 0.0))
    fail_data("density_raster: extent has zero area");
  const double sx = static_cast<double>(w_cells) / set.extent.width();
  const double sy = static_cast<double>(h_cells) / set.extent.height();
  for (const Node& n : set.nodes) {
    // rectangle in cell units around the unclamped normalized center
    const double cx = (n.x - set.extent.x0) * sx;
    const double cy = (n.y - set.extent.y0) * sy;
    const double hw = n.w * sx / 2.0, hh = n.h * sy / 2.0;
    splat_rect(grid, cx - hw, cy - hh, cx + hw, cy + hh, 1.0);
  }
  return grid;
}

LabelGrid cell_density_map(const NodeSet& set, int64_t w_cells, int64_t h_cells) {
  return max_normalize(density_raster(set, w_cells, h_cells));
}

std::vector<Net> parse_nets_text(const std::string& text, const std::string& origin) {
  std::vector<Net> nets;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      fail_data(origin + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    if (!obj.contains("net") || !obj.contains("nodes"))
      fail_data(origin + ":" + std::to_string(lineno) + ": expected keys 'net' and 'nodes'");
    Net net;
    net.name = obj["net"].is_string() ? obj["net"].get<std::string>() : obj["net"].dump();
    for (const auto& id : obj["nodes"]) net.node_ids.push_back(id.is_string() ? id.get<std::string>() : id.dump());
    if (net.node_ids.size() < 2)
      fail_data(origin + ":" + std::to_string(lineno) + ": net '" + net.name + "' has fewer than 2 nodes");
    nets.push_back(std::move(net));
  }
  return nets;
}

std::vector<Net> parse_nets(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_nets_text(os.str(), path);
}

LabelGrid rudy_raster(const std::vector<Net>& nets, const NodeSet& set, int64_t w_cells, int64_t h_cells) {
  LabelGrid grid = LabelGrid::zeros(w_cells, h_cells);
  NormalizedCoords coords = normalize(set, w_cells, h_cells);
  std::unordered_map<std::string, size_t> index;
  index.reserve(set.nodes.size() * 2);
  for (size_t i = 0; i < set.nodes.size(); ++i) index[set.nodes[i].id] = i;

  for (const Net& net : nets) {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool first = true;
    for (const std::string& id : net.node_ids) {
      auto it = index.find(id);
      if (it == index.end()) fail_data("net '" + net.name + "' references unknown node '" + id + "'");
      const double nx = coords.x[it->second], ny = coords.y[it->second];
      if (first) {
        x0 = x1 = nx;
        y0 = y1 = ny;
        first = false;
      } else {
        x0 = std::min(x0, nx);
        x1 = std::max(x1, nx);
        y0 = std::min(y0, ny);
        y1 = std::max(y1, ny);
      }
    }
    // degenerate boxes snap to the full cell containing the box center
    if (x1 - x0 < 1.0) {
      const double c = std::floor(std::min((x0 + x1) / 2.0, static_cast<double>(w_cells) - 0.5));
      x0 = c;
      x1 = c + 1.0;
    }
    if (y1 - y0 < 1.0) {
      const double c = std::floor(std::min((y0 + y1) / 2.0, static_cast<double>(h_cells) - 0.5));
      y0 = c;
      y1 = c + 1.0;
    }
    const double wb = x1 - x0, hb = y1 - y0;
    splat_rect(grid, x0, y0, x1, y1, (wb + hb) / (wb * hb));
  }
  return grid;
}

LabelGrid rudy_map(const std::vector<Net>& nets, const NodeSet& set, int64_t w_cells, int64_t h_cells) {
  return max_normalize(rudy_raster(nets, set, w_cells, h_cells));
}

}  // namespace cfield
