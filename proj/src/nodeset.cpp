#include "cfield/nodeset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace cfield {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool parse_double(const std::string& s, double& out) {
  try {
    size_t pos = 0;
    out = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

Extent rect_bbox(const std::vector<Node>& nodes) {
  Extent e;
  if (nodes.empty()) return e;
  e.x0 = e.x1 = nodes[0].x;
  e.y0 = e.y1 = nodes[0].y;
  for (const Node& n : nodes) {
    e.x0 = std::min(e.x0, n.x - n.w / 2);
    e.x1 = std::max(e.x1, n.x + n.w / 2);
    e.y0 = std::min(e.y0, n.y - n.h / 2);
    e.y1 = std::max(e.y1, n.y + n.h / 2);
  }
  return e;
}

NodeSet parse_csv(const std::string& text, const std::string& origin) {
  NodeSet set;
  bool have_extent = false;
  bool have_header = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string tag;
      ls >> tag;
      if (tag == "extent") {
        if (!(ls >> set.extent.x0 >> set.extent.y0 >> set.extent.x1 >> set.extent.y1))
          fail_data(origin + ":" + std::to_string(lineno) + ": malformed #extent line");
        have_extent = true;
      }
      continue;
    }
    if (!have_header) {
      if (line != "id,x,y,w,h")
        fail_data(origin + ":" + std::to_string(lineno) + ": expected header 'id,x,y,w,h', got '" + line + "'");
      have_header = true;
      continue;
    }
    auto fields = split_csv(line);
    if (fields.size() != 5)
      fail_data(origin + ":" + std::to_string(lineno) + ": expected 5 fields, got " +
                std::to_string(fields.size()));
    Node n;
    n.id = fields[0];
    if (!parse_double(fields[1], n.x) || !parse_double(fields[2], n.y) || !parse_double(fields[3], n.w) ||
        !parse_double(fields[4], n.h))
      fail_data(origin + ":" + std::to_string(lineno) + ": non-numeric field in '" + line + "'");
    set.nodes.push_back(std::move(n));
  }
  if (!have_header) fail_data(origin + ": missing CSV header 'id,x,y,w,h'");
  if (!have_extent) set.extent = rect_bbox(set.nodes);
  return set;
}

NodeSet parse_jsonl(const std::string& text, const std::string& origin) {
  NodeSet set;
  bool have_extent = false;
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
    if (obj.contains("extent")) {
      auto arr = obj["extent"];
      if (!arr.is_array() || arr.size() != 4)
        fail_data(origin + ":" + std::to_string(lineno) + ": extent must be [x0,y0,x1,y1]");
      set.extent = {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(), arr[3].get<double>()};
      have_extent = true;
      continue;
    }
    Node n;
    for (const char* key : {"id", "x", "y", "w", "h"})
      if (!obj.contains(key))
        fail_data(origin + ":" + std::to_string(lineno) + ": missing field '" + std::string(key) + "'");
    n.id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
    n.x = obj["x"].get<double>();
    n.y = obj["y"].get<double>();
    n.w = obj["w"].get<double>();
    n.h = obj["h"].get<double>();
    set.nodes.push_back(std::move(n));
  }
  if (!have_extent) set.extent = rect_bbox(set.nodes);
  return set;
}

}  // namespace

NodeFormat node_format_for_path(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "csv") return NodeFormat::Csv;
  if (ext == "jsonl") return NodeFormat::Jsonl;
  fail_data("cannot infer node file format from '" + path + "' (expected .csv or .jsonl)");
}

void validate_nodes(const NodeSet& set, const std::string& origin) {
  std::string bad;
  int bad_count = 0;
  for (const Node& n : set.nodes) {
    if (!(n.w > 0.0) || !(n.h > 0.0)) {
      if (bad_count < 16) bad += (bad.empty() ? "" : ", ") + n.id;
      ++bad_count;
    }
  }
  if (bad_count > 0)
    fail_data(origin + ": " + std::to_string(bad_count) + " node(s) with non-positive width/height: " + bad);
  const Extent& e = set.extent;
  for (const Node& n : set.nodes)
    if (n.x < e.x0 || n.x > e.x1 || n.y < e.y0 || n.y > e.y1)
      fail_data(origin + ": node '" + n.id + "' center (" + std::to_string(n.x) + "," + std::to_string(n.y) +
                ") lies outside the extent");
}

NodeSet parse_nodes_text(const std::string& text, NodeFormat format, const std::string& origin) {
  NodeSet set = format == NodeFormat::Csv ? parse_csv(text, origin) : parse_jsonl(text, origin);
  validate_nodes(set, origin);
  return set;
}

NodeSet parse_nodes(const std::string& path, NodeFormat format) {
  return parse_nodes_text(read_file(path), format, path);
}

NodeSet parse_nodes(const std::string& path) { return parse_nodes(path, node_format_for_path(path)); }

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_nodes(const std::string& path, const NodeSet& set, NodeFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_data("cannot write " + path);
  const Extent& e = set.extent;
  if (format == NodeFormat::Csv) {
    out << "#extent " << fmt_double(e.x0) << " " << fmt_double(e.y0) << " " << fmt_double(e.x1) << " "
        << fmt_double(e.y1) << "\n";
    out << "id,x,y,w,h\n";
    for (const Node& n : set.nodes)
      out << n.id << "," << fmt_double(n.x) << "," << fmt_double(n.y) << "," << fmt_double(n.w) << ","
          << fmt_double(n.h) << "\n";
  } else {
    out << "{\"extent\":[" << fmt_double(e.x0) << "," << fmt_double(e.y0) << "," << fmt_double(e.x1) << ","
        << fmt_double(e.y1) << "]}\n";
    for (const Node& n : set.nodes) {
      nlohmann::json obj;
      obj["id"] = n.id;
      obj["x"] = n.x;
      obj["y"] = n.y;
      obj["w"] = n.w;
      obj["h"] = n.h;
      out << obj.dump() << "\n";
    }
  }
  if (!out) fail_data("write failed for " + path);
}

void write_nodes(const std::string& path, const NodeSet& set) {
  write_nodes(path, set, node_format_for_path(path));
}

NormalizedCoords normalize(const NodeSet& set, int64_t w_cells, int64_t h_cells) {
  if (w_cells < 1 || h_cells < 1) fail_config("normalize: base resolution must be positive");
  const Extent& e = set.extent;
  if (!(e.width() > 0.0) || !(e.height() > 0.0))
    fail_data("normalize: extent has zero area (" + std::to_string(e.width()) + " x " +
              std::to_string(e.height()) + ")");
  NormalizedCoords out;
  out.w_cells = w_cells;
  out.h_cells = h_cells;
  out.x.reserve(set.nodes.size());
  out.y.reserve(set.nodes.size());
  // a point exactly on the max edge lands in the last cell
  const double x_max = std::nextafter(static_cast<double>(w_cells), 0.0);
  const double y_max = std::nextafter(static_cast<double>(h_cells), 0.0);
  for (const Node& n : set.nodes) {
    double nx = (n.x - e.x0) / e.width() * static_cast<double>(w_cells);
    double ny = (n.y - e.y0) / e.height() * static_cast<double>(h_cells);
    out.x.push_back(std::clamp(nx, 0.0, x_max));
    out.y.push_back(std::clamp(ny, 0.0, y_max));
  }
  return out;
}

GridAssignment assign_grid(const NormalizedCoords& coords, const GridSpec& spec) {
  if (spec.dx < 1 || spec.dy < 1) fail_config("assign_grid: grid size must be >= 1");
  GridAssignment out;
  out.grid_w = spec.grid_w(coords.w_cells);
  out.grid_h = spec.grid_h(coords.h_cells);
  const int64_t n = coords.size();
  std::vector<int64_t> cell(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const int64_t gx = static_cast<int64_t>(std::floor(coords.x[static_cast<size_t>(i)] / static_cast<double>(spec.dx)));
    const int64_t gy = static_cast<int64_t>(std::floor(coords.y[static_cast<size_t>(i)] / static_cast<double>(spec.dy)));
    cell[static_cast<size_t>(i)] = gy * out.grid_w + gx;
  }
  std::vector<int64_t> sorted = cell;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  out.cell_of_segment = sorted;
  std::unordered_map<int64_t, int64_t> seg_of_cell;
  seg_of_cell.reserve(sorted.size() * 2);
  for (size_t s = 0; s < sorted.size(); ++s) seg_of_cell[sorted[s]] = static_cast<int64_t>(s);
  out.segment_of.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) out.segment_of[static_cast<size_t>(i)] = seg_of_cell[cell[static_cast<size_t>(i)]];
  return out;
}

}  // namespace cfield
