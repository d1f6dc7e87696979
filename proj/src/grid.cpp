#include "cfield/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cfield {

namespace {

constexpr char kMagic[4] = {'C', 'F', 'G', '1'};

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 | static_cast<uint32_t>(b[2]) << 16 |
         static_cast<uint32_t>(b[3]) << 24;
}

void put_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

float get_f32(std::istream& in) {
  uint32_t bits = get_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void check_range(LabelGrid& grid, const std::string& path, bool strict) {
  int64_t clamped = 0;
  for (double& v : grid.values) {
    if (!std::isfinite(v)) fail_data(path + ": non-finite grid value");
    if (v < 0.0 || v > 1.0) {
      if (strict)
        fail_data(path + ": value " + std::to_string(v) + " outside [0,1]");
      v = std::clamp(v, 0.0, 1.0);
      ++clamped;
    }
  }
  if (clamped > 0) log_warn(path + ": clamped " + std::to_string(clamped) + " value(s) into [0,1]");
}

LabelGrid load_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open " + path);
  LabelGrid grid;
  if (!(in >> grid.w >> grid.h) || grid.w < 1 || grid.h < 1) fail_data(path + ": malformed grid header");
  grid.values.resize(static_cast<size_t>(grid.cells()));
  for (double& v : grid.values)
    if (!(in >> v)) fail_data(path + ": truncated grid data");
  return grid;
}

LabelGrid load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) fail_data(path + ": bad magic, expected CFG1");
  LabelGrid grid;
  grid.w = get_u32(in);
  grid.h = get_u32(in);
  if (!in || grid.w < 1 || grid.h < 1 || grid.cells() > (int64_t(1) << 30))
    fail_data(path + ": implausible extents " + std::to_string(grid.w) + "x" + std::to_string(grid.h));
  grid.values.resize(static_cast<size_t>(grid.cells()));
  for (double& v : grid.values) v = static_cast<double>(get_f32(in));
  if (!in) fail_data(path + ": truncated grid data");
  return grid;
}

}  // namespace

GridFormat grid_format_for_path(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "txt") return GridFormat::Text;
  if (ext == "cfg1") return GridFormat::Binary;
  if (ext == "pgm") return GridFormat::Pgm;
  fail_data("cannot infer grid format from '" + path + "' (expected .txt, .cfg1 or .pgm)");
}

LabelGrid load_grid(const std::string& path) {
  GridFormat format = grid_format_for_path(path);
  if (format == GridFormat::Pgm) fail_data("PGM is a heatmap export format; cannot load " + path);
  LabelGrid grid = format == GridFormat::Text ? load_text(path) : load_binary(path);
  check_range(grid, path, /*strict=*/false);
  return grid;
}

void save_grid(const std::string& path, const LabelGrid& grid, bool strict) {
  if (grid.w < 1 || grid.h < 1 || static_cast<int64_t>(grid.values.size()) != grid.cells())
    fail_internal("save_grid: inconsistent grid");
  LabelGrid checked = grid;
  check_range(checked, path, strict);

  std::ofstream out(path, std::ios::binary);
  if (!out) fail_data("cannot write " + path);
  switch (grid_format_for_path(path)) {
    case GridFormat::Text: {
      out << checked.w << " " << checked.h << "\n";
      char buf[32];
      for (int64_t y = 0; y < checked.h; ++y) {
        for (int64_t x = 0; x < checked.w; ++x) {
          std::snprintf(buf, sizeof(buf), "%.10g", checked.at(x, y));
          out << (x ? " " : "") << buf;
        }
        out << "\n";
      }
      break;
    }
    case GridFormat::Binary: {
      out.write(kMagic, 4);
      put_u32(out, static_cast<uint32_t>(checked.w));
      put_u32(out, static_cast<uint32_t>(checked.h));
      for (double v : checked.values) put_f32(out, static_cast<float>(v));
      break;
    }
    case GridFormat::Pgm: {
      out << "P5\n" << checked.w << " " << checked.h << "\n255\n";
      for (double v : checked.values) {
        const int pixel = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        out.put(static_cast<char>(pixel));
      }
      break;
    }
  }
  if (!out) fail_data("write failed for " + path);
}

LabelGrid gaussian_blur5(const LabelGrid& grid, double sigma) {
  double k1[5];
  double total = 0.0;
  for (int i = -2; i <= 2; ++i) {
    k1[i + 2] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += k1[i + 2];
  }
  for (double& v : k1) v /= total;

  LabelGrid tmp = LabelGrid::zeros(grid.w, grid.h);
  for (int64_t y = 0; y < grid.h; ++y)
    for (int64_t x = 0; x < grid.w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) {
        const int64_t xx = x + i;
        if (xx >= 0 && xx < grid.w) acc += k1[i + 2] * grid.at(xx, y);
      }
      tmp.at(x, y) = acc;
    }
  LabelGrid out = LabelGrid::zeros(grid.w, grid.h);
  for (int64_t y = 0; y < grid.h; ++y)
    for (int64_t x = 0; x < grid.w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) {
        const int64_t yy = y + i;
        if (yy >= 0 && yy < grid.h) acc += k1[i + 2] * tmp.at(x, yy);
      }
      out.at(x, y) = acc;
    }
  return out;
}

}  // namespace cfield
