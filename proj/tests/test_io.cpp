#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <unordered_map>

#include "cfield/baseline.hpp"
#include "cfield/grid.hpp"
#include "cfield/nodeset.hpp"
#include "cfield/synthetic.hpp"

using namespace cfield;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "cfield_io_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

NodeSet random_nodes(uint64_t seed, int64_t n, double extent_size = 100.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, extent_size), size(0.1, 3.0);
  NodeSet set;
  set.extent = {0.0, 0.0, extent_size, extent_size};
  for (int64_t i = 0; i < n; ++i)
    set.nodes.push_back({"n" + std::to_string(i), pos(rng), pos(rng), size(rng), size(rng)});
  return set;
}

}  // namespace

TEST_CASE("csv parsing: single row") {
  NodeSet set = parse_nodes_text("id,x,y,w,h\na,1.0,2.0,0.5,0.5\n", NodeFormat::Csv, "test");
  REQUIRE(set.size() == 1);
  CHECK(set.nodes[0].id == "a");
  CHECK(set.nodes[0].x == 1.0);
  CHECK(set.nodes[0].y == 2.0);
  CHECK(set.nodes[0].w == 0.5);
  CHECK(set.nodes[0].h == 0.5);
  // extent defaults to the node rectangle bounding box
  CHECK(set.extent.x0 == doctest::Approx(0.75));
  CHECK(set.extent.x1 == doctest::Approx(1.25));
}

TEST_CASE("csv parsing: empty file after header gives n=0 and downstream ops accept it") {
  NodeSet set = parse_nodes_text("id,x,y,w,h\n", NodeFormat::Csv, "test");
  CHECK(set.size() == 0);
  NormalizedCoords coords = normalize(set, 16, 16);
  CHECK(coords.size() == 0);
  GridAssignment ga = assign_grid(coords, {2, 2});
  CHECK(ga.num_segments() == 0);
  LabelGrid density = density_raster(set, 16, 16);
  for (double v : density.values) CHECK(v == 0.0);
}

TEST_CASE("csv parsing errors carry line numbers and offending ids") {
  try {
    parse_nodes_text("id,x,y,w,h\na,1,2,1,1\nb,3,4,1\n", NodeFormat::Csv, "test");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("test:3") != std::string::npos);
  }
  try {
    parse_nodes_text("id,x,y,w,h\ngood,1,2,1,1\nbad1,3,4,0,1\nbad2,5,6,1,-2\n", NodeFormat::Csv, "test");
    FAIL("expected validation error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad1") != std::string::npos);
    CHECK(msg.find("bad2") != std::string::npos);
    CHECK(msg.find("good") == std::string::npos);
  }
  CHECK_THROWS_AS(parse_nodes_text("a,1,2,1,1\n", NodeFormat::Csv, "test"), Error);
}

TEST_CASE("extent directive is honored and centers outside it rejected") {
  NodeSet set = parse_nodes_text("#extent 0 0 10 10\nid,x,y,w,h\na,5,5,1,1\n", NodeFormat::Csv, "test");
  CHECK(set.extent.x1 == 10.0);
  CHECK_THROWS_AS(parse_nodes_text("#extent 0 0 10 10\nid,x,y,w,h\na,15,5,1,1\n", NodeFormat::Csv, "test"), Error);
}

TEST_CASE("node files round-trip bit-exactly through both formats") {
  NodeSet set = random_nodes(42, 10000);
  for (NodeFormat format : {NodeFormat::Csv, NodeFormat::Jsonl}) {
    const fs::path path = temp_dir() / (format == NodeFormat::Csv ? "rt.csv" : "rt.jsonl");
    write_nodes(path.string(), set, format);
    NodeSet back = parse_nodes(path.string(), format);
    REQUIRE(back.size() == set.size());
    CHECK(back.extent.x0 == set.extent.x0);
    CHECK(back.extent.y1 == set.extent.y1);
    for (int64_t i = 0; i < set.size(); ++i) {
      CHECK(back.nodes[i].id == set.nodes[i].id);
      CHECK(back.nodes[i].x == set.nodes[i].x);
      CHECK(back.nodes[i].y == set.nodes[i].y);
      CHECK(back.nodes[i].w == set.nodes[i].w);
      CHECK(back.nodes[i].h == set.nodes[i].h);
    }
  }
}

TEST_CASE("normalize maps linearly and clamps the max edge into the last cell") {
  NodeSet set;
  set.extent = {0, 0, 10, 10};
  set.nodes.push_back({"c", 5, 5, 1, 1});
  set.nodes.push_back({"edge", 10, 10, 1, 1});
  NormalizedCoords coords = normalize(set, 10, 10);
  CHECK(coords.x[0] == doctest::Approx(5.0));
  CHECK(coords.y[0] == doctest::Approx(5.0));
  CHECK(coords.x[1] < 10.0);
  CHECK(static_cast<int64_t>(std::floor(coords.x[1])) == 9);

  NodeSet degenerate;
  degenerate.extent = {3, 0, 3, 10};
  CHECK_THROWS_AS(normalize(degenerate, 4, 4), Error);
}

TEST_CASE("normalize inverts to 1e-9 relative and preserves order") {
  NodeSet set = random_nodes(7, 500);
  NormalizedCoords coords = normalize(set, 64, 64);
  for (int64_t i = 0; i < set.size(); ++i) {
    const double back = coords.x[i] / 64.0 * set.extent.width() + set.extent.x0;
    CHECK(std::abs(back - set.nodes[i].x) <= 1e-9 * std::max(1.0, std::abs(set.nodes[i].x)));
  }
  for (int64_t i = 1; i < set.size(); ++i)
    if (set.nodes[i].x > set.nodes[i - 1].x) CHECK(coords.x[i] >= coords.x[i - 1]);
}

TEST_CASE("assign_grid floors into cells") {
  NormalizedCoords coords;
  coords.w_cells = coords.h_cells = 16;
  coords.x = {3.7, 0.0};
  coords.y = {5.2, 0.0};
  GridAssignment ga = assign_grid(coords, {2, 2});
  CHECK(ga.grid_w == 8);
  // point (3.7, 5.2) with d=2 -> grid (1, 2); point (0,0) -> grid (0,0)
  CHECK(ga.cell_of_segment[ga.segment_of[0]] == 2 * 8 + 1);
  CHECK(ga.cell_of_segment[ga.segment_of[1]] == 0);
}

TEST_CASE("assign_grid matches hash-map grouping on 1000 random points") {
  std::mt19937_64 rng(3);
  NormalizedCoords coords;
  coords.w_cells = coords.h_cells = 64;
  std::uniform_real_distribution<double> u(0.0, 64.0 - 1e-9);
  for (int i = 0; i < 1000; ++i) {
    coords.x.push_back(u(rng));
    coords.y.push_back(u(rng));
  }
  const GridSpec spec{4, 4};
  GridAssignment ga = assign_grid(coords, spec);

  std::unordered_map<int64_t, std::vector<int64_t>> groups;
  for (int64_t i = 0; i < coords.size(); ++i) {
    const int64_t gx = static_cast<int64_t>(std::floor(coords.x[i] / 4.0));
    const int64_t gy = static_cast<int64_t>(std::floor(coords.y[i] / 4.0));
    groups[gy * ga.grid_w + gx].push_back(i);
  }
  REQUIRE(ga.num_segments() == static_cast<int64_t>(groups.size()));
  for (int64_t i = 0; i < coords.size(); ++i) {
    const int64_t cell = ga.cell_of_segment[ga.segment_of[i]];
    auto it = groups.find(cell);
    REQUIRE(it != groups.end());
    CHECK(std::find(it->second.begin(), it->second.end(), i) != it->second.end());
  }
  // m <= min(n, w*h)
  CHECK(ga.num_segments() <= std::min<int64_t>(coords.size(), ga.grid_w * ga.grid_h));
}

TEST_CASE("coarsening the grid never increases the segment count") {
  NodeSet set = random_nodes(11, 800);
  NormalizedCoords coords = normalize(set, 64, 64);
  int64_t prev = std::numeric_limits<int64_t>::max();
  for (int64_t d : {1, 2, 4, 8}) {
    const int64_t m = assign_grid(coords, {d, d}).num_segments();
    CHECK(m <= prev);
    prev = m;
  }
}

TEST_CASE("grids round-trip: text to 1e-6, binary bit-exact") {
  LabelGrid grid = LabelGrid::zeros(2, 2);
  grid.values = {0.0, 1.0, 0.5, 0.25};
  const fs::path txt = temp_dir() / "g.txt", bin = temp_dir() / "g.cfg1";
  save_grid(txt.string(), grid);
  save_grid(bin.string(), grid);
  LabelGrid from_text = load_grid(txt.string());
  LabelGrid from_bin = load_grid(bin.string());
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(from_text.values[i] - grid.values[i]) < 1e-6);
    CHECK(from_bin.values[i] == grid.values[i]);  // exactly representable in f32
  }

  // random f32-valued 64x64 grid round-trips binary exactly
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LabelGrid big = LabelGrid::zeros(64, 64);
  for (double& v : big.values) v = static_cast<double>(static_cast<float>(u(rng)));
  const fs::path big_path = temp_dir() / "big.cfg1";
  save_grid(big_path.string(), big);
  LabelGrid big_back = load_grid(big_path.string());
  for (int64_t i = 0; i < big.cells(); ++i) CHECK(big_back.values[i] == big.values[i]);
}

TEST_CASE("pgm export of a constant-zero grid is all zero pixels") {
  LabelGrid grid = LabelGrid::zeros(4, 3);
  const fs::path path = temp_dir() / "z.pgm";
  save_grid(path.string(), grid);
  std::ifstream in(path, std::ios::binary);
  std::string magic, dims;
  int w, h, maxval;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P5");
  CHECK(w == 4);
  CHECK(h == 3);
  CHECK(maxval == 255);
  in.get();  // single whitespace after header
  for (int i = 0; i < 12; ++i) CHECK(in.get() == 0);
}

TEST_CASE("grid format errors and range policy") {
  const fs::path bad = temp_dir() / "bad.cfg1";
  std::ofstream(bad, std::ios::binary) << "NOPE1234";
  CHECK_THROWS_AS(load_grid(bad.string()), Error);

  LabelGrid out_of_range = LabelGrid::zeros(2, 1);
  out_of_range.values = {1.5, 0.5};
  // strict save (predictions) rejects
  CHECK_THROWS_AS(save_grid((temp_dir() / "strict.cfg1").string(), out_of_range, true), Error);
  // label save clamps with a warning
  const fs::path lenient = temp_dir() / "lenient.txt";
  save_grid(lenient.string(), out_of_range, false);
  CHECK(load_grid(lenient.string()).values[0] == 1.0);
}

TEST_CASE("gen_synthetic is deterministic per seed") {
  SyntheticSample a = gen_synthetic(99, 500, 4, 32, 32);
  SyntheticSample b = gen_synthetic(99, 500, 4, 32, 32);
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (int64_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes.nodes[i].x == b.nodes.nodes[i].x);
    CHECK(a.nodes.nodes[i].w == b.nodes.nodes[i].w);
  }
  for (int64_t i = 0; i < a.label.cells(); ++i) CHECK(a.label.values[i] == b.label.values[i]);
  SyntheticSample c = gen_synthetic(100, 500, 4, 32, 32);
  bool any_diff = false;
  for (int64_t i = 0; i < c.nodes.size(); ++i) any_diff = any_diff || c.nodes.nodes[i].x != a.nodes.nodes[i].x;
  CHECK(any_diff);
}

TEST_CASE("gen_synthetic: single cluster puts the label peak near the node mass") {
  SyntheticSample s = gen_synthetic(12, 2000, 1, 64, 64);
  double cx = 0, cy = 0;
  for (const Node& n : s.nodes.nodes) {
    cx += n.x;
    cy += n.y;
  }
  cx /= static_cast<double>(s.nodes.size());
  cy /= static_cast<double>(s.nodes.size());
  int64_t best = 0;
  for (int64_t i = 1; i < s.label.cells(); ++i)
    if (s.label.values[i] > s.label.values[best]) best = i;
  const double bx = static_cast<double>(best % s.label.w) + 0.5;
  const double by = static_cast<double>(best / s.label.w) + 0.5;
  // the uniform background pulls the centroid toward the map center by up
  // to half the cluster offset, so the bound is loose
  CHECK(std::abs(bx - cx) < 14.0);
  CHECK(std::abs(by - cy) < 14.0);
}

TEST_CASE("gen_synthetic label equals an independent rasterize+blur recomputation") {
  SyntheticSample s = gen_synthetic(31, 700, 5, 48, 48);
  const int64_t W = 48, H = 48;
  // independent rasterization: per-node area into the cell owning its center
  LabelGrid density = LabelGrid::zeros(W, H);
  for (const Node& n : s.nodes.nodes) {
    const int64_t cx = std::min<int64_t>(W - 1, static_cast<int64_t>(std::floor(n.x)));
    const int64_t cy = std::min<int64_t>(H - 1, static_cast<int64_t>(std::floor(n.y)));
    density.at(cx, cy) += n.w * n.h;
  }
  // independent separable blur, zero padded, sigma 1
  double k[5], total = 0;
  for (int i = -2; i <= 2; ++i) total += (k[i + 2] = std::exp(-i * i / 2.0));
  for (double& v : k) v /= total;
  LabelGrid hpass = LabelGrid::zeros(W, H), blurred = LabelGrid::zeros(W, H);
  for (int64_t y = 0; y < H; ++y)
    for (int64_t x = 0; x < W; ++x) {
      double acc = 0;
      for (int i = -2; i <= 2; ++i)
        if (x + i >= 0 && x + i < W) acc += k[i + 2] * density.at(x + i, y);
      hpass.at(x, y) = acc;
    }
  double mx = 0;
  for (int64_t y = 0; y < H; ++y)
    for (int64_t x = 0; x < W; ++x) {
      double acc = 0;
      for (int i = -2; i <= 2; ++i)
        if (y + i >= 0 && y + i < H) acc += k[i + 2] * hpass.at(x, y + i);
      blurred.at(x, y) = acc;
      mx = std::max(mx, acc);
    }
  for (int64_t i = 0; i < blurred.cells(); ++i) CHECK(s.label.values[i] == blurred.values[i] / mx);
}
