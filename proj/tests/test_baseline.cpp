#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cfield/baseline.hpp"
#include "cfield/synthetic.hpp"

using namespace cfield;

namespace {

NodeSet make_nodes(std::vector<Node> nodes, Extent extent) {
  NodeSet set;
  set.nodes = std::move(nodes);
  set.extent = extent;
  return set;
}

}  // namespace

TEST_CASE("one cell-sized node centered in a cell lights exactly that cell") {
  NodeSet set = make_nodes({{"a", 2.5, 1.5, 1.0, 1.0}}, {0, 0, 4, 4});
  LabelGrid map = cell_density_map(set, 4, 4);
  for (int64_t y = 0; y < 4; ++y)
    for (int64_t x = 0; x < 4; ++x) CHECK(map.at(x, y) == (x == 2 && y == 1 ? 1.0 : 0.0));
}

TEST_CASE("two-cell straddle fixture gives the 0.5/0.5 map") {
  // anchor node fully covers one cell; the straddler splits across two
  NodeSet set = make_nodes({{"anchor", 0.5, 3.5, 1.0, 1.0}, {"straddle", 2.0, 0.5, 1.0, 1.0}}, {0, 0, 4, 4});
  LabelGrid map = cell_density_map(set, 4, 4);
  CHECK(map.at(0, 3) == doctest::Approx(1.0));
  CHECK(map.at(1, 0) == doctest::Approx(0.5));
  CHECK(map.at(2, 0) == doctest::Approx(0.5));
  double total = 0;
  for (double v : map.values) total += v;
  CHECK(total == doctest::Approx(2.0));
}

TEST_CASE("density matches a per-cell analytic rectangle-intersection loop to 1e-9") {
  SyntheticSample s = gen_synthetic(21, 400, 4, 32, 32);
  LabelGrid got = density_raster(s.nodes, 32, 32);
  for (int64_t cy = 0; cy < 32; ++cy)
    for (int64_t cx = 0; cx < 32; ++cx) {
      double want = 0.0;
      for (const Node& n : s.nodes.nodes) {
        const double x0 = std::max(static_cast<double>(cx), n.x - n.w / 2);
        const double x1 = std::min(static_cast<double>(cx + 1), n.x + n.w / 2);
        const double y0 = std::max(static_cast<double>(cy), n.y - n.h / 2);
        const double y1 = std::min(static_cast<double>(cy + 1), n.y + n.h / 2);
        if (x0 < x1 && y0 < y1) want += (x1 - x0) * (y1 - y0);
      }
      CHECK(std::abs(got.at(cx, cy) - want) < 1e-9);
    }
}

TEST_CASE("pre-normalization density mass equals total clipped node area") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> pos(5.0, 59.0), size(0.2, 3.0);
  NodeSet set;
  set.extent = {0, 0, 64, 64};
  double expected_area = 0.0;
  for (int i = 0; i < 300; ++i) {
    Node n{"n" + std::to_string(i), pos(rng), pos(rng), size(rng), size(rng)};
    expected_area += n.w * n.h;  // interior nodes: no clipping
    set.nodes.push_back(std::move(n));
  }
  LabelGrid raster = density_raster(set, 64, 64);
  double mass = 0.0;
  for (double v : raster.values) mass += v;
  CHECK(std::abs(mass - expected_area) < 1e-9 * expected_area);
}

TEST_CASE("density is additive over disjoint node subsets before normalization") {
  SyntheticSample s = gen_synthetic(23, 200, 3, 16, 16);
  NodeSet first = s.nodes, second = s.nodes;
  first.nodes.resize(100);
  second.nodes.erase(second.nodes.begin(), second.nodes.begin() + 100);
  LabelGrid all = density_raster(s.nodes, 16, 16);
  LabelGrid a = density_raster(first, 16, 16);
  LabelGrid b = density_raster(second, 16, 16);
  for (int64_t i = 0; i < all.cells(); ++i)
    CHECK(std::abs(all.values[i] - (a.values[i] + b.values[i])) < 1e-12);
}

TEST_CASE("rudy: 2x1 bounding box spreads 1.5 over both cells") {
  NodeSet set = make_nodes({{"a", 0.0, 0.5, 0.1, 0.1}, {"b", 2.0, 0.5, 0.1, 0.1}}, {0, 0, 4, 4});
  // centers at cells 0 and 2, so the box is [0,2] x one padded row
  LabelGrid raster = rudy_raster({{"net0", {"a", "b"}}}, set, 4, 4);
  CHECK(raster.at(0, 0) == doctest::Approx(1.5));
  CHECK(raster.at(1, 0) == doctest::Approx(1.5));
  CHECK(raster.at(2, 0) == doctest::Approx(0.0));
}

TEST_CASE("rudy: coincident pins snap to one full cell with density 2") {
  NodeSet set = make_nodes({{"a", 1.5, 2.5, 0.1, 0.1}, {"b", 1.5, 2.5, 0.1, 0.1}}, {0, 0, 4, 4});
  LabelGrid raster = rudy_raster({{"net0", {"a", "b"}}}, set, 4, 4);
  for (int64_t y = 0; y < 4; ++y)
    for (int64_t x = 0; x < 4; ++x) CHECK(raster.at(x, y) == doctest::Approx(x == 1 && y == 2 ? 2.0 : 0.0));
}

TEST_CASE("rudy is additive over disjoint nets") {
  NodeSet set = make_nodes({{"a", 0.5, 0.5, 0.1, 0.1},
                            {"b", 2.5, 0.5, 0.1, 0.1},
                            {"c", 0.5, 3.5, 0.1, 0.1},
                            {"d", 3.5, 3.5, 0.1, 0.1}},
                           {0, 0, 4, 4});
  std::vector<Net> n1 = {{"n1", {"a", "b"}}};
  std::vector<Net> n2 = {{"n2", {"c", "d"}}};
  std::vector<Net> both = {{"n1", {"a", "b"}}, {"n2", {"c", "d"}}};
  LabelGrid r1 = rudy_raster(n1, set, 4, 4);
  LabelGrid r2 = rudy_raster(n2, set, 4, 4);
  LabelGrid rb = rudy_raster(both, set, 4, 4);
  for (int64_t i = 0; i < rb.cells(); ++i)
    CHECK(std::abs(rb.values[i] - (r1.values[i] + r2.values[i])) < 1e-12);
}

TEST_CASE("rudy error paths") {
  NodeSet set = make_nodes({{"a", 0.5, 0.5, 0.1, 0.1}, {"b", 1.5, 0.5, 0.1, 0.1}}, {0, 0, 4, 4});
  CHECK_THROWS_AS(rudy_raster({{"bad", {"a", "missing"}}}, set, 4, 4), Error);
  CHECK_THROWS_AS(parse_nets_text("{\"net\":\"n\",\"nodes\":[\"a\"]}\n", "test"), Error);
  std::vector<Net> nets = parse_nets_text("{\"net\":\"n\",\"nodes\":[\"a\",\"b\"]}\n", "test");
  CHECK(nets.size() == 1);
  CHECK(nets[0].node_ids.size() == 2);
}
