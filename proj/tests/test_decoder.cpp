#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cfield/decoder.hpp"
#include "cfield/gradcheck_suites.hpp"

using namespace cfield;

namespace {

int64_t param_count(const DecoderConfig& cfg, int64_t in_channels) {
  std::mt19937_64 rng(1);
  DecoderParams params = init_decoder(cfg, in_channels, rng, Dtype::F64);
  std::vector<NamedParam> named;
  collect_decoder_params(params, named);
  int64_t total = 0;
  for (const auto& p : named) total += p.tensor.numel();
  return total;
}

Tensor random_raster(int64_t c, int64_t h, int64_t w, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor t = Tensor::zeros({c, h, w});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int64_t i = 0; i < t.numel(); ++i) t.buf().set(i, u(rng));
  return t;
}

}  // namespace

TEST_CASE("output spatial shape equals input spatial shape at 64x64 with 4 levels") {
  DecoderConfig cfg;
  cfg.widths = {16, 32, 64, 128};
  std::mt19937_64 rng(2);
  DecoderParams params = init_decoder(cfg, 32, rng, Dtype::F64);
  Tensor pred = decoder_forward(nullptr, random_raster(32, 64, 64, 3), cfg, params);
  CHECK(pred.shape() == std::vector<int64_t>{64, 64});
}

TEST_CASE("all-zero input with fresh zero biases gives exactly 0.5 everywhere") {
  DecoderConfig cfg;
  cfg.widths = {4, 8};
  cfg.blocks = {1, 1};
  std::mt19937_64 rng(4);
  DecoderParams params = init_decoder(cfg, 4, rng, Dtype::F64);
  Tensor pred = decoder_forward(nullptr, Tensor::zeros({4, 8, 8}), cfg, params);
  for (int64_t i = 0; i < pred.numel(); ++i) CHECK(pred.at(i) == 0.5);
}

TEST_CASE("outputs lie strictly inside (0,1)") {
  DecoderConfig cfg;
  cfg.widths = {8, 16, 32};
  cfg.blocks = {1, 1, 1};
  std::mt19937_64 rng(5);
  DecoderParams params = init_decoder(cfg, 8, rng, Dtype::F64);
  Tensor pred = decoder_forward(nullptr, random_raster(8, 16, 16, 6), cfg, params);
  for (int64_t i = 0; i < pred.numel(); ++i) {
    CHECK(pred.at(i) > 0.0);
    CHECK(pred.at(i) < 1.0);
  }
}

TEST_CASE("non-divisible extents are padded and cropped back") {
  DecoderConfig cfg;
  cfg.widths = {4, 8, 16};
  cfg.blocks = {1, 1, 1};
  std::mt19937_64 rng(7);
  DecoderParams params = init_decoder(cfg, 4, rng, Dtype::F64);
  Tensor pred = decoder_forward(nullptr, random_raster(4, 10, 13, 8), cfg, params);
  CHECK(pred.shape() == std::vector<int64_t>{10, 13});
}

TEST_CASE("plain-skip head works and is smaller than nested-skip") {
  DecoderConfig nested;
  nested.widths = {8, 16, 32, 64};
  DecoderConfig plain = nested;
  plain.head = "plain-skip";
  std::mt19937_64 rng(9);
  DecoderParams params = init_decoder(plain, 8, rng, Dtype::F64);
  Tensor pred = decoder_forward(nullptr, random_raster(8, 16, 16, 10), plain, params);
  CHECK(pred.shape() == std::vector<int64_t>{16, 16});
  CHECK(param_count(plain, 8) < param_count(nested, 8));
}

TEST_CASE("parameter count grows monotonically with the depth profile") {
  DecoderConfig cfg;
  cfg.widths = {8, 16};
  int64_t prev = 0;
  for (int blocks : {1, 2, 3}) {
    cfg.blocks = {blocks, blocks};
    const int64_t count = param_count(cfg, 8);
    CHECK(count > prev);
    prev = count;
  }
}

TEST_CASE("channel mismatch between raster and stem is a configuration error") {
  DecoderConfig cfg;
  cfg.widths = {4, 8};
  cfg.blocks = {1, 1};
  std::mt19937_64 rng(11);
  DecoderParams params = init_decoder(cfg, 4, rng, Dtype::F64);
  try {
    decoder_forward(nullptr, random_raster(6, 8, 8, 12), cfg, params);
    FAIL("expected configuration error");
  } catch (const Error& e) {
    CHECK(e.status() == Status::Config);
  }
  DecoderConfig empty_widths;
  empty_widths.blocks = {1};
  empty_widths.widths = {};
  CHECK_THROWS_AS(empty_widths.validate(), Error);
}

TEST_CASE("tiny 2-level decoder passes the gradient check at 1e-4") {
  SuiteSummary summary = run_gradcheck_suite("decoder", 1e-4);
  for (const SuiteResult& r : summary.results) CHECK(r.report.pass);
}
