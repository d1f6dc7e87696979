#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "cfield/checkpoint.hpp"
#include "cfield/config.hpp"
#include "cfield/synthetic.hpp"
#include "cfield/trainer.hpp"

using namespace cfield;
namespace fs = std::filesystem;

namespace {

Dataset tiny_dataset(int64_t count, int64_t nodes, int64_t res, uint64_t seed = 100) {
  Dataset data;
  for (int64_t i = 0; i < count; ++i) {
    SyntheticSample s = gen_synthetic(seed + static_cast<uint64_t>(i), nodes, 2, res, res);
    data.samples.push_back({"s" + std::to_string(i), std::move(s.nodes), std::move(s.label)});
  }
  return data;
}

AppConfig tiny_config() {
  AppConfig cfg;
  cfg.encoder.n_stages = 1;
  cfg.encoder.grid_scales = {2};
  cfg.encoder.d_model = 4;
  cfg.encoder.k = 2;
  cfg.encoder.base_w = cfg.encoder.base_h = 8;
  cfg.decoder.widths = {4, 8};
  cfg.decoder.blocks = {1, 1};
  cfg.train.epochs = 4;
  cfg.train.warmup_epochs = 1;
  cfg.train.batch_size = 2;
  cfg.train.val_fraction = 0.0;
  cfg.train.seed = 5;
  return cfg;
}

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / "cfield_trainer_tests";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("learning-rate schedule: ramp, peak, decay to ~0, continuity") {
  const int64_t total = 1000, warmup = 100;
  const double base = 0.001;
  CHECK(lr_at(0, total, warmup, base) == 0.0);
  CHECK(lr_at(warmup, total, warmup, base) == base);
  CHECK(lr_at(total, total, warmup, base) <= 1e-9 * base);
  // continuous at the warmup boundary: one-step jump stays at ramp slope
  const double step_size = base / static_cast<double>(warmup);
  CHECK(std::abs(lr_at(warmup, total, warmup, base) - lr_at(warmup - 1, total, warmup, base)) <=
        step_size + 1e-15);
  // monotone decay after warmup
  double prev = base;
  for (int64_t s = warmup; s <= total; s += 50) {
    const double lr = lr_at(s, total, warmup, base);
    CHECK(lr <= prev + 1e-15);
    prev = lr;
  }
}

TEST_CASE("AdamW with zero gradient changes parameters only by weight decay") {
  std::vector<NamedParam> params;
  Tensor p = Tensor::from({2}, {1.0, -2.0}).set_requires_grad(true);
  params.push_back({"p", p});
  AdamW opt;
  opt.init(params);
  std::vector<Buffer> grads;
  grads.emplace_back(Dtype::F64, 2);  // zeros
  const double lr = 0.01, wd = 0.1;
  opt.update(params, grads, lr, wd);
  CHECK(p.at(0) == 1.0 - lr * wd * 1.0);
  CHECK(p.at(1) == -2.0 - lr * wd * -2.0);
}

TEST_CASE("a few optimizer steps reduce the loss on a tiny dataset") {
  AppConfig cfg = tiny_config();
  cfg.train.epochs = 60;
  cfg.train.warmup_epochs = 5;
  cfg.train.base_lr = 0.01;
  Dataset data = tiny_dataset(2, 30, 8);
  TrainState state;
  state.model = Model::create(cfg.encoder, cfg.decoder, cfg.train.seed, Dtype::F64);
  train_model(state, data, cfg.train);
  REQUIRE(state.history.size() == 60);
  const double first = state.history.front().train_loss;
  const double last = state.history.back().train_loss;
  CHECK(last < 0.5 * first);
}

TEST_CASE("training aborts with a diagnostic on non-finite loss") {
  AppConfig cfg = tiny_config();
  Dataset data = tiny_dataset(2, 20, 8);
  TrainState state;
  state.model = Model::create(cfg.encoder, cfg.decoder, cfg.train.seed, Dtype::F64);
  // poison the final bias; upstream NaN would be laundered to 0 by relu
  for (NamedParam& p : state.model.params())
    if (p.name == "decoder.final.b") p.tensor.buf().set(0, std::numeric_limits<double>::quiet_NaN());
  try {
    train_model(state, data, cfg.train);
    FAIL("expected abort");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    CHECK(std::string(e.what()).find("s0") != std::string::npos);  // offending batch listed
  }
}

TEST_CASE("checkpoint round-trip preserves params, moments, lds and meta") {
  AppConfig cfg = tiny_config();
  Dataset data = tiny_dataset(3, 25, 8);
  TrainState state;
  state.model = Model::create(cfg.encoder, cfg.decoder, cfg.train.seed, Dtype::F64);
  cfg.train.epochs = 2;
  cfg.train.warmup_epochs = 1;
  train_model(state, data, cfg.train);

  const fs::path path = temp_dir() / "round.cfck";
  save_checkpoint(path.string(), state, config_to_json(cfg));
  std::string config_json;
  TrainState back = load_checkpoint(path.string(), &config_json);

  CHECK(back.next_epoch == state.next_epoch);
  CHECK(back.best_epoch == state.best_epoch);
  CHECK(back.rng_state == state.rng_state);
  CHECK(back.optimizer.step() == state.optimizer.step());
  CHECK(back.history.size() == state.history.size());
  auto& a = state.model.params();
  auto& b = back.model.params();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    for (int64_t j = 0; j < a[i].tensor.numel(); ++j) CHECK(a[i].tensor.at(j) == b[i].tensor.at(j));
  }
  for (size_t i = 0; i < a.size(); ++i)
    for (int64_t j = 0; j < a[i].tensor.numel(); ++j) {
      CHECK(state.optimizer.moments_m()[i].at(j) == back.optimizer.moments_m()[i].at(j));
      CHECK(state.optimizer.moments_v()[i].at(j) == back.optimizer.moments_v()[i].at(j));
    }
  CHECK(back.model.lds().weights() == state.model.lds().weights());
  CHECK(parse_config(config_json).train.epochs == 2);
}

TEST_CASE("interrupt + resume reproduces uninterrupted training bit-exactly") {
  AppConfig cfg = tiny_config();
  Dataset data = tiny_dataset(4, 25, 8);

  TrainState full;
  full.model = Model::create(cfg.encoder, cfg.decoder, cfg.train.seed, Dtype::F64);
  train_model(full, data, cfg.train);

  TrainState part;
  part.model = Model::create(cfg.encoder, cfg.decoder, cfg.train.seed, Dtype::F64);
  train_model(part, data, cfg.train, {}, /*stop_after_epoch=*/1);
  CHECK(part.next_epoch == 2);
  const fs::path path = temp_dir() / "interrupt.cfck";
  save_checkpoint(path.string(), part, config_to_json(cfg));
  TrainState resumed = load_checkpoint(path.string());
  train_model(resumed, data, cfg.train);

  auto& a = full.model.params();
  auto& b = resumed.model.params();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    for (int64_t j = 0; j < a[i].tensor.numel(); ++j) CHECK(a[i].tensor.at(j) == b[i].tensor.at(j));
  CHECK(full.history.size() == resumed.history.size());
  CHECK(full.best_epoch == resumed.best_epoch);
}

TEST_CASE("lds on/off changes the training trajectory on skewed labels") {
  AppConfig cfg = tiny_config();
  cfg.train.epochs = 2;
  cfg.train.warmup_epochs = 1;
  Dataset data = tiny_dataset(2, 40, 8);
  // skew the labels hard toward zero with a small hot region
  for (auto& sample : data.samples) {
    for (double& v : sample.label.values) v *= 0.05;
    sample.label.values[3] = 0.95;
  }
  TrainState with_lds, without_lds;
  with_lds.model = Model::create(cfg.encoder, cfg.decoder, cfg.train.seed, Dtype::F64);
  without_lds.model = Model::create(cfg.encoder, cfg.decoder, cfg.train.seed, Dtype::F64);
  cfg.train.lds = true;
  train_model(with_lds, data, cfg.train);
  cfg.train.lds = false;
  train_model(without_lds, data, cfg.train);

  bool differs = false;
  auto& a = with_lds.model.params();
  auto& b = without_lds.model.params();
  for (size_t i = 0; i < a.size() && !differs; ++i)
    for (int64_t j = 0; j < a[i].tensor.numel() && !differs; ++j)
      differs = a[i].tensor.at(j) != b[i].tensor.at(j);
  CHECK(differs);
}

TEST_CASE("worker count does not change training results") {
  AppConfig cfg = tiny_config();
  cfg.train.epochs = 2;
  cfg.train.warmup_epochs = 1;
  cfg.train.batch_size = 4;
  Dataset data = tiny_dataset(4, 25, 8);

  set_thread_count(1);
  TrainState single;
  single.model = Model::create(cfg.encoder, cfg.decoder, cfg.train.seed, Dtype::F64);
  train_model(single, data, cfg.train);

  set_thread_count(2);
  TrainState multi;
  multi.model = Model::create(cfg.encoder, cfg.decoder, cfg.train.seed, Dtype::F64);
  train_model(multi, data, cfg.train);
  set_thread_count(0);

  auto& a = single.model.params();
  auto& b = multi.model.params();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    for (int64_t j = 0; j < a[i].tensor.numel(); ++j) CHECK(a[i].tensor.at(j) == b[i].tensor.at(j));
}

TEST_CASE("validation split is deterministic and sized by fraction") {
  Dataset data = tiny_dataset(10, 10, 8);
  TrainConfig cfg;
  cfg.val_fraction = 0.2;
  cfg.seed = 9;
  std::vector<int64_t> train_a, val_a, train_b, val_b;
  split_dataset(data, cfg, train_a, val_a);
  split_dataset(data, cfg, train_b, val_b);
  CHECK(val_a.size() == 2);
  CHECK(train_a.size() == 8);
  CHECK(val_a == val_b);
  CHECK(train_a == train_b);
}

TEST_CASE("dataset loading pairs files by stem and skips orphans") {
  const fs::path dir = temp_dir() / "ds";
  fs::create_directories(dir);
  SyntheticSample s = gen_synthetic(1, 20, 2, 8, 8);
  write_nodes((dir / "a.csv").string(), s.nodes);
  save_grid((dir / "a.cfg1").string(), s.label);
  write_nodes((dir / "orphan.csv").string(), s.nodes);
  Dataset data = load_dataset(dir.string());
  CHECK(data.size() == 1);
  CHECK(data.samples[0].name == "a");

  const fs::path empty = temp_dir() / "empty";
  fs::create_directories(empty);
  CHECK_THROWS_AS(load_dataset(empty.string()), Error);
}
