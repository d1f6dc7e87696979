#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cfield/model.hpp"

namespace cfield {

struct TrainConfig {
  int epochs = 100;
  int warmup_epochs = 10;
  double base_lr = 0.001;
  double weight_decay = 0.01;
  int batch_size = 4;
  uint64_t seed = 1;
  std::string precision = "f64";  // "f32" | "f64"
  bool lds = true;
  double lds_bin_width = 0.001;
  int lds_kernel = 5;
  double lds_sigma = 2.0;
  double val_fraction = 0.1;
  double clip_norm = 5.0;  // global-norm gradient clip, 0 disables

  Dtype dtype() const;
  void validate() const;
};

// Linear warmup to base_lr, then cosine decay to ~0. Steps count optimizer
// updates; continuous at the warmup boundary.
double lr_at(int64_t step, int64_t total_steps, int64_t warmup_steps, double base_lr);

// Decoupled-weight-decay Adam. Moments live in the parameter dtype so
// checkpoints restore training bit-exactly.
class AdamW {
 public:
  void init(const std::vector<NamedParam>& params);
  bool initialized() const { return !m_.empty(); }
  int64_t step() const { return step_; }

  // grads[i] pairs with params[i]; one optimizer update.
  void update(std::vector<NamedParam>& params, const std::vector<Buffer>& grads, double lr, double weight_decay);

  std::vector<Tensor>& moments_m() { return m_; }
  std::vector<Tensor>& moments_v() { return v_; }
  const std::vector<Tensor>& moments_m() const { return m_; }
  const std::vector<Tensor>& moments_v() const { return v_; }
  void set_step(int64_t step) { step_ = step; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  int64_t step_ = 0;
  std::vector<Tensor> m_, v_;
};

struct TrainSample {
  std::string name;
  NodeSet nodes;
  LabelGrid label;
};

struct Dataset {
  std::vector<TrainSample> samples;
  int64_t size() const { return static_cast<int64_t>(samples.size()); }
};

// Pairs <stem>.csv / <stem>.jsonl node files with <stem>.cfg1 / <stem>.txt
// labels; unpaired files are warned about and skipped.
Dataset load_dataset(const std::string& dir);

struct EpochStats {
  int64_t epoch = 0;
  double train_loss = 0.0;
  double val_pearson = 0.0;  // NaN when there is no validation split
  double lr = 0.0;
};

struct TrainState {
  Model model;
  AdamW optimizer;
  int64_t next_epoch = 0;
  double best_val = 0.0;
  int64_t best_epoch = -1;
  std::string rng_state;  // master shuffle RNG, serialized
  std::vector<EpochStats> history;
};

// Deterministic seeded split: val gets round(val_fraction * n) samples.
void split_dataset(const Dataset& data, const TrainConfig& config, std::vector<int64_t>& train_idx,
                   std::vector<int64_t>& val_idx);

// Runs epochs [state.next_epoch, config.epochs). Builds the LDS table from
// the training split on a fresh run. on_epoch (optional) fires after each
// epoch with the updated state, e.g. to write checkpoints. stop_after_epoch
// (0-based, inclusive) interrupts at that epoch boundary, leaving the state
// resumable; -1 runs to completion.
void train_model(TrainState& state, const Dataset& data, const TrainConfig& config,
                 const std::function<void(const TrainState&, const EpochStats&)>& on_epoch = {},
                 int64_t stop_after_epoch = -1);

std::string history_to_json(const std::vector<EpochStats>& history);

}  // namespace cfield
