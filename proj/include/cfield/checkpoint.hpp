#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cfield/model.hpp"
#include "cfield/trainer.hpp"

namespace cfield {

// Versioned binary container: magic `CFCK`, u32 version, then length-prefixed
// named sections. All integers and floats are little-endian.
//
//   section        payload
//   -------        -------
//   meta           JSON: {"version","epoch","global_step","best_val",
//                  "best_epoch","dtype"}
//   config         JSON config document (train/encoder/decoder)
//   params         u64 count, then per tensor: name, dtype, shape, raw data
//   adamw          u64 step, then m and v tensors in parameter order
//   lds            u8 enabled, f64 bin_width, u64 bins, f64 weights
//   rng            serialized master RNG state
struct CheckpointData {
  std::string meta_json;
  std::string config_json;
  std::vector<std::pair<std::string, Tensor>> params;
  int64_t adam_step = 0;
  std::vector<Tensor> adam_m, adam_v;
  bool lds_enabled = false;
  double lds_bin_width = 0.001;
  std::vector<double> lds_weights;
  std::string rng_state;
};

void write_checkpoint_file(const std::string& path, const CheckpointData& data);
CheckpointData read_checkpoint_file(const std::string& path);

// Bundles the live training state into a checkpoint and back. config_json is
// stored verbatim so a resumed run sees the exact original configuration.
void save_checkpoint(const std::string& path, const TrainState& state, const std::string& config_json);
TrainState load_checkpoint(const std::string& path, std::string* config_json_out = nullptr);

}  // namespace cfield
