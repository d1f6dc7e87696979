#pragma once

#include <string>

#include "cfield/decoder.hpp"
#include "cfield/encoder.hpp"
#include "cfield/trainer.hpp"

namespace cfield {

// One JSON document configures the whole pipeline:
//   {"train": {...}, "encoder": {...}, "decoder": {...}}
// Unknown keys are rejected with the offending key name.
struct AppConfig {
  TrainConfig train;
  EncoderConfig encoder;
  DecoderConfig decoder;

  void validate() const;
};

AppConfig parse_config(const std::string& json_text);
AppConfig parse_config_file(const std::string& path);
std::string config_to_json(const AppConfig& config);

// Small-model profile that trains on a laptop CPU: d_model 32, k 4,
// 64x64 base grid, decoder widths 16..128.
AppConfig desk_config();

}  // namespace cfield
