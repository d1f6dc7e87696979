#pragma once

#include <cstdint>
#include <vector>

#include "cfield/decoder.hpp"
#include "cfield/encoder.hpp"
#include "cfield/grid.hpp"
#include "cfield/lds.hpp"
#include "cfield/nodeset.hpp"

namespace cfield {

// Encoder + decoder + LDS weight table under one roof. Parameters are owned
// by the params structs; the registry exposes them as named tensors in a
// stable order for the optimizer and the checkpoint format.
class Model {
 public:
  Model() = default;
  static Model create(const EncoderConfig& enc_cfg, const DecoderConfig& dec_cfg, uint64_t seed, Dtype dt);

  // Full forward pass to a (H x W) prediction in (0,1).
  Tensor forward(Tape* tape, const NodeSet& nodes);
  // Inference convenience: no tape, grid output.
  LabelGrid predict(const NodeSet& nodes);

  std::vector<NamedParam>& params() { return registry_; }
  const std::vector<NamedParam>& params() const { return registry_; }
  int64_t param_count() const;

  // Deep copy; the clone's parameters are independent tensors with the same
  // names and order. Used by batch-parallel workers.
  Model clone() const;

  const EncoderConfig& encoder_config() const { return enc_cfg_; }
  const DecoderConfig& decoder_config() const { return dec_cfg_; }
  Dtype dtype() const { return dtype_; }

  LdsWeightTable& lds() { return lds_; }
  const LdsWeightTable& lds() const { return lds_; }

 private:
  EncoderConfig enc_cfg_;
  DecoderConfig dec_cfg_;
  Dtype dtype_ = Dtype::F64;
  EncoderParams enc_;
  DecoderParams dec_;
  LdsWeightTable lds_ = LdsWeightTable::uniform();
  std::vector<NamedParam> registry_;

  void rebuild_registry();
};

}  // namespace cfield
