#include "cfield/model.hpp"

namespace cfield {

Model Model::create(const EncoderConfig& enc_cfg, const DecoderConfig& dec_cfg, uint64_t seed, Dtype dt) {
  enc_cfg.validate();
  dec_cfg.validate();
  Model model;
  model.enc_cfg_ = enc_cfg;
  model.dec_cfg_ = dec_cfg;
  model.dtype_ = dt;
  std::mt19937_64 rng(seed);
  model.enc_ = init_encoder(enc_cfg, rng, dt);
  model.dec_ = init_decoder(dec_cfg, enc_cfg.d_model, rng, dt);
  model.rebuild_registry();
  return model;
}

void Model::rebuild_registry() {
  registry_.clear();
  collect_encoder_params(enc_, registry_);
  collect_decoder_params(dec_, registry_);
}

Tensor Model::forward(Tape* tape, const NodeSet& nodes) {
  Tensor raster = encoder_forward(tape, nodes, enc_cfg_, enc_);
  return decoder_forward(tape, raster, dec_cfg_, dec_);
}

LabelGrid Model::predict(const NodeSet& nodes) {
  Tensor pred = forward(nullptr, nodes);
  LabelGrid grid = LabelGrid::zeros(pred.dim(1), pred.dim(0));
  for (int64_t i = 0; i < pred.numel(); ++i) grid.values[static_cast<size_t>(i)] = pred.at(i);
  return grid;
}

int64_t Model::param_count() const {
  int64_t total = 0;
  for (const NamedParam& p : registry_) total += p.tensor.numel();
  return total;
}

Model Model::clone() const {
  Model copy = create(enc_cfg_, dec_cfg_, /*seed=*/0, dtype_);
  copy.lds_ = lds_;
  if (copy.registry_.size() != registry_.size()) fail_internal("Model::clone: registry mismatch");
  for (size_t i = 0; i < registry_.size(); ++i) {
    const Tensor& src = registry_[i].tensor;
    Tensor& dst = copy.registry_[i].tensor;
    if (src.numel() != dst.numel()) fail_internal("Model::clone: shape drift at " + registry_[i].name);
    dst.buf() = src.buf();
  }
  return copy;
}

}  // namespace cfield
