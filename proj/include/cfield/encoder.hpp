#pragma once

#include <random>
#include <string>
#include <vector>

#include "cfield/nodeset.hpp"
#include "cfield/ops.hpp"
#include "cfield/tensor.hpp"

namespace cfield {

// Multi-scale grid-attention encoder: sequential stages, one grid scale
// each, turning n x 4 raw node features into a d_model x H x W raster.
struct EncoderConfig {
  int n_stages = 4;
  std::vector<int64_t> grid_scales = {1, 2, 4, 8};
  int64_t d_model = 64;
  int64_t k = 8;  // latent codes per stage
  int64_t base_w = 256;
  int64_t base_h = 256;
  int64_t ffn_hidden = 0;          // 0 -> d_model
  std::string attn_norm = "per-grid";  // "per-grid" | "global"

  int64_t ffn_hidden_or_default() const { return ffn_hidden > 0 ? ffn_hidden : d_model; }
  void validate() const;
};

// One grid-attention stage: two cross-attentions against k learnable latent
// codes with a depthwise ConvFFN refining the rasterized latent image
// in between.
struct StageParams {
  Tensor latents;              // k x d, the learnable queries
  Tensor wk, bk, wv, bv;       // first attention projections
  Tensor pw1_w, pw1_b;         // ConvFFN in: (k*d) -> hidden, 1x1
  Tensor dw1, dw2;             // depthwise 3x3 kernels
  Tensor pw2_w, pw2_b;         // ConvFFN out: hidden -> (k*d), 1x1
  Tensor wq, bq;               // second attention query projection
  Tensor wk2, bk2, wv2, bv2;   // slot-wise key/value maps
  Tensor wo, bo;               // output projection before the residual
};

struct EncoderParams {
  Tensor embed_w, embed_b;  // 4 -> d_model
  std::vector<StageParams> stages;
};

EncoderParams init_encoder(const EncoderConfig& config, std::mt19937_64& rng, Dtype dt);

// Raw per-node features (x, y, w, h) in layout units, one row per node.
Tensor node_features(const NodeSet& nodes, Dtype dt);

Tensor embed_input(Tape* tape, const Tensor& features, const EncoderParams& params);

Tensor ga_stage(Tape* tape, const Tensor& x, const NormalizedCoords& coords, const GridSpec& spec,
                const StageParams& params, const EncoderConfig& config);

// embed -> stages at each grid scale -> scatter into the base-resolution
// grid. Cells whose grid received no points are exactly zero.
Tensor encoder_forward(Tape* tape, const NodeSet& nodes, const EncoderConfig& config, const EncoderParams& params);

struct NamedParam {
  std::string name;
  Tensor tensor;
};

void collect_encoder_params(EncoderParams& params, std::vector<NamedParam>& out);

}  // namespace cfield
