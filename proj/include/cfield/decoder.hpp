#pragma once

#include <random>
#include <string>
#include <vector>

#include "cfield/encoder.hpp"
#include "cfield/ops.hpp"
#include "cfield/tensor.hpp"

namespace cfield {

// Pixel-wise head: a residual convolutional backbone downsamples the
// encoder raster, then a dense-skip segmentation head restores label
// resolution. Batch statistics are replaced by per-channel affine scaling.
struct DecoderConfig {
  std::vector<int> blocks = {2, 2, 2, 2};             // residual blocks per level
  std::vector<int64_t> widths = {64, 128, 256, 512};  // channels per level
  std::string head = "nested-skip";                   // "nested-skip" | "plain-skip"

  int levels() const { return static_cast<int>(widths.size()); }
  void validate() const;
};

struct ConvUnit {
  Tensor w, b;          // conv kernel + bias
  Tensor gamma, beta;   // channel affine
};

struct ResBlock {
  ConvUnit c1, c2;
  ConvUnit proj;  // 1x1 shortcut, present when stride or width changes
  bool has_proj = false;
  int stride = 1;
};

struct DecoderParams {
  ConvUnit stem;                                  // encoder channels -> widths[0]
  std::vector<std::vector<ResBlock>> levels;      // backbone
  std::vector<std::vector<ConvUnit>> skip;        // skip[i][j-1] = node (i, j)
  Tensor final_w, final_b;                        // 1x1 -> 1 channel
};

DecoderParams init_decoder(const DecoderConfig& config, int64_t in_channels, std::mt19937_64& rng, Dtype dt);

// Y (C x H x W) -> prediction (H x W) in (0,1). Spatial extents that are not
// divisible by 2^(levels-1) are zero-padded and cropped back on output.
Tensor decoder_forward(Tape* tape, const Tensor& y, const DecoderConfig& config, const DecoderParams& params);

void collect_decoder_params(DecoderParams& params, std::vector<NamedParam>& out);

}  // namespace cfield
