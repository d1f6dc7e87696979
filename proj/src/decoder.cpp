#include "cfield/decoder.hpp"

#include <cmath>

namespace cfield {

void DecoderConfig::validate() const {
  if (widths.empty()) fail_config("decoder: needs at least one level");
  if (blocks.size() != widths.size())
    fail_config("decoder: blocks (" + std::to_string(blocks.size()) + ") and widths (" +
                std::to_string(widths.size()) + ") must have one entry per level");
  for (int64_t w : widths)
    if (w < 1) fail_config("decoder: channel widths must be positive");
  for (int b : blocks)
    if (b < 1) fail_config("decoder: every level needs at least one block");
  if (head != "nested-skip" && head != "plain-skip")
    fail_config("decoder: head must be 'nested-skip' or 'plain-skip', got '" + head + "'");
}

namespace {

ConvUnit make_unit(int64_t co, int64_t ci, int64_t kh, int64_t kw, std::mt19937_64& rng, Dtype dt) {
  ConvUnit u;
  u.w = Tensor::randn({co, ci, kh, kw}, rng, std::sqrt(2.0 / static_cast<double>(ci * kh * kw)), dt)
            .set_requires_grad(true);
  u.b = Tensor::zeros({co}, dt).set_requires_grad(true);
  u.gamma = Tensor::full({co}, 1.0, dt).set_requires_grad(true);
  u.beta = Tensor::zeros({co}, dt).set_requires_grad(true);
  return u;
}

Tensor apply_unit(Tape* tape, const Tensor& x, const ConvUnit& u, int stride, int pad) {
  Tensor t = ops::conv2d(tape, x, u.w, u.b, stride, pad);
  return ops::channel_affine(tape, t, u.gamma, u.beta);
}

Tensor apply_block(Tape* tape, const Tensor& x, const ResBlock& block) {
  Tensor t = ops::relu(tape, apply_unit(tape, x, block.c1, block.stride, 1));
  t = apply_unit(tape, t, block.c2, 1, 1);
  Tensor shortcut = block.has_proj ? apply_unit(tape, x, block.proj, block.stride, 0) : x;
  return ops::relu(tape, ops::add(tape, t, shortcut));
}

}  // namespace

DecoderParams init_decoder(const DecoderConfig& config, int64_t in_channels, std::mt19937_64& rng, Dtype dt) {
  config.validate();
  DecoderParams params;
  params.stem = make_unit(config.widths[0], in_channels, 3, 3, rng, dt);

  const int levels = config.levels();
  for (int i = 0; i < levels; ++i) {
    std::vector<ResBlock> blocks;
    for (int b = 0; b < config.blocks[static_cast<size_t>(i)]; ++b) {
      const bool first = b == 0;
      const int64_t cin = first ? (i == 0 ? config.widths[0] : config.widths[static_cast<size_t>(i - 1)])
                                : config.widths[static_cast<size_t>(i)];
      const int64_t cout = config.widths[static_cast<size_t>(i)];
      ResBlock block;
      block.stride = (first && i > 0) ? 2 : 1;
      block.c1 = make_unit(cout, cin, 3, 3, rng, dt);
      block.c2 = make_unit(cout, cout, 3, 3, rng, dt);
      block.has_proj = block.stride != 1 || cin != cout;
      if (block.has_proj) block.proj = make_unit(cout, cin, 1, 1, rng, dt);
      blocks.push_back(std::move(block));
    }
    params.levels.push_back(std::move(blocks));
  }

  // head nodes X(i,j): conv over concat(X(i,0..j-1), up(X(i+1,j-1)))
  for (int i = 0; i + 1 < levels; ++i) {
    std::vector<ConvUnit> row;
    const int max_j = levels - 1 - i;
    for (int j = 1; j <= max_j; ++j) {
      int64_t cin;
      if (config.head == "nested-skip") {
        cin = static_cast<int64_t>(j) * config.widths[static_cast<size_t>(i)] +
              config.widths[static_cast<size_t>(i + 1)];
      } else {
        // plain skip keeps a single chain per level
        cin = config.widths[static_cast<size_t>(i)] + config.widths[static_cast<size_t>(i + 1)];
      }
      row.push_back(make_unit(config.widths[static_cast<size_t>(i)], cin, 3, 3, rng, dt));
      if (config.head == "plain-skip") break;
    }
    params.skip.push_back(std::move(row));
  }

  params.final_w = Tensor::randn({1, config.widths[0], 1, 1}, rng, 0.02, dt).set_requires_grad(true);
  params.final_b = Tensor::zeros({1}, dt).set_requires_grad(true);
  return params;
}

Tensor decoder_forward(Tape* tape, const Tensor& y, const DecoderConfig& config, const DecoderParams& params) {
  config.validate();
  if (y.rank() != 3) fail_internal("decoder_forward: expected C x H x W input, got " + y.shape_str());
  const int levels = config.levels();
  const int64_t in_h = y.dim(1), in_w = y.dim(2);
  const int64_t mult = int64_t(1) << (levels - 1);
  const int64_t pad_h = (mult - in_h % mult) % mult;
  const int64_t pad_w = (mult - in_w % mult) % mult;
  Tensor x = pad_h || pad_w ? ops::pad2d(tape, y, static_cast<int>(pad_h), static_cast<int>(pad_w)) : y;

  // backbone, keeping each level's output for the skip head
  std::vector<Tensor> backbone;
  Tensor t = ops::relu(tape, apply_unit(tape, x, params.stem, 1, 1));
  for (int i = 0; i < levels; ++i) {
    for (const ResBlock& block : params.levels[static_cast<size_t>(i)]) t = apply_block(tape, t, block);
    backbone.push_back(t);
  }

  Tensor head_out;
  if (config.head == "nested-skip") {
    // column-by-column dense skip pyramid; output is node (0, levels-1)
    std::vector<std::vector<Tensor>> nodes(static_cast<size_t>(levels));
    for (int i = 0; i < levels; ++i) nodes[static_cast<size_t>(i)].push_back(backbone[static_cast<size_t>(i)]);
    for (int j = 1; j < levels; ++j) {
      for (int i = 0; i + j < levels; ++i) {
        std::vector<Tensor> inputs = nodes[static_cast<size_t>(i)];  // X(i, 0..j-1)
        inputs.push_back(ops::upsample2x(tape, nodes[static_cast<size_t>(i + 1)][static_cast<size_t>(j - 1)]));
        Tensor cat = ops::concat_channels(tape, inputs);
        Tensor node = ops::relu(
            tape, apply_unit(tape, cat, params.skip[static_cast<size_t>(i)][static_cast<size_t>(j - 1)], 1, 1));
        nodes[static_cast<size_t>(i)].push_back(node);
      }
    }
    head_out = nodes[0].back();
  } else {
    Tensor up = backbone[static_cast<size_t>(levels - 1)];
    for (int i = levels - 2; i >= 0; --i) {
      Tensor cat = ops::concat_channels(tape, {backbone[static_cast<size_t>(i)], ops::upsample2x(tape, up)});
      up = ops::relu(tape, apply_unit(tape, cat, params.skip[static_cast<size_t>(i)][0], 1, 1));
    }
    head_out = up;
  }

  Tensor logits = ops::conv2d(tape, head_out, params.final_w, params.final_b, 1, 0);
  if (pad_h || pad_w) logits = ops::crop2d(tape, logits, in_h, in_w);
  Tensor squashed = ops::sigmoid(tape, logits);
  return ops::reshape(tape, squashed, {in_h, in_w});
}

void collect_decoder_params(DecoderParams& params, std::vector<NamedParam>& out) {
  auto add_unit = [&out](const std::string& name, ConvUnit& u) {
    out.push_back({name + ".w", u.w});
    out.push_back({name + ".b", u.b});
    out.push_back({name + ".gamma", u.gamma});
    out.push_back({name + ".beta", u.beta});
  };
  add_unit("decoder.stem", params.stem);
  for (size_t i = 0; i < params.levels.size(); ++i)
    for (size_t b = 0; b < params.levels[i].size(); ++b) {
      ResBlock& block = params.levels[i][b];
      const std::string prefix = "decoder.l" + std::to_string(i) + ".b" + std::to_string(b);
      add_unit(prefix + ".c1", block.c1);
      add_unit(prefix + ".c2", block.c2);
      if (block.has_proj) add_unit(prefix + ".proj", block.proj);
    }
  for (size_t i = 0; i < params.skip.size(); ++i)
    for (size_t j = 0; j < params.skip[i].size(); ++j)
      add_unit("decoder.skip" + std::to_string(i) + "_" + std::to_string(j + 1), params.skip[i][j]);
  out.push_back({"decoder.final.w", params.final_w});
  out.push_back({"decoder.final.b", params.final_b});
}

}  // namespace cfield
