#include "cfield/encoder.hpp"

#include <cmath>

namespace cfield {

void EncoderConfig::validate() const {
  if (n_stages < 1 || n_stages > 4) fail_config("encoder: n_stages must be in 1..4");
  if (static_cast<int>(grid_scales.size()) != n_stages)
    fail_config("encoder: grid_scales has " + std::to_string(grid_scales.size()) + " entries for " +
                std::to_string(n_stages) + " stages");
  for (int64_t s : grid_scales)
    if (s < 1) fail_config("encoder: grid scale must be >= 1");
  if (d_model < 1 || k < 1) fail_config("encoder: d_model and k must be positive");
  if (base_w < 1 || base_h < 1) fail_config("encoder: base resolution must be positive");
  if (attn_norm != "per-grid" && attn_norm != "global")
    fail_config("encoder: attn_norm must be 'per-grid' or 'global', got '" + attn_norm + "'");
}

namespace {

Tensor init_linear_w(int64_t in, int64_t out, std::mt19937_64& rng, Dtype dt) {
  return Tensor::randn({in, out}, rng, 0.02, dt).set_requires_grad(true);
}

Tensor init_zeros(std::vector<int64_t> shape, Dtype dt) {
  return Tensor::zeros(std::move(shape), dt).set_requires_grad(true);
}

Tensor init_conv_w(std::vector<int64_t> shape, int64_t fan_in, std::mt19937_64& rng, Dtype dt) {
  return Tensor::randn(std::move(shape), rng, std::sqrt(2.0 / static_cast<double>(fan_in)), dt)
      .set_requires_grad(true);
}

}  // namespace

EncoderParams init_encoder(const EncoderConfig& config, std::mt19937_64& rng, Dtype dt) {
  config.validate();
  const int64_t d = config.d_model, k = config.k;
  const int64_t kd = k * d, hidden = config.ffn_hidden_or_default();
  EncoderParams params;
  params.embed_w = init_linear_w(4, d, rng, dt);
  params.embed_b = init_zeros({d}, dt);
  for (int s = 0; s < config.n_stages; ++s) {
    StageParams p;
    p.latents = Tensor::randn({k, d}, rng, 0.02, dt).set_requires_grad(true);
    p.wk = init_linear_w(d, d, rng, dt);
    p.bk = init_zeros({d}, dt);
    p.wv = init_linear_w(d, d, rng, dt);
    p.bv = init_zeros({d}, dt);
    p.pw1_w = init_conv_w({hidden, kd, 1, 1}, kd, rng, dt);
    p.pw1_b = init_zeros({hidden}, dt);
    p.dw1 = init_conv_w({hidden, 3, 3}, 9, rng, dt);
    p.dw2 = init_conv_w({hidden, 3, 3}, 9, rng, dt);
    p.pw2_w = init_conv_w({kd, hidden, 1, 1}, hidden, rng, dt);
    p.pw2_b = init_zeros({kd}, dt);
    p.wq = init_linear_w(d, d, rng, dt);
    p.bq = init_zeros({d}, dt);
    p.wk2 = init_linear_w(d, d, rng, dt);
    p.bk2 = init_zeros({d}, dt);
    p.wv2 = init_linear_w(d, d, rng, dt);
    p.bv2 = init_zeros({d}, dt);
    p.wo = init_linear_w(d, d, rng, dt);
    p.bo = init_zeros({d}, dt);
    params.stages.push_back(std::move(p));
  }
  return params;
}

Tensor node_features(const NodeSet& nodes, Dtype dt) {
  Tensor features = Tensor::zeros({nodes.size(), 4}, dt);
  for (int64_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes.nodes[static_cast<size_t>(i)];
    features.buf().set(i * 4 + 0, n.x);
    features.buf().set(i * 4 + 1, n.y);
    features.buf().set(i * 4 + 2, n.w);
    features.buf().set(i * 4 + 3, n.h);
  }
  return features;
}

Tensor embed_input(Tape* tape, const Tensor& features, const EncoderParams& params) {
  return ops::linear(tape, features, params.embed_w, params.embed_b);
}

Tensor ga_stage(Tape* tape, const Tensor& x, const NormalizedCoords& coords, const GridSpec& spec,
                const StageParams& params, const EncoderConfig& config) {
  const int64_t n = x.dim(0), d = config.d_model, k = config.k;
  if (n != coords.size()) fail_internal("ga_stage: " + std::to_string(n) + " features for " +
                                        std::to_string(coords.size()) + " coordinates");
  if (n == 0) return x;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  const GridAssignment grid = assign_grid(coords, spec);
  const int64_t m = grid.num_segments();

  // (1) cross-attention of latent queries against points, per grid
  Tensor keys = ops::linear(tape, x, params.wk, params.bk);
  Tensor values = ops::linear(tape, x, params.wv, params.bv);
  Tensor scores = ops::scale(tape, ops::matmul(tape, keys, ops::transpose(tape, params.latents)), inv_sqrt_d);
  std::vector<int64_t> attn_segments(static_cast<size_t>(n * k));
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < k; ++j)
      attn_segments[static_cast<size_t>(i * k + j)] =
          config.attn_norm == "global" ? j : grid.segment_of[static_cast<size_t>(i)] * k + j;
  Tensor alpha = ops::segmented_softmax(tape, ops::reshape(tape, scores, {n * k}), attn_segments);
  Tensor slotted = ops::slot_outer(tape, ops::reshape(tape, alpha, {n, k}), values);  // n x (k*d)

  // (2) per-grid aggregation, (3) sparse raster with zero-padded empties
  Tensor grid_feat = ops::scatter_sum(tape, slotted, grid.segment_of, m);
  Tensor image = ops::densify_cells(tape, grid_feat, grid.cell_of_segment, grid.grid_h, grid.grid_w);

  // (4) ConvFFN with a residual around the whole block
  Tensor t = ops::conv2d(tape, image, params.pw1_w, params.pw1_b, 1, 0);
  t = ops::depthwise_conv2d(tape, t, params.dw1);
  t = ops::gelu(tape, t);
  t = ops::depthwise_conv2d(tape, t, params.dw2);
  t = ops::conv2d(tape, t, params.pw2_w, params.pw2_b, 1, 0);
  Tensor refined = ops::add(tape, image, t);

  // (5) broadcast refined grid features back to the points
  std::vector<int64_t> cell_of_point(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    cell_of_point[static_cast<size_t>(i)] = grid.cell_of_segment[static_cast<size_t>(grid.segment_of[static_cast<size_t>(i)])];
  Tensor broadcast = ops::gather_cells(tape, refined, cell_of_point);        // n x (k*d)
  Tensor slots = ops::reshape(tape, broadcast, {n * k, d});

  // (6) second cross-attention: input projection queries the k slots
  Tensor q = ops::linear(tape, x, params.wq, params.bq);
  Tensor k2 = ops::linear(tape, slots, params.wk2, params.bk2);
  Tensor v2 = ops::linear(tape, slots, params.wv2, params.bv2);
  Tensor s2 = ops::scale(tape, ops::slot_dot(tape, q, k2, k), inv_sqrt_d);
  std::vector<int64_t> point_segments(static_cast<size_t>(n * k));
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < k; ++j) point_segments[static_cast<size_t>(i * k + j)] = i;
  Tensor a2 = ops::segmented_softmax(tape, ops::reshape(tape, s2, {n * k}), point_segments);
  Tensor attended = ops::slot_reduce(tape, ops::reshape(tape, a2, {n, k}), v2);

  return ops::add(tape, x, ops::linear(tape, attended, params.wo, params.bo));
}

Tensor encoder_forward(Tape* tape, const NodeSet& nodes, const EncoderConfig& config, const EncoderParams& params) {
  config.validate();
  if (static_cast<int>(params.stages.size()) != config.n_stages)
    fail_config("encoder_forward: params have " + std::to_string(params.stages.size()) + " stages, config wants " +
                std::to_string(config.n_stages));
  const Dtype dt = params.embed_w.dtype();
  const NormalizedCoords coords = normalize(nodes, config.base_w, config.base_h);

  Tensor x = embed_input(tape, node_features(nodes, dt), params);
  for (int s = 0; s < config.n_stages; ++s) {
    const GridSpec spec{config.grid_scales[static_cast<size_t>(s)], config.grid_scales[static_cast<size_t>(s)]};
    x = ga_stage(tape, x, coords, spec, params.stages[static_cast<size_t>(s)], config);
  }

  // final rasterization at the base grid (d = 1)
  const GridAssignment grid = assign_grid(coords, GridSpec{1, 1});
  Tensor cells = ops::scatter_sum(tape, x, grid.segment_of, grid.num_segments());
  return ops::densify_cells(tape, cells, grid.cell_of_segment, config.base_h, config.base_w);
}

void collect_encoder_params(EncoderParams& params, std::vector<NamedParam>& out) {
  out.push_back({"encoder.embed.w", params.embed_w});
  out.push_back({"encoder.embed.b", params.embed_b});
  for (size_t s = 0; s < params.stages.size(); ++s) {
    StageParams& p = params.stages[s];
    const std::string prefix = "encoder.stage" + std::to_string(s) + ".";
    out.push_back({prefix + "latents", p.latents});
    out.push_back({prefix + "wk", p.wk});
    out.push_back({prefix + "bk", p.bk});
    out.push_back({prefix + "wv", p.wv});
    out.push_back({prefix + "bv", p.bv});
    out.push_back({prefix + "pw1.w", p.pw1_w});
    out.push_back({prefix + "pw1.b", p.pw1_b});
    out.push_back({prefix + "dw1", p.dw1});
    out.push_back({prefix + "dw2", p.dw2});
    out.push_back({prefix + "pw2.w", p.pw2_w});
    out.push_back({prefix + "pw2.b", p.pw2_b});
    out.push_back({prefix + "wq", p.wq});
    out.push_back({prefix + "bq", p.bq});
    out.push_back({prefix + "wk2", p.wk2});
    out.push_back({prefix + "bk2", p.bk2});
    out.push_back({prefix + "wv2", p.wv2});
    out.push_back({prefix + "bv2", p.bv2});
    out.push_back({prefix + "wo", p.wo});
    out.push_back({prefix + "bo", p.bo});
  }
}

}  // namespace cfield
