#pragma once

#include <vector>

#include "cfield/tensor.hpp"

// Differentiable operator set. Every op takes the recording tape as its
// first argument; pass nullptr for inference (no backward rule recorded).
// Inputs are never mutated. All tensor inputs of one op must share a dtype.
namespace cfield::ops {

using cfield::Tape;
using cfield::Tensor;

// ---- elementwise ----
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& a, double c);
Tensor relu(Tape* tape, const Tensor& x);
Tensor gelu(Tape* tape, const Tensor& x);  // exact erf form
Tensor sigmoid(Tape* tape, const Tensor& x);

// ---- dense linear algebra ----
// y[i,j] = sum_t x[i,t] * w[t,j] (+ bias[j])
Tensor matmul(Tape* tape, const Tensor& x, const Tensor& w);
Tensor linear(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& bias);

// ---- reductions / shape ----
Tensor sum(Tape* tape, const Tensor& x);   // -> scalar
Tensor mean(Tape* tape, const Tensor& x);  // -> scalar
Tensor reshape(Tape* tape, const Tensor& x, std::vector<int64_t> shape);
Tensor transpose(Tape* tape, const Tensor& x);  // 2-D only

// ---- segmented / gather-scatter ----
// out[s] = sum over rows i with segment_of[i] == s, in ascending-i order so
// the reduction is deterministic. Rows of segments with no members are zero.
Tensor scatter_sum(Tape* tape, const Tensor& values, const std::vector<int64_t>& segment_of, int64_t num_segments);
// out[i] = values[ids[i]]; the broadcast inverse of scatter_sum.
Tensor row_gather(Tape* tape, const Tensor& values, const std::vector<int64_t>& ids);
// Softmax over each segment of a 1-D score vector, max-subtracted.
Tensor segmented_softmax(Tape* tape, const Tensor& scores, const std::vector<int64_t>& segment_of);

// ---- latent-slot helpers (n points, k slots of width d) ----
// out[i, j*d+t] = weights[i,j] * values[i,t]
Tensor slot_outer(Tape* tape, const Tensor& weights, const Tensor& values);
// out[i,j] = sum_t q[i,t] * kv[i*k+j, t]
Tensor slot_dot(Tape* tape, const Tensor& q, const Tensor& kv, int64_t k);
// out[i,t] = sum_j weights[i,j] * values[i*k+j, t]
Tensor slot_reduce(Tape* tape, const Tensor& weights, const Tensor& values);

// ---- image ops (channels-first c x h x w) ----
// Per-channel 2-D correlation, stride 1, zero padding (kh-1)/2 x (kw-1)/2.
Tensor depthwise_conv2d(Tape* tape, const Tensor& x, const Tensor& kernel);
// Full convolution, zero padding `pad`, square stride.
Tensor conv2d(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad);
Tensor channel_affine(Tape* tape, const Tensor& x, const Tensor& gamma, const Tensor& beta);
Tensor upsample2x(Tape* tape, const Tensor& x);  // nearest neighbor
Tensor concat_channels(Tape* tape, const std::vector<Tensor>& xs);
Tensor pad2d(Tape* tape, const Tensor& x, int bottom, int right);
Tensor crop2d(Tape* tape, const Tensor& x, int64_t h, int64_t w);

// Scatter per-segment rows into an h x w image (channels-first); cells not
// listed stay zero. cell_of[s] is the row-major cell index of segment s.
Tensor densify_cells(Tape* tape, const Tensor& rows, const std::vector<int64_t>& cell_of, int64_t h, int64_t w);
// out[i,:] = image channel vector at cell cell_of[i].
Tensor gather_cells(Tape* tape, const Tensor& image, const std::vector<int64_t>& cell_of);

// ---- loss ----
// (1/n) * sum_i weights[i] * (pred_i - target_i)^2 ; target and weights are
// constants. Accumulated sequentially in index order.
Tensor weighted_mse(Tape* tape, const Tensor& pred, const std::vector<double>& target,
                    const std::vector<double>& weights);

}  // namespace cfield::ops
