#include <algorithm>
#include <cmath>
#include <limits>

#include "gemm.hpp"
#include "op_utils.hpp"

namespace cfield::ops {

using namespace detail;

namespace {

void check_ids(const std::vector<int64_t>& ids, int64_t n, const char* op) {
  if (static_cast<int64_t>(ids.size()) != n)
    fail_internal(std::string(op) + ": " + std::to_string(ids.size()) + " ids for " + std::to_string(n) + " rows");
}

template <class S>
void scatter_fwd(const Tensor& values, const std::vector<int64_t>& seg, Tensor& out) {
  const S* pv = values.data<S>();
  S* po = out.data<S>();
  const int64_t f = values.dim(1);
  // ascending-index accumulation keeps the reduction order fixed
  for (size_t i = 0; i < seg.size(); ++i) {
    S* dst = po + seg[i] * f;
    const S* src = pv + static_cast<int64_t>(i) * f;
    for (int64_t j = 0; j < f; ++j) dst[j] += src[j];
  }
}

template <class S>
void scatter_bwd(const Tensor& values, const std::vector<int64_t>& seg, const Tensor& out) {
  S* gv = values.grad().data<S>();
  const S* go = out.grad().data<S>();
  const int64_t f = values.dim(1);
  for (size_t i = 0; i < seg.size(); ++i) {
    const S* src = go + seg[i] * f;
    S* dst = gv + static_cast<int64_t>(i) * f;
    for (int64_t j = 0; j < f; ++j) dst[j] += src[j];
  }
}

template <class S>
void gather_fwd(const Tensor& values, const std::vector<int64_t>& ids, Tensor& out) {
  const S* pv = values.data<S>();
  S* po = out.data<S>();
  const int64_t f = values.dim(1);
  for (size_t i = 0; i < ids.size(); ++i) {
    const S* src = pv + ids[i] * f;
    S* dst = po + static_cast<int64_t>(i) * f;
    for (int64_t j = 0; j < f; ++j) dst[j] = src[j];
  }
}

template <class S>
void gather_bwd(const Tensor& values, const std::vector<int64_t>& ids, const Tensor& out) {
  S* gv = values.grad().data<S>();
  const S* go = out.grad().data<S>();
  const int64_t f = values.dim(1);
  for (size_t i = 0; i < ids.size(); ++i) {
    const S* src = go + static_cast<int64_t>(i) * f;
    S* dst = gv + ids[i] * f;
    for (int64_t j = 0; j < f; ++j) dst[j] += src[j];
  }
}

}  // namespace

Tensor scatter_sum(Tape* tape, const Tensor& values, const std::vector<int64_t>& segment_of, int64_t num_segments) {
  check_rank(values, 2, "scatter_sum");
  check_ids(segment_of, values.dim(0), "scatter_sum");
  for (int64_t id : segment_of)
    if (id < 0 || id >= num_segments)
      fail_internal("scatter_sum: segment id " + std::to_string(id) + " out of range [0," +
                    std::to_string(num_segments) + ")");
  Tensor out = Tensor::zeros({num_segments, values.dim(1)}, values.dtype());
  CF_DISPATCH(values.dtype(), scatter_fwd, values, segment_of, out);
  if (wants_grad(tape, values)) {
    out.set_requires_grad(true);
    tape->record([values, segment_of, out] { CF_DISPATCH(values.dtype(), scatter_bwd, values, segment_of, out); });
  }
  return finish("scatter_sum", out);
}

Tensor row_gather(Tape* tape, const Tensor& values, const std::vector<int64_t>& ids) {
  check_rank(values, 2, "row_gather");
  for (int64_t id : ids)
    if (id < 0 || id >= values.dim(0))
      fail_internal("row_gather: row id " + std::to_string(id) + " out of range [0," + std::to_string(values.dim(0)) +
                    ")");
  Tensor out = Tensor::zeros({static_cast<int64_t>(ids.size()), values.dim(1)}, values.dtype());
  CF_DISPATCH(values.dtype(), gather_fwd, values, ids, out);
  if (wants_grad(tape, values)) {
    out.set_requires_grad(true);
    tape->record([values, ids, out] { CF_DISPATCH(values.dtype(), gather_bwd, values, ids, out); });
  }
  return finish("row_gather", out);
}

namespace {

template <class S>
void segsoftmax_fwd(const Tensor& scores, const std::vector<int64_t>& seg, int64_t nseg, Tensor& out) {
  const S* ps = scores.data<S>();
  S* po = out.data<S>();
  const int64_t n = scores.numel();
  std::vector<double> seg_max(static_cast<size_t>(nseg), -std::numeric_limits<double>::infinity());
  for (int64_t i = 0; i < n; ++i) seg_max[static_cast<size_t>(seg[i])] = std::max(seg_max[static_cast<size_t>(seg[i])], static_cast<double>(ps[i]));
  std::vector<double> seg_sum(static_cast<size_t>(nseg), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    const double e = std::exp(static_cast<double>(ps[i]) - seg_max[static_cast<size_t>(seg[i])]);
    po[i] = static_cast<S>(e);
    seg_sum[static_cast<size_t>(seg[i])] += e;
  }
  for (int64_t i = 0; i < n; ++i) po[i] = static_cast<S>(static_cast<double>(po[i]) / seg_sum[static_cast<size_t>(seg[i])]);
}

template <class S>
void segsoftmax_bwd(const Tensor& scores, const std::vector<int64_t>& seg, int64_t nseg, const Tensor& out) {
  // d s_i = alpha_i * (g_i - sum_{j in seg} g_j alpha_j)
  S* gs = scores.grad().data<S>();
  const S* go = out.grad().data<S>();
  const S* alpha = out.data<S>();
  const int64_t n = scores.numel();
  std::vector<double> seg_dot(static_cast<size_t>(nseg), 0.0);
  for (int64_t i = 0; i < n; ++i)
    seg_dot[static_cast<size_t>(seg[i])] += static_cast<double>(go[i]) * static_cast<double>(alpha[i]);
  for (int64_t i = 0; i < n; ++i)
    gs[i] += static_cast<S>(static_cast<double>(alpha[i]) *
                            (static_cast<double>(go[i]) - seg_dot[static_cast<size_t>(seg[i])]));
}

}  // namespace

Tensor segmented_softmax(Tape* tape, const Tensor& scores, const std::vector<int64_t>& segment_of) {
  check_rank(scores, 1, "segmented_softmax");
  check_ids(segment_of, scores.numel(), "segmented_softmax");
  int64_t nseg = 0;
  for (int64_t id : segment_of) {
    if (id < 0) fail_internal("segmented_softmax: negative segment id");
    nseg = std::max(nseg, id + 1);
  }
  Tensor out = Tensor::zeros(scores.shape(), scores.dtype());
  if (scores.numel() > 0) CF_DISPATCH(scores.dtype(), segsoftmax_fwd, scores, segment_of, nseg, out);
  if (wants_grad(tape, scores)) {
    out.set_requires_grad(true);
    tape->record([scores, segment_of, nseg, out] {
      if (scores.numel() > 0) CF_DISPATCH(scores.dtype(), segsoftmax_bwd, scores, segment_of, nseg, out);
    });
  }
  return finish("segmented_softmax", out);
}

namespace {

template <class S>
void slot_outer_fwd(const Tensor& w, const Tensor& v, Tensor& out) {
  const int64_t n = w.dim(0), k = w.dim(1), d = v.dim(1);
  const S* pw = w.data<S>();
  const S* pv = v.data<S>();
  S* po = out.data<S>();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < k; ++j) {
      const S s = pw[i * k + j];
      const S* vrow = pv + i * d;
      S* orow = po + (i * k + j) * d;
      for (int64_t t = 0; t < d; ++t) orow[t] = s * vrow[t];
    }
}

template <class S>
void slot_outer_bwd(const Tensor& w, const Tensor& v, const Tensor& out) {
  const int64_t n = w.dim(0), k = w.dim(1), d = v.dim(1);
  const S* go = out.grad().data<S>();
  if (w.requires_grad()) {
    S* gw = w.grad().data<S>();
    const S* pv = v.data<S>();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < k; ++j)
        gw[i * k + j] += gemm::dot_lanes(go + (i * k + j) * d, pv + i * d, d);
  }
  if (v.requires_grad()) {
    S* gv = v.grad().data<S>();
    const S* pw = w.data<S>();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < k; ++j) {
        const S s = pw[i * k + j];
        const S* grow = go + (i * k + j) * d;
        S* vrow = gv + i * d;
        for (int64_t t = 0; t < d; ++t) vrow[t] += s * grow[t];
      }
  }
}

template <class S>
void slot_dot_fwd(const Tensor& q, const Tensor& kv, int64_t k, Tensor& out) {
  const int64_t n = q.dim(0), d = q.dim(1);
  const S* pq = q.data<S>();
  const S* pk = kv.data<S>();
  S* po = out.data<S>();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < k; ++j) po[i * k + j] = gemm::dot_lanes(pq + i * d, pk + (i * k + j) * d, d);
}

template <class S>
void slot_dot_bwd(const Tensor& q, const Tensor& kv, int64_t k, const Tensor& out) {
  const int64_t n = q.dim(0), d = q.dim(1);
  const S* go = out.grad().data<S>();
  if (q.requires_grad()) {
    S* gq = q.grad().data<S>();
    const S* pk = kv.data<S>();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < k; ++j) {
        const S g = go[i * k + j];
        const S* krow = pk + (i * k + j) * d;
        S* qrow = gq + i * d;
        for (int64_t t = 0; t < d; ++t) qrow[t] += g * krow[t];
      }
  }
  if (kv.requires_grad()) {
    S* gk = kv.grad().data<S>();
    const S* pq = q.data<S>();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < k; ++j) {
        const S g = go[i * k + j];
        const S* qrow = pq + i * d;
        S* krow = gk + (i * k + j) * d;
        for (int64_t t = 0; t < d; ++t) krow[t] += g * qrow[t];
      }
  }
}

template <class S>
void slot_reduce_fwd(const Tensor& w, const Tensor& v, Tensor& out) {
  const int64_t n = w.dim(0), k = w.dim(1), d = v.dim(1);
  const S* pw = w.data<S>();
  const S* pv = v.data<S>();
  S* po = out.data<S>();
  for (int64_t i = 0; i < n; ++i) {
    S* orow = po + i * d;
    for (int64_t j = 0; j < k; ++j) {
      const S s = pw[i * k + j];
      const S* vrow = pv + (i * k + j) * d;
      for (int64_t t = 0; t < d; ++t) orow[t] += s * vrow[t];
    }
  }
}

template <class S>
void slot_reduce_bwd(const Tensor& w, const Tensor& v, const Tensor& out) {
  const int64_t n = w.dim(0), k = w.dim(1), d = v.dim(1);
  const S* go = out.grad().data<S>();
  if (w.requires_grad()) {
    S* gw = w.grad().data<S>();
    const S* pv = v.data<S>();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < k; ++j) gw[i * k + j] += gemm::dot_lanes(go + i * d, pv + (i * k + j) * d, d);
  }
  if (v.requires_grad()) {
    S* gv = v.grad().data<S>();
    const S* pw = w.data<S>();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < k; ++j) {
        const S s = pw[i * k + j];
        const S* grow = go + i * d;
        S* vrow = gv + (i * k + j) * d;
        for (int64_t t = 0; t < d; ++t) vrow[t] += s * grow[t];
      }
  }
}

}  // namespace

Tensor slot_outer(Tape* tape, const Tensor& weights, const Tensor& values) {
  check_rank(weights, 2, "slot_outer");
  check_rank(values, 2, "slot_outer");
  check_same_dtype(weights, values, "slot_outer");
  if (weights.dim(0) != values.dim(0))
    fail_internal("slot_outer: row counts differ, " + weights.shape_str() + " vs " + values.shape_str());
  Tensor out = Tensor::zeros({weights.dim(0), weights.dim(1) * values.dim(1)}, weights.dtype());
  CF_DISPATCH(weights.dtype(), slot_outer_fwd, weights, values, out);
  if (wants_grad(tape, weights, values)) {
    out.set_requires_grad(true);
    tape->record([weights, values, out] { CF_DISPATCH(weights.dtype(), slot_outer_bwd, weights, values, out); });
  }
  return finish("slot_outer", out);
}

Tensor slot_dot(Tape* tape, const Tensor& q, const Tensor& kv, int64_t k) {
  check_rank(q, 2, "slot_dot");
  check_rank(kv, 2, "slot_dot");
  check_same_dtype(q, kv, "slot_dot");
  if (kv.dim(0) != q.dim(0) * k || kv.dim(1) != q.dim(1))
    fail_internal("slot_dot: kv " + kv.shape_str() + " does not match q " + q.shape_str() + " with k=" +
                  std::to_string(k));
  Tensor out = Tensor::zeros({q.dim(0), k}, q.dtype());
  CF_DISPATCH(q.dtype(), slot_dot_fwd, q, kv, k, out);
  if (wants_grad(tape, q, kv)) {
    out.set_requires_grad(true);
    tape->record([q, kv, k, out] { CF_DISPATCH(q.dtype(), slot_dot_bwd, q, kv, k, out); });
  }
  return finish("slot_dot", out);
}

Tensor slot_reduce(Tape* tape, const Tensor& weights, const Tensor& values) {
  check_rank(weights, 2, "slot_reduce");
  check_rank(values, 2, "slot_reduce");
  check_same_dtype(weights, values, "slot_reduce");
  if (values.dim(0) != weights.dim(0) * weights.dim(1))
    fail_internal("slot_reduce: values " + values.shape_str() + " do not match weights " + weights.shape_str());
  Tensor out = Tensor::zeros({weights.dim(0), values.dim(1)}, weights.dtype());
  CF_DISPATCH(weights.dtype(), slot_reduce_fwd, weights, values, out);
  if (wants_grad(tape, weights, values)) {
    out.set_requires_grad(true);
    tape->record([weights, values, out] { CF_DISPATCH(weights.dtype(), slot_reduce_bwd, weights, values, out); });
  }
  return finish("slot_reduce", out);
}

namespace {

template <class S>
void densify_fwd(const Tensor& rows, const std::vector<int64_t>& cells, int64_t hw, Tensor& out) {
  const int64_t c = rows.dim(1);
  const S* pr = rows.data<S>();
  S* po = out.data<S>();
  for (size_t s = 0; s < cells.size(); ++s) {
    const S* src = pr + static_cast<int64_t>(s) * c;
    for (int64_t ch = 0; ch < c; ++ch) po[ch * hw + cells[s]] = src[ch];
  }
}

template <class S>
void densify_bwd(const Tensor& rows, const std::vector<int64_t>& cells, int64_t hw, const Tensor& out) {
  const int64_t c = rows.dim(1);
  S* gr = rows.grad().data<S>();
  const S* go = out.grad().data<S>();
  for (size_t s = 0; s < cells.size(); ++s) {
    S* dst = gr + static_cast<int64_t>(s) * c;
    for (int64_t ch = 0; ch < c; ++ch) dst[ch] += go[ch * hw + cells[s]];
  }
}

template <class S>
void gather_cells_fwd(const Tensor& img, const std::vector<int64_t>& cells, int64_t hw, Tensor& out) {
  const int64_t c = img.dim(0);
  const S* pi = img.data<S>();
  S* po = out.data<S>();
  for (size_t i = 0; i < cells.size(); ++i) {
    S* dst = po + static_cast<int64_t>(i) * c;
    for (int64_t ch = 0; ch < c; ++ch) dst[ch] = pi[ch * hw + cells[i]];
  }
}

template <class S>
void gather_cells_bwd(const Tensor& img, const std::vector<int64_t>& cells, int64_t hw, const Tensor& out) {
  const int64_t c = img.dim(0);
  S* gi = img.grad().data<S>();
  const S* go = out.grad().data<S>();
  for (size_t i = 0; i < cells.size(); ++i) {
    const S* src = go + static_cast<int64_t>(i) * c;
    for (int64_t ch = 0; ch < c; ++ch) gi[ch * hw + cells[i]] += src[ch];
  }
}

}  // namespace

Tensor densify_cells(Tape* tape, const Tensor& rows, const std::vector<int64_t>& cell_of, int64_t h, int64_t w) {
  check_rank(rows, 2, "densify_cells");
  check_ids(cell_of, rows.dim(0), "densify_cells");
  const int64_t hw = h * w;
  std::vector<bool> seen(static_cast<size_t>(hw), false);
  for (int64_t cell : cell_of) {
    if (cell < 0 || cell >= hw) fail_internal("densify_cells: cell index " + std::to_string(cell) + " out of range");
    if (seen[static_cast<size_t>(cell)]) fail_internal("densify_cells: duplicate cell index " + std::to_string(cell));
    seen[static_cast<size_t>(cell)] = true;
  }
  Tensor out = Tensor::zeros({rows.dim(1), h, w}, rows.dtype());
  CF_DISPATCH(rows.dtype(), densify_fwd, rows, cell_of, hw, out);
  if (wants_grad(tape, rows)) {
    out.set_requires_grad(true);
    tape->record([rows, cell_of, hw, out] { CF_DISPATCH(rows.dtype(), densify_bwd, rows, cell_of, hw, out); });
  }
  return finish("densify_cells", out);
}

Tensor gather_cells(Tape* tape, const Tensor& image, const std::vector<int64_t>& cell_of) {
  check_rank(image, 3, "gather_cells");
  const int64_t hw = image.dim(1) * image.dim(2);
  for (int64_t cell : cell_of)
    if (cell < 0 || cell >= hw) fail_internal("gather_cells: cell index " + std::to_string(cell) + " out of range");
  Tensor out = Tensor::zeros({static_cast<int64_t>(cell_of.size()), image.dim(0)}, image.dtype());
  CF_DISPATCH(image.dtype(), gather_cells_fwd, image, cell_of, hw, out);
  if (wants_grad(tape, image)) {
    out.set_requires_grad(true);
    tape->record([image, cell_of, hw, out] { CF_DISPATCH(image.dtype(), gather_cells_bwd, image, cell_of, hw, out); });
  }
  return finish("gather_cells", out);
}

}  // namespace cfield::ops
