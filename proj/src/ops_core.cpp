#include <cmath>
#include <cstring>

#include "gemm.hpp"
#include "op_utils.hpp"

namespace cfield::ops {

using namespace detail;

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    fail_internal(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

template <class S>
void add_kernel(const Tensor& a, const Tensor& b, Tensor& out) {
  const S* pa = a.data<S>();
  const S* pb = b.data<S>();
  S* po = out.data<S>();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] + pb[i];
}

template <class S>
void acc_kernel(const Tensor& t, const Tensor& src_grad_of, double sign) {
  S* g = t.grad().data<S>();
  const S* go = src_grad_of.grad().data<S>();
  const S s = static_cast<S>(sign);
  for (int64_t i = 0; i < t.numel(); ++i) g[i] += s * go[i];
}

}  // namespace

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  check_same_dtype(a, b, "add");
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  CF_DISPATCH(a.dtype(), add_kernel, a, b, out);
  if (wants_grad(tape, a, b)) {
    out.set_requires_grad(true);
    tape->record([a, b, out] {
      if (a.requires_grad()) CF_DISPATCH(a.dtype(), acc_kernel, a, out, 1.0);
      if (b.requires_grad()) CF_DISPATCH(b.dtype(), acc_kernel, b, out, 1.0);
    });
  }
  return finish("add", out);
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  check_same_dtype(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  for (int64_t i = 0; i < out.numel(); ++i) out.buf().set(i, a.at(i) - b.at(i));
  if (wants_grad(tape, a, b)) {
    out.set_requires_grad(true);
    tape->record([a, b, out] {
      if (a.requires_grad()) CF_DISPATCH(a.dtype(), acc_kernel, a, out, 1.0);
      if (b.requires_grad()) CF_DISPATCH(b.dtype(), acc_kernel, b, out, -1.0);
    });
  }
  return finish("sub", out);
}

namespace {

template <class S>
void mul_kernel(const Tensor& a, const Tensor& b, Tensor& out) {
  const S* pa = a.data<S>();
  const S* pb = b.data<S>();
  S* po = out.data<S>();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * pb[i];
}

template <class S>
void mul_bwd(const Tensor& a, const Tensor& b, const Tensor& out) {
  const S* go = out.grad().data<S>();
  if (a.requires_grad()) {
    S* ga = a.grad().data<S>();
    const S* pb = b.data<S>();
    for (int64_t i = 0; i < out.numel(); ++i) ga[i] += go[i] * pb[i];
  }
  if (b.requires_grad()) {
    S* gb = b.grad().data<S>();
    const S* pa = a.data<S>();
    for (int64_t i = 0; i < out.numel(); ++i) gb[i] += go[i] * pa[i];
  }
}

}  // namespace

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  check_same_dtype(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  CF_DISPATCH(a.dtype(), mul_kernel, a, b, out);
  if (wants_grad(tape, a, b)) {
    out.set_requires_grad(true);
    tape->record([a, b, out] { CF_DISPATCH(a.dtype(), mul_bwd, a, b, out); });
  }
  return finish("mul", out);
}

namespace {

template <class S>
void scale_kernel(const Tensor& a, double c, Tensor& out) {
  const S* pa = a.data<S>();
  S* po = out.data<S>();
  const S s = static_cast<S>(c);
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = s * pa[i];
}

template <class S>
void scale_bwd(const Tensor& a, double c, const Tensor& out) {
  S* ga = a.grad().data<S>();
  const S* go = out.grad().data<S>();
  const S s = static_cast<S>(c);
  for (int64_t i = 0; i < out.numel(); ++i) ga[i] += s * go[i];
}

}  // namespace

Tensor scale(Tape* tape, const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  CF_DISPATCH(a.dtype(), scale_kernel, a, c, out);
  if (wants_grad(tape, a)) {
    out.set_requires_grad(true);
    tape->record([a, c, out] { CF_DISPATCH(a.dtype(), scale_bwd, a, c, out); });
  }
  return finish("scale", out);
}

namespace {

template <class S>
void relu_kernel(const Tensor& x, Tensor& out) {
  const S* px = x.data<S>();
  S* po = out.data<S>();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = px[i] > S(0) ? px[i] : S(0);
}

template <class S>
void relu_bwd(const Tensor& x, const Tensor& out) {
  S* gx = x.grad().data<S>();
  const S* go = out.grad().data<S>();
  const S* px = x.data<S>();
  for (int64_t i = 0; i < out.numel(); ++i)
    if (px[i] > S(0)) gx[i] += go[i];
}

template <class S>
void gelu_kernel(const Tensor& x, Tensor& out) {
  const S* px = x.data<S>();
  S* po = out.data<S>();
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double v = static_cast<double>(px[i]);
    po[i] = static_cast<S>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
  }
}

template <class S>
void gelu_bwd(const Tensor& x, const Tensor& out) {
  S* gx = x.grad().data<S>();
  const S* go = out.grad().data<S>();
  const S* px = x.data<S>();
  constexpr double inv_sqrt2pi = 0.3989422804014327;
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double v = static_cast<double>(px[i]);
    const double cdf = 0.5 * (1.0 + std::erf(v / std::sqrt(2.0)));
    const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
    gx[i] += go[i] * static_cast<S>(cdf + v * pdf);
  }
}

template <class S>
void sigmoid_kernel(const Tensor& x, Tensor& out) {
  const S* px = x.data<S>();
  S* po = out.data<S>();
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double v = static_cast<double>(px[i]);
    po[i] = static_cast<S>(v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)));
  }
}

template <class S>
void sigmoid_bwd(const Tensor& x, const Tensor& out) {
  S* gx = x.grad().data<S>();
  const S* go = out.grad().data<S>();
  const S* po = out.data<S>();
  for (int64_t i = 0; i < out.numel(); ++i) gx[i] += go[i] * po[i] * (S(1) - po[i]);
}

}  // namespace

Tensor relu(Tape* tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  CF_DISPATCH(x.dtype(), relu_kernel, x, out);
  if (wants_grad(tape, x)) {
    out.set_requires_grad(true);
    tape->record([x, out] { CF_DISPATCH(x.dtype(), relu_bwd, x, out); });
  }
  return finish("relu", out);
}

Tensor gelu(Tape* tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  CF_DISPATCH(x.dtype(), gelu_kernel, x, out);
  if (wants_grad(tape, x)) {
    out.set_requires_grad(true);
    tape->record([x, out] { CF_DISPATCH(x.dtype(), gelu_bwd, x, out); });
  }
  return finish("gelu", out);
}

Tensor sigmoid(Tape* tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  CF_DISPATCH(x.dtype(), sigmoid_kernel, x, out);
  if (wants_grad(tape, x)) {
    out.set_requires_grad(true);
    tape->record([x, out] { CF_DISPATCH(x.dtype(), sigmoid_bwd, x, out); });
  }
  return finish("sigmoid", out);
}

namespace {

template <class S>
void matmul_fwd(const Tensor& x, const Tensor& w, Tensor& out) {
  gemm::gemm_nn(x.data<S>(), w.data<S>(), out.data<S>(), x.dim(0), x.dim(1), w.dim(1));
}

template <class S>
void matmul_bwd(const Tensor& x, const Tensor& w, const Tensor& out) {
  const S* go = out.grad().data<S>();
  const int64_t n = x.dim(0), a = x.dim(1), b = w.dim(1);
  if (x.requires_grad()) gemm::gemm_nt(go, w.data<S>(), x.grad().data<S>(), n, b, a);
  if (w.requires_grad()) gemm::gemm_tn(x.data<S>(), go, w.grad().data<S>(), n, a, b);
}

template <class S>
void bias_add(const Tensor& bias, Tensor& out) {
  const S* pb = bias.data<S>();
  S* po = out.data<S>();
  const int64_t n = out.dim(0), b = out.dim(1);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < b; ++j) po[i * b + j] += pb[j];
}

template <class S>
void bias_bwd(const Tensor& bias, const Tensor& out) {
  S* gb = bias.grad().data<S>();
  const S* go = out.grad().data<S>();
  const int64_t n = out.dim(0), b = out.dim(1);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < b; ++j) gb[j] += go[i * b + j];
}

void check_matmul_shapes(const Tensor& x, const Tensor& w, const char* op) {
  check_rank(x, 2, op);
  check_rank(w, 2, op);
  if (x.dim(1) != w.dim(0))
    fail_internal(std::string(op) + ": inner dimensions disagree, " + x.shape_str() + " vs " + w.shape_str());
}

}  // namespace

Tensor matmul(Tape* tape, const Tensor& x, const Tensor& w) {
  check_matmul_shapes(x, w, "matmul");
  check_same_dtype(x, w, "matmul");
  Tensor out = Tensor::zeros({x.dim(0), w.dim(1)}, x.dtype());
  CF_DISPATCH(x.dtype(), matmul_fwd, x, w, out);
  if (wants_grad(tape, x, w)) {
    out.set_requires_grad(true);
    tape->record([x, w, out] { CF_DISPATCH(x.dtype(), matmul_bwd, x, w, out); });
  }
  return finish("matmul", out);
}

Tensor linear(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& bias) {
  check_matmul_shapes(x, w, "linear");
  check_same_dtype(x, w, "linear");
  check_same_dtype(x, bias, "linear");
  check_rank(bias, 1, "linear");
  if (bias.dim(0) != w.dim(1))
    fail_internal("linear: bias shape " + bias.shape_str() + " does not match weight " + w.shape_str());
  Tensor out = Tensor::zeros({x.dim(0), w.dim(1)}, x.dtype());
  CF_DISPATCH(x.dtype(), matmul_fwd, x, w, out);
  CF_DISPATCH(x.dtype(), bias_add, bias, out);
  if (wants_grad(tape, x, w, bias)) {
    out.set_requires_grad(true);
    tape->record([x, w, bias, out] {
      CF_DISPATCH(x.dtype(), matmul_bwd, x, w, out);
      if (bias.requires_grad()) CF_DISPATCH(x.dtype(), bias_bwd, bias, out);
    });
  }
  return finish("linear", out);
}

namespace {

template <class S>
void sum_kernel(const Tensor& x, Tensor& out) {
  const S* px = x.data<S>();
  double acc = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) acc += static_cast<double>(px[i]);
  out.buf().set(0, acc);
}

template <class S>
void fill_grad_bwd(const Tensor& x, const Tensor& out, double factor) {
  S* gx = x.grad().data<S>();
  const S g = static_cast<S>(out.grad().at(0) * factor);
  for (int64_t i = 0; i < x.numel(); ++i) gx[i] += g;
}

}  // namespace

Tensor sum(Tape* tape, const Tensor& x) {
  Tensor out = Tensor::zeros({1}, x.dtype());
  CF_DISPATCH(x.dtype(), sum_kernel, x, out);
  if (wants_grad(tape, x)) {
    out.set_requires_grad(true);
    tape->record([x, out] { CF_DISPATCH(x.dtype(), fill_grad_bwd, x, out, 1.0); });
  }
  return finish("sum", out);
}

Tensor mean(Tape* tape, const Tensor& x) {
  if (x.numel() == 0) fail_internal("mean: empty tensor");
  Tensor out = Tensor::zeros({1}, x.dtype());
  CF_DISPATCH(x.dtype(), sum_kernel, x, out);
  out.buf().set(0, out.at(0) / static_cast<double>(x.numel()));
  if (wants_grad(tape, x)) {
    out.set_requires_grad(true);
    const double inv_n = 1.0 / static_cast<double>(x.numel());
    tape->record([x, out, inv_n] { CF_DISPATCH(x.dtype(), fill_grad_bwd, x, out, inv_n); });
  }
  return finish("mean", out);
}

namespace {

template <class S>
void copy_kernel(const Tensor& src, Tensor& dst) {
  std::memcpy(dst.data<S>(), src.data<S>(), static_cast<size_t>(src.numel()) * sizeof(S));
}

template <class S>
void copy_grad_bwd(const Tensor& x, const Tensor& out) {
  S* gx = x.grad().data<S>();
  const S* go = out.grad().data<S>();
  for (int64_t i = 0; i < x.numel(); ++i) gx[i] += go[i];
}

template <class S>
void transpose_kernel(const S* src, S* dst, int64_t rows, int64_t cols) {
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}

template <class S>
void transpose_fwd(const Tensor& x, Tensor& out) {
  transpose_kernel(x.data<S>(), out.data<S>(), x.dim(0), x.dim(1));
}

template <class S>
void transpose_bwd(const Tensor& x, const Tensor& out) {
  // grad of transpose is transpose of grad; accumulate element-wise
  const S* go = out.grad().data<S>();
  S* gx = x.grad().data<S>();
  const int64_t rows = x.dim(0), cols = x.dim(1);
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) gx[i * cols + j] += go[j * rows + i];
}

}  // namespace

Tensor reshape(Tape* tape, const Tensor& x, std::vector<int64_t> shape) {
  if (shape_numel(shape) != x.numel())
    fail_internal("reshape: cannot view " + x.shape_str() + " as " + shape_to_string(shape));
  Tensor out = Tensor::zeros(std::move(shape), x.dtype());
  CF_DISPATCH(x.dtype(), copy_kernel, x, out);
  if (wants_grad(tape, x)) {
    out.set_requires_grad(true);
    tape->record([x, out] { CF_DISPATCH(x.dtype(), copy_grad_bwd, x, out); });
  }
  return finish("reshape", out);
}

Tensor transpose(Tape* tape, const Tensor& x) {
  check_rank(x, 2, "transpose");
  Tensor out = Tensor::zeros({x.dim(1), x.dim(0)}, x.dtype());
  CF_DISPATCH(x.dtype(), transpose_fwd, x, out);
  if (wants_grad(tape, x)) {
    out.set_requires_grad(true);
    tape->record([x, out] { CF_DISPATCH(x.dtype(), transpose_bwd, x, out); });
  }
  return finish("transpose", out);
}

}  // namespace cfield::ops
