#include <cstring>
#include <vector>

#include "gemm.hpp"
#include "op_utils.hpp"

namespace cfield::ops {

using namespace detail;

namespace {

template <class S>
void dwconv_fwd(const Tensor& x, const Tensor& kernel, Tensor& out) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int64_t kh = kernel.dim(1), kw = kernel.dim(2);
  const int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const S* px = x.data<S>();
  const S* pk = kernel.data<S>();
  S* po = out.data<S>();
  for (int64_t ch = 0; ch < c; ++ch) {
    const S* xc = px + ch * h * w;
    const S* kc = pk + ch * kh * kw;
    S* oc = po + ch * h * w;
    for (int64_t u = 0; u < kh; ++u)
      for (int64_t v = 0; v < kw; ++v) {
        const S s = kc[u * kw + v];
        if (s == S(0)) continue;
        const int64_t dy = u - ph, dx = v - pw;
        const int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min(h, h - dy);
        const int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min(w, w - dx);
        for (int64_t y = y0; y < y1; ++y) {
          const S* src = xc + (y + dy) * w + dx;
          S* dst = oc + y * w;
          for (int64_t xx = x0; xx < x1; ++xx) dst[xx] += s * src[xx];
        }
      }
  }
}

template <class S>
void dwconv_bwd(const Tensor& x, const Tensor& kernel, const Tensor& out) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int64_t kh = kernel.dim(1), kw = kernel.dim(2);
  const int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const S* go = out.grad().data<S>();
  if (x.requires_grad()) {
    S* gx = x.grad().data<S>();
    const S* pk = kernel.data<S>();
    for (int64_t ch = 0; ch < c; ++ch) {
      S* gxc = gx + ch * h * w;
      const S* kc = pk + ch * kh * kw;
      const S* goc = go + ch * h * w;
      for (int64_t u = 0; u < kh; ++u)
        for (int64_t v = 0; v < kw; ++v) {
          const S s = kc[u * kw + v];
          if (s == S(0)) continue;
          const int64_t dy = u - ph, dx = v - pw;
          const int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min(h, h - dy);
          const int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min(w, w - dx);
          for (int64_t y = y0; y < y1; ++y) {
            S* dst = gxc + (y + dy) * w + dx;
            const S* src = goc + y * w;
            for (int64_t xx = x0; xx < x1; ++xx) dst[xx] += s * src[xx];
          }
        }
    }
  }
  if (kernel.requires_grad()) {
    S* gk = kernel.grad().data<S>();
    const S* px = x.data<S>();
    for (int64_t ch = 0; ch < c; ++ch) {
      const S* xc = px + ch * h * w;
      S* gkc = gk + ch * kh * kw;
      const S* goc = go + ch * h * w;
      for (int64_t u = 0; u < kh; ++u)
        for (int64_t v = 0; v < kw; ++v) {
          const int64_t dy = u - ph, dx = v - pw;
          const int64_t y0 = std::max<int64_t>(0, -dy), y1 = std::min(h, h - dy);
          const int64_t x0 = std::max<int64_t>(0, -dx), x1 = std::min(w, w - dx);
          double acc = 0.0;
          for (int64_t y = y0; y < y1; ++y) {
            const S* src = xc + (y + dy) * w + dx;
            const S* g = goc + y * w;
            for (int64_t xx = x0; xx < x1; ++xx) acc += static_cast<double>(g[xx]) * static_cast<double>(src[xx]);
          }
          gkc[u * kw + v] += static_cast<S>(acc);
        }
    }
  }
}

}  // namespace

Tensor depthwise_conv2d(Tape* tape, const Tensor& x, const Tensor& kernel) {
  check_rank(x, 3, "depthwise_conv2d");
  check_rank(kernel, 3, "depthwise_conv2d");
  check_same_dtype(x, kernel, "depthwise_conv2d");
  if (kernel.dim(0) != x.dim(0))
    fail_internal("depthwise_conv2d: kernel channels " + kernel.shape_str() + " vs input " + x.shape_str());
  if (kernel.dim(1) % 2 == 0 || kernel.dim(2) % 2 == 0)
    fail_config("depthwise_conv2d: kernel extents must be odd, got " + kernel.shape_str());
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  CF_DISPATCH(x.dtype(), dwconv_fwd, x, kernel, out);
  if (wants_grad(tape, x, kernel)) {
    out.set_requires_grad(true);
    tape->record([x, kernel, out] { CF_DISPATCH(x.dtype(), dwconv_bwd, x, kernel, out); });
  }
  return finish("depthwise_conv2d", out);
}

namespace {

struct ConvDims {
  int64_t ci, h, w, co, kh, kw, oh, ow;
  int stride, pad;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
  ConvDims d;
  d.ci = x.dim(0);
  d.h = x.dim(1);
  d.w = x.dim(2);
  d.co = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.stride = stride;
  d.pad = pad;
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  return d;
}

// col[p, (ci*kh + u)*kw + v] = x[ci, oy*stride+u-pad, ox*stride+v-pad]
template <class S>
void im2col(const S* x, const ConvDims& d, S* col) {
  const int64_t q = d.ci * d.kh * d.kw;
  std::memset(col, 0, static_cast<size_t>(d.oh * d.ow * q) * sizeof(S));
  for (int64_t oy = 0; oy < d.oh; ++oy)
    for (int64_t ox = 0; ox < d.ow; ++ox) {
      S* crow = col + (oy * d.ow + ox) * q;
      for (int64_t c = 0; c < d.ci; ++c)
        for (int64_t u = 0; u < d.kh; ++u) {
          const int64_t y = oy * d.stride + u - d.pad;
          if (y < 0 || y >= d.h) continue;
          const S* xrow = x + (c * d.h + y) * d.w;
          S* dst = crow + (c * d.kh + u) * d.kw;
          for (int64_t v = 0; v < d.kw; ++v) {
            const int64_t xx = ox * d.stride + v - d.pad;
            if (xx >= 0 && xx < d.w) dst[v] = xrow[xx];
          }
        }
    }
}

template <class S>
void col2im_acc(const S* col, const ConvDims& d, S* gx) {
  const int64_t q = d.ci * d.kh * d.kw;
  for (int64_t oy = 0; oy < d.oh; ++oy)
    for (int64_t ox = 0; ox < d.ow; ++ox) {
      const S* crow = col + (oy * d.ow + ox) * q;
      for (int64_t c = 0; c < d.ci; ++c)
        for (int64_t u = 0; u < d.kh; ++u) {
          const int64_t y = oy * d.stride + u - d.pad;
          if (y < 0 || y >= d.h) continue;
          S* xrow = gx + (c * d.h + y) * d.w;
          const S* src = crow + (c * d.kh + u) * d.kw;
          for (int64_t v = 0; v < d.kw; ++v) {
            const int64_t xx = ox * d.stride + v - d.pad;
            if (xx >= 0 && xx < d.w) xrow[xx] += src[v];
          }
        }
    }
}

template <class S>
void conv2d_fwd(const Tensor& x, const Tensor& w, const Tensor& bias, const ConvDims& d, Tensor& out) {
  const int64_t p = d.oh * d.ow, q = d.ci * d.kh * d.kw;
  std::vector<S> col(static_cast<size_t>(p * q));
  im2col(x.data<S>(), d, col.data());
  std::vector<S> omat(static_cast<size_t>(p * d.co), S(0));
  gemm::gemm_nt(col.data(), w.data<S>(), omat.data(), p, q, d.co);
  const S* pb = bias.data<S>();
  S* po = out.data<S>();
  for (int64_t o = 0; o < d.co; ++o) {
    const S b = pb[o];
    for (int64_t i = 0; i < p; ++i) po[o * p + i] = omat[i * d.co + o] + b;
  }
}

template <class S>
void conv2d_bwd(const Tensor& x, const Tensor& w, const Tensor& bias, const ConvDims& d, const Tensor& out) {
  const int64_t p = d.oh * d.ow, q = d.ci * d.kh * d.kw;
  const S* go = out.grad().data<S>();
  // reorder grad to (p x co)
  std::vector<S> gmat(static_cast<size_t>(p * d.co));
  for (int64_t o = 0; o < d.co; ++o)
    for (int64_t i = 0; i < p; ++i) gmat[i * d.co + o] = go[o * p + i];
  if (bias.requires_grad()) {
    S* gb = bias.grad().data<S>();
    for (int64_t o = 0; o < d.co; ++o) {
      double acc = 0.0;
      for (int64_t i = 0; i < p; ++i) acc += static_cast<double>(go[o * p + i]);
      gb[o] += static_cast<S>(acc);
    }
  }
  if (w.requires_grad()) {
    std::vector<S> col(static_cast<size_t>(p * q));
    im2col(x.data<S>(), d, col.data());
    gemm::gemm_tn(gmat.data(), col.data(), w.grad().data<S>(), p, d.co, q);
  }
  if (x.requires_grad()) {
    std::vector<S> gcol(static_cast<size_t>(p * q), S(0));
    gemm::gemm_nn(gmat.data(), w.data<S>(), gcol.data(), p, d.co, q);
    col2im_acc(gcol.data(), d, x.grad().data<S>());
  }
}

}  // namespace

Tensor conv2d(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad) {
  check_rank(x, 3, "conv2d");
  check_rank(w, 4, "conv2d");
  check_rank(bias, 1, "conv2d");
  check_same_dtype(x, w, "conv2d");
  check_same_dtype(x, bias, "conv2d");
  if (w.dim(1) != x.dim(0))
    fail_config("conv2d: weight expects " + std::to_string(w.dim(1)) + " input channels, tensor has " +
                std::to_string(x.dim(0)));
  if (bias.dim(0) != w.dim(0)) fail_internal("conv2d: bias/weight channel mismatch");
  if (stride < 1 || pad < 0) fail_config("conv2d: bad stride/pad");
  const ConvDims d = conv_dims(x, w, stride, pad);
  if (d.oh <= 0 || d.ow <= 0) fail_config("conv2d: output would be empty for input " + x.shape_str());
  Tensor out = Tensor::zeros({d.co, d.oh, d.ow}, x.dtype());
  CF_DISPATCH(x.dtype(), conv2d_fwd, x, w, bias, d, out);
  if (wants_grad(tape, x, w, bias)) {
    out.set_requires_grad(true);
    tape->record([x, w, bias, d, out] { CF_DISPATCH(x.dtype(), conv2d_bwd, x, w, bias, d, out); });
  }
  return finish("conv2d", out);
}

namespace {

template <class S>
void affine_fwd(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& out) {
  const int64_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  const S* px = x.data<S>();
  const S* pg = gamma.data<S>();
  const S* pb = beta.data<S>();
  S* po = out.data<S>();
  for (int64_t ch = 0; ch < c; ++ch) {
    const S g = pg[ch], b = pb[ch];
    const S* src = px + ch * hw;
    S* dst = po + ch * hw;
    for (int64_t i = 0; i < hw; ++i) dst[i] = g * src[i] + b;
  }
}

template <class S>
void affine_bwd(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& out) {
  const int64_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  const S* go = out.grad().data<S>();
  if (x.requires_grad()) {
    S* gx = x.grad().data<S>();
    const S* pg = gamma.data<S>();
    for (int64_t ch = 0; ch < c; ++ch) {
      const S g = pg[ch];
      const S* src = go + ch * hw;
      S* dst = gx + ch * hw;
      for (int64_t i = 0; i < hw; ++i) dst[i] += g * src[i];
    }
  }
  if (gamma.requires_grad()) {
    S* gg = gamma.grad().data<S>();
    const S* px = x.data<S>();
    for (int64_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int64_t i = 0; i < hw; ++i)
        acc += static_cast<double>(go[ch * hw + i]) * static_cast<double>(px[ch * hw + i]);
      gg[ch] += static_cast<S>(acc);
    }
  }
  if (beta.requires_grad()) {
    S* gb = beta.grad().data<S>();
    for (int64_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int64_t i = 0; i < hw; ++i) acc += static_cast<double>(go[ch * hw + i]);
      gb[ch] += static_cast<S>(acc);
    }
  }
}

}  // namespace

Tensor channel_affine(Tape* tape, const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  check_rank(x, 3, "channel_affine");
  if (gamma.numel() != x.dim(0) || beta.numel() != x.dim(0))
    fail_internal("channel_affine: scale shape mismatch for " + x.shape_str());
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  CF_DISPATCH(x.dtype(), affine_fwd, x, gamma, beta, out);
  if (wants_grad(tape, x, gamma, beta)) {
    out.set_requires_grad(true);
    tape->record([x, gamma, beta, out] { CF_DISPATCH(x.dtype(), affine_bwd, x, gamma, beta, out); });
  }
  return finish("channel_affine", out);
}

namespace {

template <class S>
void upsample_fwd(const Tensor& x, Tensor& out) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const S* px = x.data<S>();
  S* po = out.data<S>();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y) {
      const S* src = px + (ch * h + y) * w;
      S* d0 = po + (ch * 2 * h + 2 * y) * 2 * w;
      S* d1 = d0 + 2 * w;
      for (int64_t xx = 0; xx < w; ++xx) {
        d0[2 * xx] = d0[2 * xx + 1] = src[xx];
        d1[2 * xx] = d1[2 * xx + 1] = src[xx];
      }
    }
}

template <class S>
void upsample_bwd(const Tensor& x, const Tensor& out) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  S* gx = x.grad().data<S>();
  const S* go = out.grad().data<S>();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y) {
      S* dst = gx + (ch * h + y) * w;
      const S* s0 = go + (ch * 2 * h + 2 * y) * 2 * w;
      const S* s1 = s0 + 2 * w;
      for (int64_t xx = 0; xx < w; ++xx)
        dst[xx] += s0[2 * xx] + s0[2 * xx + 1] + s1[2 * xx] + s1[2 * xx + 1];
    }
}

}  // namespace

Tensor upsample2x(Tape* tape, const Tensor& x) {
  check_rank(x, 3, "upsample2x");
  Tensor out = Tensor::zeros({x.dim(0), x.dim(1) * 2, x.dim(2) * 2}, x.dtype());
  CF_DISPATCH(x.dtype(), upsample_fwd, x, out);
  if (wants_grad(tape, x)) {
    out.set_requires_grad(true);
    tape->record([x, out] { CF_DISPATCH(x.dtype(), upsample_bwd, x, out); });
  }
  return finish("upsample2x", out);
}

namespace {

template <class S>
void concat_fwd(const std::vector<Tensor>& xs, Tensor& out) {
  S* po = out.data<S>();
  for (const Tensor& x : xs) {
    std::memcpy(po, x.data<S>(), static_cast<size_t>(x.numel()) * sizeof(S));
    po += x.numel();
  }
}

template <class S>
void concat_bwd(const std::vector<Tensor>& xs, const Tensor& out) {
  const S* go = out.grad().data<S>();
  int64_t offset = 0;
  for (const Tensor& x : xs) {
    if (x.requires_grad()) {
      S* gx = x.grad().data<S>();
      for (int64_t i = 0; i < x.numel(); ++i) gx[i] += go[offset + i];
    }
    offset += x.numel();
  }
}

}  // namespace

Tensor concat_channels(Tape* tape, const std::vector<Tensor>& xs) {
  if (xs.empty()) fail_internal("concat_channels: no inputs");
  int64_t c = 0;
  bool any_grad = false;
  for (const Tensor& x : xs) {
    check_rank(x, 3, "concat_channels");
    check_same_dtype(xs[0], x, "concat_channels");
    if (x.dim(1) != xs[0].dim(1) || x.dim(2) != xs[0].dim(2))
      fail_internal("concat_channels: spatial mismatch " + x.shape_str() + " vs " + xs[0].shape_str());
    c += x.dim(0);
    any_grad = any_grad || x.requires_grad();
  }
  Tensor out = Tensor::zeros({c, xs[0].dim(1), xs[0].dim(2)}, xs[0].dtype());
  CF_DISPATCH(out.dtype(), concat_fwd, xs, out);
  if (tape != nullptr && any_grad) {
    out.set_requires_grad(true);
    tape->record([xs, out] { CF_DISPATCH(out.dtype(), concat_bwd, xs, out); });
  }
  return finish("concat_channels", out);
}

namespace {

template <class S>
void pad_fwd(const Tensor& x, Tensor& out) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2), ow = out.dim(2), oh = out.dim(1);
  const S* px = x.data<S>();
  S* po = out.data<S>();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y)
      std::memcpy(po + (ch * oh + y) * ow, px + (ch * h + y) * w, static_cast<size_t>(w) * sizeof(S));
}

template <class S>
void pad_bwd(const Tensor& x, const Tensor& out) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2), ow = out.dim(2), oh = out.dim(1);
  S* gx = x.grad().data<S>();
  const S* go = out.grad().data<S>();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y) {
      const S* src = go + (ch * oh + y) * ow;
      S* dst = gx + (ch * h + y) * w;
      for (int64_t xx = 0; xx < w; ++xx) dst[xx] += src[xx];
    }
}

template <class S>
void crop_fwd(const Tensor& x, Tensor& out) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2), oh = out.dim(1), ow = out.dim(2);
  const S* px = x.data<S>();
  S* po = out.data<S>();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < oh; ++y)
      std::memcpy(po + (ch * oh + y) * ow, px + (ch * h + y) * w, static_cast<size_t>(ow) * sizeof(S));
}

template <class S>
void crop_bwd(const Tensor& x, const Tensor& out) {
  const int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2), oh = out.dim(1), ow = out.dim(2);
  S* gx = x.grad().data<S>();
  const S* go = out.grad().data<S>();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < oh; ++y) {
      const S* src = go + (ch * oh + y) * ow;
      S* dst = gx + (ch * h + y) * w;
      for (int64_t xx = 0; xx < ow; ++xx) dst[xx] += src[xx];
    }
}

}  // namespace

Tensor pad2d(Tape* tape, const Tensor& x, int bottom, int right) {
  check_rank(x, 3, "pad2d");
  if (bottom < 0 || right < 0) fail_internal("pad2d: negative padding");
  if (bottom == 0 && right == 0) return reshape(tape, x, x.shape());
  Tensor out = Tensor::zeros({x.dim(0), x.dim(1) + bottom, x.dim(2) + right}, x.dtype());
  CF_DISPATCH(x.dtype(), pad_fwd, x, out);
  if (wants_grad(tape, x)) {
    out.set_requires_grad(true);
    tape->record([x, out] { CF_DISPATCH(x.dtype(), pad_bwd, x, out); });
  }
  return finish("pad2d", out);
}

Tensor crop2d(Tape* tape, const Tensor& x, int64_t h, int64_t w) {
  check_rank(x, 3, "crop2d");
  if (h > x.dim(1) || w > x.dim(2)) fail_internal("crop2d: crop larger than input " + x.shape_str());
  if (h == x.dim(1) && w == x.dim(2)) return reshape(tape, x, x.shape());
  Tensor out = Tensor::zeros({x.dim(0), h, w}, x.dtype());
  CF_DISPATCH(x.dtype(), crop_fwd, x, out);
  if (wants_grad(tape, x)) {
    out.set_requires_grad(true);
    tape->record([x, out] { CF_DISPATCH(x.dtype(), crop_bwd, x, out); });
  }
  return finish("crop2d", out);
}

}  // namespace cfield::ops
