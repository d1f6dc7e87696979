#include "op_utils.hpp"

namespace cfield::ops {

using namespace detail;

namespace {

template <class S>
void wmse_fwd(const Tensor& pred, const std::vector<double>& target, const std::vector<double>& weights,
              Tensor& out) {
  const S* pp = pred.data<S>();
  double acc = 0.0;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    const double diff = static_cast<double>(pp[i]) - target[static_cast<size_t>(i)];
    acc += weights[static_cast<size_t>(i)] * diff * diff;
  }
  out.buf().set(0, acc / static_cast<double>(pred.numel()));
}

template <class S>
void wmse_bwd(const Tensor& pred, const std::vector<double>& target, const std::vector<double>& weights,
              const Tensor& out) {
  S* gp = pred.grad().data<S>();
  const S* pp = pred.data<S>();
  const double g = out.grad().at(0) * 2.0 / static_cast<double>(pred.numel());
  for (int64_t i = 0; i < pred.numel(); ++i) {
    const double diff = static_cast<double>(pp[i]) - target[static_cast<size_t>(i)];
    gp[i] += static_cast<S>(g * weights[static_cast<size_t>(i)] * diff);
  }
}

}  // namespace

Tensor weighted_mse(Tape* tape, const Tensor& pred, const std::vector<double>& target,
                    const std::vector<double>& weights) {
  if (static_cast<int64_t>(target.size()) != pred.numel() || static_cast<int64_t>(weights.size()) != pred.numel())
    fail_internal("weighted_mse: prediction " + pred.shape_str() + " vs " + std::to_string(target.size()) +
                  " targets / " + std::to_string(weights.size()) + " weights");
  if (pred.numel() == 0) fail_internal("weighted_mse: empty prediction");
  Tensor out = Tensor::zeros({1}, pred.dtype());
  CF_DISPATCH(pred.dtype(), wmse_fwd, pred, target, weights, out);
  if (wants_grad(tape, pred)) {
    out.set_requires_grad(true);
    tape->record([pred, target, weights, out] { CF_DISPATCH(pred.dtype(), wmse_bwd, pred, target, weights, out); });
  }
  return finish("weighted_mse", out);
}

}  // namespace cfield::ops
