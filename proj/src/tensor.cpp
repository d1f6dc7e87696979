#include "cfield/tensor.hpp"

#include <cmath>
#include <sstream>

namespace cfield {

bool Buffer::all_finite() const {
  if (dtype_ == Dtype::F32) {
    for (float v : f32_)
      if (!std::isfinite(v)) return false;
  } else {
    for (double v : f64_)
      if (!std::isfinite(v)) return false;
  }
  return true;
}

int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t e : shape) {
    if (e < 0) fail_internal("negative extent in shape " + shape_to_string(shape));
    n *= e;
  }
  return n;
}

std::string shape_to_string(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor Tensor::make(std::vector<int64_t> shape, Dtype dt) {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  int64_t n = shape_numel(shape);
  t.impl_->shape = std::move(shape);
  t.impl_->data = Buffer(dt, n);
  return t;
}

Tensor Tensor::zeros(std::vector<int64_t> shape, Dtype dt) { return make(std::move(shape), dt); }

Tensor Tensor::full(std::vector<int64_t> shape, double value, Dtype dt) {
  Tensor t = make(std::move(shape), dt);
  t.impl_->data.fill(value);
  return t;
}

Tensor Tensor::from(std::vector<int64_t> shape, const std::vector<double>& values, Dtype dt) {
  Tensor t = make(std::move(shape), dt);
  if (static_cast<int64_t>(values.size()) != t.numel())
    fail_internal("from(): " + std::to_string(values.size()) + " values for shape " + t.shape_str());
  for (int64_t i = 0; i < t.numel(); ++i) t.impl_->data.set(i, values[static_cast<size_t>(i)]);
  return t;
}

Tensor Tensor::randn(std::vector<int64_t> shape, std::mt19937_64& rng, double stddev, Dtype dt) {
  Tensor t = make(std::move(shape), dt);
  std::normal_distribution<double> dist(0.0, stddev);
  for (int64_t i = 0; i < t.numel(); ++i) t.impl_->data.set(i, dist(rng));
  return t;
}

Tensor Tensor::clone() const {
  Tensor t = make(impl_->shape, dtype());
  t.impl_->data = impl_->data;
  t.impl_->requires_grad = impl_->requires_grad;
  return t;
}

Tensor Tensor::to(Dtype dt) const {
  if (dt == dtype()) return clone();
  Tensor t = make(impl_->shape, dt);
  for (int64_t i = 0; i < numel(); ++i) t.impl_->data.set(i, impl_->data.at(i));
  t.impl_->requires_grad = impl_->requires_grad;
  return t;
}

std::string Tensor::shape_str() const { return shape_to_string(impl_->shape); }

void Tape::backward(const Tensor& loss) {
  if (consumed_) fail_internal("tape already consumed; reset() before running backward again");
  if (!loss.defined() || loss.numel() != 1)
    fail_internal("backward() requires a scalar loss, got " + (loss.defined() ? loss.shape_str() : "<null>"));
  consumed_ = true;
  loss.grad().fill(1.0);
  for (auto it = rules_.rbegin(); it != rules_.rend(); ++it) (*it)();
}

}  // namespace cfield
