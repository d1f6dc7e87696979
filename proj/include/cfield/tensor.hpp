#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cfield/common.hpp"

namespace cfield {

enum class Dtype : uint8_t { F32 = 0, F64 = 1 };

inline const char* dtype_name(Dtype dt) { return dt == Dtype::F32 ? "f32" : "f64"; }
inline size_t dtype_size(Dtype dt) { return dt == Dtype::F32 ? 4 : 8; }

// Contiguous typed storage. Exactly one of the two vectors is engaged.
class Buffer {
 public:
  Buffer() = default;
  Buffer(Dtype dt, int64_t n) : dtype_(dt) {
    if (dt == Dtype::F32)
      f32_.assign(static_cast<size_t>(n), 0.0f);
    else
      f64_.assign(static_cast<size_t>(n), 0.0);
  }

  Dtype dtype() const { return dtype_; }
  int64_t size() const {
    return dtype_ == Dtype::F32 ? static_cast<int64_t>(f32_.size()) : static_cast<int64_t>(f64_.size());
  }

  template <class S>
  S* data();
  template <class S>
  const S* data() const;

  // Dtype-erased element access; used by IO, tests, and the optimizer.
  double at(int64_t i) const {
    return dtype_ == Dtype::F32 ? static_cast<double>(f32_[static_cast<size_t>(i)]) : f64_[static_cast<size_t>(i)];
  }
  void set(int64_t i, double v) {
    if (dtype_ == Dtype::F32)
      f32_[static_cast<size_t>(i)] = static_cast<float>(v);
    else
      f64_[static_cast<size_t>(i)] = v;
  }
  void fill(double v) {
    if (dtype_ == Dtype::F32)
      f32_.assign(f32_.size(), static_cast<float>(v));
    else
      f64_.assign(f64_.size(), v);
  }

  bool all_finite() const;

 private:
  Dtype dtype_ = Dtype::F64;
  std::vector<float> f32_;
  std::vector<double> f64_;
};

template <>
inline float* Buffer::data<float>() {
  return f32_.data();
}
template <>
inline double* Buffer::data<double>() {
  return f64_.data();
}
template <>
inline const float* Buffer::data<float>() const {
  return f32_.data();
}
template <>
inline const double* Buffer::data<double>() const {
  return f64_.data();
}

// Dense row-major tensor. Copies share storage; ops never mutate their
// inputs, so a tensor is immutable once the op that produced it returns.
// The gradient buffer lives beside the data and is allocated lazily by the
// first backward rule that touches it.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape, Dtype dt = Dtype::F64);
  static Tensor full(std::vector<int64_t> shape, double value, Dtype dt = Dtype::F64);
  static Tensor from(std::vector<int64_t> shape, const std::vector<double>& values, Dtype dt = Dtype::F64);
  static Tensor randn(std::vector<int64_t> shape, std::mt19937_64& rng, double stddev, Dtype dt = Dtype::F64);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int64_t>& shape() const { return impl_->shape; }
  int64_t dim(size_t i) const { return impl_->shape[i]; }
  size_t rank() const { return impl_->shape.size(); }
  int64_t numel() const { return impl_->data.size(); }
  Dtype dtype() const { return impl_->data.dtype(); }

  Buffer& buf() { return impl_->data; }
  const Buffer& buf() const { return impl_->data; }
  template <class S>
  S* data() {
    return impl_->data.data<S>();
  }
  template <class S>
  const S* data() const {
    return impl_->data.data<S>();
  }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    impl_->requires_grad = on;
    return *this;
  }

  bool has_grad() const { return impl_->grad != nullptr; }
  // Zero-initialized on first access; backward rules accumulate into it.
  Buffer& grad() const {
    if (!impl_->grad) impl_->grad = std::make_unique<Buffer>(dtype(), numel());
    return *impl_->grad;
  }
  void zero_grad() { impl_->grad.reset(); }

  double item() const {
    if (numel() != 1) fail_internal("item() on tensor with " + std::to_string(numel()) + " elements");
    return impl_->data.at(0);
  }
  double at(int64_t i) const { return impl_->data.at(i); }
  double grad_at(int64_t i) const { return grad().at(i); }

  Tensor clone() const;
  Tensor to(Dtype dt) const;

  // Storage identity, for tests and parameter bookkeeping.
  const void* id() const { return impl_.get(); }

  std::string shape_str() const;

 private:
  struct Impl {
    std::vector<int64_t> shape;
    Buffer data;
    bool requires_grad = false;
    mutable std::unique_ptr<Buffer> grad;
  };
  std::shared_ptr<Impl> impl_;

  static Tensor make(std::vector<int64_t> shape, Dtype dt);
};

int64_t shape_numel(const std::vector<int64_t>& shape);
std::string shape_to_string(const std::vector<int64_t>& shape);

// Reverse-mode tape, rebuilt on every forward pass. Ops append their
// backward rules in execution order; backward() runs them in reverse, which
// is a valid reverse-topological order for a define-by-run graph.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::function<void()> rule) { rules_.push_back(std::move(rule)); }

  // Seeds d(loss)/d(loss) = 1 and runs all recorded rules in reverse.
  // A tape can only be consumed once; reset() re-arms an empty tape.
  void backward(const Tensor& loss);

  void reset() {
    rules_.clear();
    consumed_ = false;
  }
  size_t size() const { return rules_.size(); }
  bool consumed() const { return consumed_; }

 private:
  std::vector<std::function<void()>> rules_;
  bool consumed_ = false;
};

}  // namespace cfield
