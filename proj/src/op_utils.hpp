#pragma once

#include <string>

#include "cfield/ops.hpp"

// Internal helpers shared by the op translation units.
namespace cfield::ops::detail {

inline void check_same_dtype(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype())
    fail_internal(std::string(op) + ": mixed dtypes " + dtype_name(a.dtype()) + " vs " + dtype_name(b.dtype()));
}

inline void check_rank(const Tensor& t, size_t rank, const char* op) {
  if (t.rank() != rank)
    fail_internal(std::string(op) + ": expected rank " + std::to_string(rank) + " tensor, got " + t.shape_str());
}

inline bool wants_grad(const Tape* tape, const Tensor& a) { return tape != nullptr && a.requires_grad(); }

inline bool wants_grad(const Tape* tape, const Tensor& a, const Tensor& b) {
  return tape != nullptr && (a.requires_grad() || b.requires_grad());
}

inline bool wants_grad(const Tape* tape, const Tensor& a, const Tensor& b, const Tensor& c) {
  return tape != nullptr && (a.requires_grad() || b.requires_grad() || c.requires_grad());
}

// Debug-mode guard: forward ops on finite inputs must produce finite data.
inline Tensor finish(const char* op, Tensor out) {
  if (debug_checks() && !out.buf().all_finite()) fail_internal(std::string(op) + ": non-finite value in output");
  return out;
}

#define CF_DISPATCH(dtype, fn, ...)            \
  do {                                         \
    if ((dtype) == ::cfield::Dtype::F64)       \
      fn<double>(__VA_ARGS__);                 \
    else                                       \
      fn<float>(__VA_ARGS__);                  \
  } while (0)

}  // namespace cfield::ops::detail
