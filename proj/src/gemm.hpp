#pragma once

#include <cstdint>

// Small dense kernels. All accumulate into C (callers zero-fill first when
// needed). Loop shapes are chosen so the inner loops vectorize without
// reassociating a single FP accumulator: axpy forms are per-element
// independent, and the dot form splits into fixed lanes summed in a fixed
// order, keeping results run-to-run deterministic.
namespace cfield::gemm {

template <class S>
inline S dot_lanes(const S* a, const S* b, int64_t k) {
  constexpr int L = 16;
  S acc[L] = {};
  int64_t t = 0;
  for (; t + L <= k; t += L)
    for (int l = 0; l < L; ++l) acc[l] += a[t + l] * b[t + l];
  S tail = 0;
  for (; t < k; ++t) tail += a[t] * b[t];
  S total = tail;
  for (int l = 0; l < L; ++l) total += acc[l];
  return total;
}

// C[n x m] += A[n x k] * B[k x m]
template <class S>
void gemm_nn(const S* a, const S* b, S* c, int64_t n, int64_t k, int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    S* crow = c + i * m;
    const S* arow = a + i * k;
    for (int64_t t = 0; t < k; ++t) {
      const S s = arow[t];
      const S* brow = b + t * m;
      for (int64_t j = 0; j < m; ++j) crow[j] += s * brow[j];
    }
  }
}

// C[n x m] += A[n x k] * B[m x k]^T
template <class S>
void gemm_nt(const S* a, const S* b, S* c, int64_t n, int64_t k, int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    const S* arow = a + i * k;
    S* crow = c + i * m;
    for (int64_t j = 0; j < m; ++j) crow[j] += dot_lanes(arow, b + j * k, k);
  }
}

// C[k x m] += A[n x k]^T * B[n x m]
template <class S>
void gemm_tn(const S* a, const S* b, S* c, int64_t n, int64_t k, int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    const S* arow = a + i * k;
    const S* brow = b + i * m;
    for (int64_t t = 0; t < k; ++t) {
      const S s = arow[t];
      S* crow = c + t * m;
      for (int64_t j = 0; j < m; ++j) crow[j] += s * brow[j];
    }
  }
}

}  // namespace cfield::gemm
