// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "hinova/parallel.hpp"

namespace hinova::nn {

// Row-major matrix kernels in saxpy form: the inner loop updates a contiguous
// output row, which vectorizes under -O3 without any reassociation flags, and
// every output slot accumulates its sum in a fixed order, so results do not
// depend on the thread count.

/// C[m x n] += A[m x k] * B[k x n].
template <class T>
inline void gemm_nn(T* C, const T* A, const T* B, int m, int k, int n, ThreadPool* pool) {
  auto rows = [&](std::size_t i) {
    T* __restrict c = C + i * std::size_t(n);
    const T* a = A + i * std::size_t(k);
    for (int t = 0; t < k; ++t) {
      const T s = a[t];
      const T* __restrict b = B + std::size_t(t) * std::size_t(n);
      for (int j = 0; j < n; ++j) c[j] += s * b[j];
    }
  };
  if (pool && pool->size() > 1 && m > 1) {
    pool->parallel_for(std::size_t(m), rows);
  } else {
    for (std::size_t i = 0; i < std::size_t(m); ++i) rows(i);
  }
}

/// C[k2 x n] += A^T * B where A is [m x k2], B is [m x n].
/// Each C slot accumulates over i ascending on both paths, so the serial
/// input-row-major order (which streams A and B once while C stays cached)
/// gives bit-identical results to the parallel per-output-row order.
template <class T>
inline void gemm_tn(T* C, const T* A, const T* B, int m, int k2, int n, ThreadPool* pool) {
  if (pool && pool->size() > 1 && k2 > 1) {
    pool->parallel_for(std::size_t(k2), [&](std::size_t t) {
      T* __restrict c = C + t * std::size_t(n);
      for (int i = 0; i < m; ++i) {
        const T s = A[std::size_t(i) * std::size_t(k2) + t];
        const T* __restrict b = B + std::size_t(i) * std::size_t(n);
        for (int j = 0; j < n; ++j) c[j] += s * b[j];
      }
    });
  } else {
    for (std::size_t i = 0; i < std::size_t(m); ++i) {
      const T* a = A + i * std::size_t(k2);
      const T* __restrict b = B + i * std::size_t(n);
      for (int t = 0; t < k2; ++t) {
        const T s = a[t];
        T* __restrict c = C + std::size_t(t) * std::size_t(n);
        for (int j = 0; j < n; ++j) c[j] += s * b[j];
      }
    }
  }
}

/// out[m x n] = in^T for in [n x m].
template <class T>
inline void transpose(T* out, const T* in, int n, int m) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out[std::size_t(j) * std::size_t(n) + i] =
        in[std::size_t(i) * std::size_t(m) + j];
}

}  // namespace hinova::nn
