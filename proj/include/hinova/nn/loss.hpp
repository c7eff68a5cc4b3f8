// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "hinova/common.hpp"

namespace hinova::nn {

/// Row-wise log-softmax, logits [b][k] -> logp [b][k] (may alias).
/// The log-sum-exp runs in double with the max subtracted first, so each
/// output row log-sum-exps back to zero to within float rounding.
template <class T>
inline void log_softmax_rows(const T* logits, T* logp, int b, int k) {
  for (int i = 0; i < b; ++i) {
    const T* in = logits + std::size_t(i) * k;
    T* out = logp + std::size_t(i) * k;
    double m = double(in[0]);
    for (int j = 1; j < k; ++j) m = std::max(m, double(in[j]));
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += std::exp(double(in[j]) - m);
    const double lse = m + std::log(s);
    for (int j = 0; j < k; ++j) out[j] = T(double(in[j]) - lse);
  }
}

/// Mean negative log likelihood over the batch.
template <class T>
inline double nll_loss(const T* logp, const int* labels, int b, int k) {
  double s = 0.0;
  for (int i = 0; i < b; ++i) {
    require(labels[i] >= 0 && labels[i] < k, "nll_loss: label out of range");
    s -= double(logp[std::size_t(i) * k + labels[i]]);
  }
  return s / double(b);
}

/// Gradient of the mean NLL with respect to log-probabilities.
template <class T>
inline void nll_backward(T* dlogp, const int* labels, int b, int k) {
  std::fill(dlogp, dlogp + std::size_t(b) * k, T(0));
  for (int i = 0; i < b; ++i) dlogp[std::size_t(i) * k + labels[i]] = T(-1.0 / double(b));
}

/// Row argmax; ties resolve to the lowest index.
template <class T>
inline int argmax_row(const T* row, int k) {
  int best = 0;
  for (int j = 1; j < k; ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

}  // namespace hinova::nn
