// SPDX-License-Identifier: Apache-2.0
#pragma once

// Slow, obviously-correct reference implementations. These exist to check
// the fast paths (FFT autocorrelation, the convolution engine, the O(n log n)
// rank correlation, the closed-form average precision) and are exercised by
// both the unit tests and the `selftest` subcommand. Nothing here is used on
// the hot path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "hinova/common.hpp"

namespace hinova::reference {

/// Biased autocorrelation by direct summation, O(n * n_lags).
inline std::vector<double> autocorr_direct(const float* x, int n, int n_lags) {
  require(n >= 1 && n_lags >= 1 && n_lags <= n, "autocorr_direct: bad sizes");
  std::vector<double> r(static_cast<std::size_t>(n_lags), 0.0);
  for (int k = 0; k < n_lags; ++k) {
    double s = 0.0;
    for (int t = 0; t + k < n; ++t) s += double(x[t]) * double(x[t + k]);
    r[std::size_t(k)] = s / double(n);
  }
  return r;
}

/// Naive complex DFT, O(n^2). re/im hold n outputs.
inline void dft_naive(const double* in, int n, double* re, double* im) {
  const double two_pi = 6.283185307179586476925286766559;
  for (int k = 0; k < n; ++k) {
    double sr = 0.0, si = 0.0;
    for (int t = 0; t < n; ++t) {
      const double a = -two_pi * double(k) * double(t) / double(n);
      sr += in[t] * std::cos(a);
      si += in[t] * std::sin(a);
    }
    re[k] = sr;
    im[k] = si;
  }
}

/// Direct 2D cross-correlation with "same" zero padding.
/// Layouts: in [C_in][H][W], w [C_out][C_in][KH][KW], out [C_out][H][W].
/// Padding: top (KH-1)/2, left (KW-1)/2 (even kernels pad one more at
/// bottom/right).
template <class T>
inline void conv2d_same_direct(const T* in, int c_in, int h, int w_len, const T* weight,
                               int c_out, int kh, int kw, const T* bias, T* out) {
  const int pt = (kh - 1) / 2;
  const int pl = (kw - 1) / 2;
  for (int oc = 0; oc < c_out; ++oc) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w_len; ++x) {
        double acc = bias ? double(bias[oc]) : 0.0;
        for (int ic = 0; ic < c_in; ++ic) {
          for (int dy = 0; dy < kh; ++dy) {
            const int yy = y + dy - pt;
            if (yy < 0 || yy >= h) continue;
            for (int dx = 0; dx < kw; ++dx) {
              const int xx = x + dx - pl;
              if (xx < 0 || xx >= w_len) continue;
              acc += double(weight[((std::size_t(oc) * c_in + ic) * kh + dy) * kw + dx]) *
                     double(in[(std::size_t(ic) * h + yy) * w_len + xx]);
            }
          }
        }
        out[(std::size_t(oc) * h + y) * w_len + x] = T(acc);
      }
    }
  }
}

/// Kendall tau-b by O(n^2) pair enumeration. Returns nullopt when either
/// vector is constant under ties (a zero denominator factor).
inline std::optional<double> kendall_tau_brute(const double* x, const double* y, int n) {
  require(n >= 2, "kendall_tau_brute: need at least two observations");
  std::int64_t p = 0, q = 0, tx = 0, ty = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;  // tied in both: counted nowhere
      if (dx == 0.0) {
        ++tx;  // tied in x only
      } else if (dy == 0.0) {
        ++ty;  // tied in y only
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++p;
      } else {
        ++q;
      }
    }
  }
  const double d1 = double(p + q + tx);
  const double d2 = double(p + q + ty);
  if (d1 == 0.0 || d2 == 0.0) return std::nullopt;
  return double(p - q) / std::sqrt(d1 * d2);
}

/// Average precision with exact tie handling, by enumeration.
///
/// Items are ranked by descending score; the expectation is taken over all
/// arrangements of positives within each tied-score block (uniformly). Block
/// contributions are independent because precision inside a block depends
/// only on the fixed counts before the block, so the total is the sum of
/// per-block expectations, each averaged over its (b choose p) arrangements.
/// Labels: 1 = positive. Returns nullopt when there are no positives.
inline std::optional<double> average_precision_brute(const std::vector<double>& scores,
                                                     const std::vector<int>& labels) {
  require(scores.size() == labels.size(), "average_precision_brute: size mismatch");
  const int n = int(scores.size());
  if (n == 0) return std::nullopt;
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[std::size_t(i)] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return scores[std::size_t(a)] > scores[std::size_t(b)]; });
  int n_pos = 0;
  for (int l : labels) n_pos += (l != 0);
  if (n_pos == 0) return std::nullopt;

  double total = 0.0;
  int before = 0;     // items ranked strictly above the current block
  int tp_before = 0;  // positives among them
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && scores[std::size_t(idx[std::size_t(j)])] ==
                        scores[std::size_t(idx[std::size_t(i)])])
      ++j;
    const int b = j - i;
    int p = 0;
    for (int t = i; t < j; ++t) p += (labels[std::size_t(idx[std::size_t(t)])] != 0);
    if (p > 0) {
      // Enumerate all placements of p positives into b slots.
      std::vector<char> slot(static_cast<std::size_t>(b), 0);
      for (int t = 0; t < p; ++t) slot[std::size_t(b - 1 - t)] = 1;  // ascending start
      double sum = 0.0;
      std::int64_t count = 0;
      do {
        int tp = tp_before;
        double contrib = 0.0;
        for (int r = 0; r < b; ++r) {
          if (slot[std::size_t(r)]) {
            ++tp;
            contrib += double(tp) / double(before + r + 1);
          }
        }
        sum += contrib;
        ++count;
      } while (std::next_permutation(slot.begin(), slot.end()));
      total += sum / double(count);
    }
    before += b;
    tp_before += p;
    i = j;
  }
  return total / double(n_pos);
}

}  // namespace hinova::reference
