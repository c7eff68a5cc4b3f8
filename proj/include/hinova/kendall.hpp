// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "hinova/common.hpp"

namespace hinova {

namespace detail {

/// Counts strict inversions (i < j with a[i] > a[j]) by merge sort.
/// Equal elements are taken from the left run first, so ties never count.
inline std::int64_t merge_count_inversions(std::vector<double>& a, std::vector<double>& buf) {
  const std::size_t n = a.size();
  std::int64_t inv = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (a[i] <= a[j]) {
          buf[k++] = a[i++];
        } else {
          inv += std::int64_t(mid - i);
          buf[k++] = a[j++];
        }
      }
      while (i < mid) buf[k++] = a[i++];
      while (j < hi) buf[k++] = a[j++];
      std::copy(buf.begin() + std::ptrdiff_t(lo), buf.begin() + std::ptrdiff_t(hi),
                a.begin() + std::ptrdiff_t(lo));
    }
  }
  return inv;
}

inline std::int64_t pairs(std::int64_t t) { return t * (t - 1) / 2; }

}  // namespace detail

/// Tie-aware rank correlation between two equal-length value sequences:
/// (P - Q) / sqrt((P + Q + T_x)(P + Q + T_y)), where P/Q count concordant and
/// discordant pairs, T_x/T_y count pairs tied in exactly one sequence, and
/// pairs tied in both are dropped. O(n log n) via sorting plus an inversion
/// count. Returns nothing when either sequence is constant (the coefficient
/// is undefined there).
inline std::optional<double> kendall_tau(const double* x, const double* y, int n) {
  require(n >= 2, "kendall_tau: need at least two observations");
  for (int i = 0; i < n; ++i)
    require(std::isfinite(x[i]) && std::isfinite(y[i]), "kendall_tau: non-finite input");

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  // Tie masses in x, and in (x,y) jointly, over the sorted order.
  std::int64_t n1 = 0, n3 = 0;
  {
    std::int64_t run_x = 1, run_xy = 1;
    for (int i = 1; i < n; ++i) {
      const int a = idx[std::size_t(i - 1)], b = idx[std::size_t(i)];
      if (x[a] == x[b]) {
        ++run_x;
        if (y[a] == y[b]) {
          ++run_xy;
        } else {
          n3 += detail::pairs(run_xy);
          run_xy = 1;
        }
      } else {
        n1 += detail::pairs(run_x);
        n3 += detail::pairs(run_xy);
        run_x = run_xy = 1;
      }
    }
    n1 += detail::pairs(run_x);
    n3 += detail::pairs(run_xy);
  }

  // Discordant pairs: strict y inversions after the (x, y) sort. Pairs tied
  // in x are y-sorted, and y ties are not strict, so neither contributes.
  std::vector<double> ys(static_cast<std::size_t>(n)), buf(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ys[std::size_t(i)] = y[idx[std::size_t(i)]];
  const std::int64_t q = detail::merge_count_inversions(ys, buf);

  // Tie mass in y (ys is now fully sorted by the merge).
  std::int64_t n2 = 0;
  {
    std::int64_t run_y = 1;
    for (int i = 1; i < n; ++i) {
      if (ys[std::size_t(i - 1)] == ys[std::size_t(i)]) {
        ++run_y;
      } else {
        n2 += detail::pairs(run_y);
        run_y = 1;
      }
    }
    n2 += detail::pairs(run_y);
  }

  const std::int64_t n0 = std::int64_t(n) * (n - 1) / 2;
  const std::int64_t p = n0 - q - n1 - n2 + n3;
  const std::int64_t tx = n1 - n3;
  const std::int64_t ty = n2 - n3;
  const double d1 = double(p + q + tx);
  const double d2 = double(p + q + ty);
  if (d1 == 0.0 || d2 == 0.0) return std::nullopt;
  return double(p - q) / std::sqrt(d1 * d2);
}

inline std::optional<double> kendall_tau(const std::vector<double>& x,
                                         const std::vector<double>& y) {
  require(x.size() == y.size(), "kendall_tau: length mismatch");
  return kendall_tau(x.data(), y.data(), int(x.size()));
}

}  // namespace hinova
