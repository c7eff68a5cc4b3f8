// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hinova/common.hpp"

namespace hinova {

/// Two-parameter Weibull distribution, used to model the tail of distances
/// between activations and their class mean.
struct WeibullFit {
  double shape = 1.0;
  double scale = 1.0;

  /// P(X <= x). Zero below the origin.
  double cdf(double x) const {
    if (!(x > 0.0)) return 0.0;
    return 1.0 - std::exp(-std::pow(x / scale, shape));
  }
};

/// Maximum-likelihood fit. The shape equation
///   g(k) = sum(x^k ln x)/sum(x^k) - 1/k - mean(ln x) = 0
/// is strictly increasing in k, so bisection is exact enough; the scale
/// follows in closed form. Inputs must be positive and not all identical
/// (an all-identical sample has no finite MLE; callers treat that case as
/// degenerate before fitting).
inline WeibullFit fit_weibull_mle(const double* x, std::size_t n) {
  require(n >= 2, "fit_weibull_mle: need at least two samples");
  double hi_v = 0.0, lo_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    require(std::isfinite(x[i]) && x[i] > 0.0, "fit_weibull_mle: samples must be positive");
    hi_v = std::max(hi_v, x[i]);
    lo_v = std::min(lo_v, x[i]);
  }
  require(hi_v > lo_v, "fit_weibull_mle: all samples identical, no finite fit");
  // The shape equation is invariant to a common positive scaling, so work on
  // x/max(x) to keep x^k away from overflow even at large shapes.
  std::vector<double> z(x, x + n);
  for (double& v : z) v /= hi_v;
  double mean_ln = 0.0;
  for (double v : z) mean_ln += std::log(v);
  mean_ln /= double(n);
  const auto g = [&](double k) {
    double num = 0.0, den = 0.0;
    for (double v : z) {
      const double p = std::pow(v, k);
      num += p * std::log(v);
      den += p;
    }
    return num / den - 1.0 / k - mean_ln;
  };
  double lo = 1e-3, hi = 100.0;
  if (g(hi) < 0.0) {
    // Extremely peaked sample; cap the shape rather than fail.
    lo = hi;
  } else {
    for (int it = 0; it < 200 && (hi - lo) > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) < 0.0 ? lo : hi) = mid;
    }
  }
  WeibullFit fit;
  fit.shape = 0.5 * (lo + hi);
  double sum_pk = 0.0;
  for (double v : z) sum_pk += std::pow(v, fit.shape);
  fit.scale = hi_v * std::pow(sum_pk / double(n), 1.0 / fit.shape);
  require(fit.scale > 0.0 && std::isfinite(fit.scale), "fit_weibull_mle: non-finite scale");
  return fit;
}

}  // namespace hinova
