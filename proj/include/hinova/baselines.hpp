// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/nn/loss.hpp"
#include "hinova/nn/model.hpp"
#include "hinova/weibull.hpp"

namespace hinova {

/// Negated maximum logit: a confident closed-set prediction has a large top
/// logit, so unfamiliar inputs score higher.
inline double maxlogit_score(const float* logits, int k) {
  require(k >= 1, "maxlogit_score: need at least one class");
  double best = double(logits[0]);
  for (int i = 1; i < k; ++i) best = std::max(best, double(logits[i]));
  return -best;
}

/// Per-class logit vectors of correctly classified slices, the activation
/// sets the open-set calibration below is fitted on. With allow_empty false
/// a class with zero correct slices is an error naming the class.
inline std::vector<std::vector<double>> collect_logits(nn::Model<float>& model, const float* feats,
                                                       const int* labels, int n, int n_classes,
                                                       bool allow_empty) {
  require(n >= 1, "collect_logits: no slices");
  require(model.spec().n_classes == n_classes, "collect_logits: class count mismatch");
  std::vector<std::vector<double>> acts(static_cast<std::size_t>(n_classes));
  const std::size_t item = std::size_t(model.spec().in_h) * model.spec().in_w;
  const int bmax = model.max_batch();
  for (int start = 0; start < n; start += bmax) {
    const int b = std::min(bmax, n - start);
    model.forward(feats + std::size_t(start) * item, b, false);
    const float* logits = model.logits();
    for (int i = 0; i < b; ++i) {
      const int label = labels[start + i];
      require(label >= 0 && label < n_classes, "collect_logits: label out of range");
      const float* row = logits + std::size_t(i) * n_classes;
      if (nn::argmax_row(row, n_classes) != label) continue;
      for (int c = 0; c < n_classes; ++c) acts[std::size_t(label)].push_back(double(row[c]));
    }
  }
  if (!allow_empty)
    for (int c = 0; c < n_classes; ++c)
      if (acts[std::size_t(c)].empty())
        fail("collect_logits: class " + std::to_string(c) +
             " has zero correctly classified slices");
  return acts;
}

/// Per-class calibration of the activation space: mean activation vector
/// plus a Weibull tail fitted to the largest distances from it. A class
/// whose activations carry no spread (or no samples at all) is marked
/// degenerate and never votes for novelty.
struct OpenMaxModel {
  int n_classes = 0;
  int dim = 0;          // activation dimensionality (== n_classes for logits)
  int tail = 20;        // requested tail size
  double alpha = 3.0;   // number of top classes revised
  std::vector<double> mav;         // [n_classes][dim]
  std::vector<WeibullFit> tails;   // [n_classes]
  std::vector<char> degenerate;    // [n_classes]
};

inline double euclidean(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// acts_per_class[c] holds [count][dim] activations row-major.
inline OpenMaxModel fit_openmax(const std::vector<std::vector<double>>& acts_per_class, int dim,
                                int tail = 20, double alpha = 3.0) {
  const int k = int(acts_per_class.size());
  require(k >= 2, "fit_openmax: need at least two classes");
  require(dim >= 1, "fit_openmax: bad activation dimension");
  require(tail >= 2, "fit_openmax: tail size must be at least 2");
  require(alpha >= 1.0 && alpha <= double(k), "fit_openmax: alpha out of range");
  OpenMaxModel m;
  m.n_classes = k;
  m.dim = dim;
  m.tail = tail;
  m.alpha = alpha;
  m.mav.assign(std::size_t(k) * dim, 0.0);
  m.tails.assign(static_cast<std::size_t>(k), WeibullFit{});
  m.degenerate.assign(static_cast<std::size_t>(k), 0);
  for (int c = 0; c < k; ++c) {
    const auto& a = acts_per_class[std::size_t(c)];
    require(a.size() % std::size_t(dim) == 0, "fit_openmax: ragged activation rows");
    const std::size_t count = a.size() / std::size_t(dim);
    double* mav = m.mav.data() + std::size_t(c) * dim;
    if (count == 0) {
      std::fprintf(stderr, "warning: class %d has no activations; it will never vote novel\n", c);
      m.degenerate[std::size_t(c)] = 1;
      continue;
    }
    for (std::size_t i = 0; i < count; ++i)
      for (int j = 0; j < dim; ++j) mav[j] += a[i * std::size_t(dim) + j];
    for (int j = 0; j < dim; ++j) mav[j] /= double(count);
    std::vector<double> dist(count);
    for (std::size_t i = 0; i < count; ++i)
      dist[i] = euclidean(a.data() + i * std::size_t(dim), mav, dim);
    std::sort(dist.begin(), dist.end(), std::greater<double>());
    std::size_t use = std::min(dist.size(), std::size_t(tail));
    if (use < std::size_t(tail))
      std::fprintf(stderr, "warning: class %d has %zu activation rows, tail reduced from %d\n", c,
                   count, tail);
    // Largest `use` distances, dropping non-positive ones (exact duplicates
    // of the mean carry no tail information).
    while (use > 0 && !(dist[use - 1] > 0.0)) --use;
    if (use < 2 || !(dist[0] > dist[use - 1])) {
      std::fprintf(stderr,
                   "warning: class %d activations are identical; it will never vote novel\n", c);
      m.degenerate[std::size_t(c)] = 1;
      continue;
    }
    m.tails[std::size_t(c)] = fit_weibull_mle(dist.data(), use);
  }
  return m;
}

/// Calibrated open-set probabilities for one activation vector: the top
/// alpha classes give up activation mass in proportion to how far the input
/// sits in their distance tail, the surrendered mass becomes the unknown
/// activation, and a softmax over the k+1 activations yields probabilities.
struct OpenMaxScore {
  std::vector<double> probs;  // [n_classes + 1], unknown last
  double unknown_prob = 0.0;
  int argmax = -1;            // index into probs; n_classes means unknown
};

inline OpenMaxScore openmax_score(const OpenMaxModel& m, const double* act) {
  const int k = m.n_classes;
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return act[a] > act[b]; });
  std::vector<double> revised(act, act + k);
  double unknown_act = 0.0;
  const int top = int(m.alpha);
  for (int r = 1; r <= top && r <= k; ++r) {
    const int c = order[std::size_t(r - 1)];
    if (m.degenerate[std::size_t(c)]) continue;
    const double w = (m.alpha - double(r) + 1.0) / m.alpha;
    const double d = euclidean(act, m.mav.data() + std::size_t(c) * m.dim, m.dim);
    const double cdf = m.tails[std::size_t(c)].cdf(d);
    const double removed = act[c] * w * cdf;
    revised[std::size_t(c)] = act[c] - removed;
    unknown_act += removed;
  }
  revised.push_back(unknown_act);
  // Softmax over k+1 revised activations.
  OpenMaxScore s;
  double mx = revised[0];
  for (double v : revised) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : revised) z += std::exp(v - mx);
  s.probs.resize(revised.size());
  for (std::size_t i = 0; i < revised.size(); ++i) s.probs[i] = std::exp(revised[i] - mx) / z;
  s.unknown_prob = s.probs.back();
  s.argmax = int(std::max_element(s.probs.begin(), s.probs.end()) - s.probs.begin());
  return s;
}

inline double openmax_novelty(const OpenMaxModel& m, const float* logits) {
  std::vector<double> act(static_cast<std::size_t>(m.n_classes));
  for (int i = 0; i < m.n_classes; ++i) act[std::size_t(i)] = double(logits[i]);
  return openmax_score(m, act.data()).unknown_prob;
}

}  // namespace hinova
