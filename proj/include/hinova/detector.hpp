// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/fingerprint.hpp"
#include "hinova/kendall.hpp"
#include "hinova/preprocess.hpp"

namespace hinova {

/// Result of scoring one test fingerprint against the enrolled set.
/// score = 1 - tau_star lives in [0, 2]; larger means more novel. A
/// degenerate ranking (the test fingerprint or every enrolled one is
/// all-constant, so rank correlation is undefined) yields the maximal
/// score 2 with best_match -1.
struct ScoreResult {
  double score = 2.0;
  double tau_star = std::numeric_limits<double>::quiet_NaN();
  int best_match = -1;
  bool degenerate = false;
};

/// Rank-correlates the flattened test fingerprint against every enrolled
/// fingerprint and keeps the best agreement. Enrolled fingerprints that are
/// themselves degenerate are skipped. Ties on tau prefer the lowest owner id
/// so results do not depend on enrollment order.
inline ScoreResult score_open_set(const Fingerprint& test,
                                  const std::vector<Fingerprint>& enrolled) {
  require(!enrolled.empty(), "score_open_set: no enrolled fingerprints");
  for (const Fingerprint& k : enrolled) {
    if (k.mode != test.mode) fail("score_open_set: mode mismatch between test and enrolled fingerprints");
    if (k.nodes != test.nodes || k.bins != test.bins)
      fail("score_open_set: fingerprint shape mismatch");
  }
  ScoreResult r;
  if (test.degenerate()) {
    std::fprintf(stderr, "warning: degenerate ranking, test fingerprint is all-constant\n");
    r.degenerate = true;
    return r;
  }
  bool any = false;
  for (const Fingerprint& k : enrolled) {
    if (k.degenerate()) continue;
    const std::optional<double> tau = kendall_tau(test.data, k.data);
    // Neither side is constant, so tau is defined.
    require(tau.has_value(), "score_open_set: undefined correlation on non-constant input");
    if (!any || *tau > r.tau_star || (*tau == r.tau_star && k.owner_id < r.best_match)) {
      r.tau_star = *tau;
      r.best_match = k.owner_id;
    }
    any = true;
  }
  if (!any) {
    std::fprintf(stderr, "warning: degenerate ranking, every enrolled fingerprint is all-constant\n");
    r = ScoreResult{};
    r.degenerate = true;
    return r;
  }
  r.score = 1.0 - r.tau_star;
  return r;
}

/// A set of test slices scored together as one observation.
struct SliceGroup {
  std::string name;
  int device_id = -1;  // ground truth, used only for labeling reports
  std::vector<int> slices;
};

/// One group per device: the default granularity, matching how captures
/// arrive in practice (all slices of an emitter under test belong together).
inline std::vector<SliceGroup> group_by_device(const SliceDataset& ds) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < ds.n(); ++i) ids.push_back(ds.device_ids[i]);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<SliceGroup> out;
  for (int id : ids) {
    SliceGroup g;
    g.name = "dev" + std::to_string(id);
    g.device_id = id;
    for (std::size_t i = 0; i < ds.n(); ++i)
      if (ds.device_ids[i] == id) g.slices.push_back(int(i));
    out.push_back(std::move(g));
  }
  return out;
}

/// Fixed non-overlapping windows of `window` slices per device, in dataset
/// order. A short tail still forms a group so no slice is dropped.
inline std::vector<SliceGroup> group_by_window(const SliceDataset& ds, int window) {
  require(window >= 1, "group_by_window: window must be positive");
  std::vector<SliceGroup> per_device = group_by_device(ds);
  std::vector<SliceGroup> out;
  for (const SliceGroup& d : per_device) {
    int k = 0;
    for (std::size_t start = 0; start < d.slices.size(); start += std::size_t(window), ++k) {
      SliceGroup g;
      g.name = d.name + "_w" + std::to_string(k);
      g.device_id = d.device_id;
      const std::size_t end = std::min(d.slices.size(), start + std::size_t(window));
      g.slices.assign(d.slices.begin() + std::ptrdiff_t(start),
                      d.slices.begin() + std::ptrdiff_t(end));
      out.push_back(std::move(g));
    }
  }
  return out;
}

/// Gathers a group's feature rows into one contiguous block (model forward
/// wants consecutive items).
inline std::vector<float> gather_slices(const SliceDataset& ds, const std::vector<int>& idx) {
  require(!idx.empty(), "gather_slices: empty group");
  const std::size_t item = ds.feature_size();
  std::vector<float> out(idx.size() * item);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] >= 0 && std::size_t(idx[i]) < ds.n(), "gather_slices: slice index out of range");
    std::copy_n(ds.feature(std::size_t(idx[i])), item, out.data() + i * item);
  }
  return out;
}

struct DetectRow {
  std::string group;
  int n_slices = 0;
  int best_match = -1;
  double tau_star = std::numeric_limits<double>::quiet_NaN();
  double score = 2.0;
  bool flagged = false;
};

/// Scores every group against the enrolled fingerprints and flags the ones
/// whose novelty score exceeds the threshold.
inline std::vector<DetectRow> detect(nn::Model<float>& model, const SliceDataset& ds,
                                     const std::vector<SliceGroup>& groups,
                                     const std::vector<Fingerprint>& enrolled, double threshold) {
  require(threshold >= 0.0 && threshold <= 2.0, "detect: threshold must lie in [0, 2]");
  require(!enrolled.empty(), "detect: no enrolled fingerprints");
  const int bins = enrolled.front().bins;
  const FpMode mode = enrolled.front().mode;
  std::vector<DetectRow> rows;
  for (const SliceGroup& g : groups) {
    const std::vector<float> feats = gather_slices(ds, g.slices);
    Fingerprint fp = build_test_fingerprint(model, feats.data(), int(g.slices.size()), bins, mode,
                                            /*normalize=*/false);
    const ScoreResult r = score_open_set(fp, enrolled);
    DetectRow row;
    row.group = g.name;
    row.n_slices = int(g.slices.size());
    row.best_match = r.best_match;
    row.tau_star = r.tau_star;
    row.score = r.score;
    row.flagged = r.score > threshold;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_detect_csv(const std::string& path, const std::vector<DetectRow>& rows,
                             double threshold) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("write_detect_csv: cannot open " + path);
  os << "# threshold=" << fmt_double(threshold) << "\n";
  os << "group,n_slices,best_match,tau_star,score,flagged\n";
  for (const DetectRow& r : rows)
    os << r.group << "," << r.n_slices << "," << r.best_match << "," << fmt_double(r.tau_star)
       << "," << fmt_double(r.score) << "," << (r.flagged ? 1 : 0) << "\n";
  if (!os) fail("write_detect_csv: write failed: " + path);
}

}  // namespace hinova
