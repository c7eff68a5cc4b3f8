// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/nn/loss.hpp"
#include "hinova/nn/model.hpp"

namespace hinova {

/// What a fingerprint histogram is built from.
///  - final_step: h at the last recurrent step (the default pipeline).
///  - pairwise: joint 2D histogram of (h at step T-1, h at step T) per node.
///  - all_steps: h at every step pooled into one histogram (study flag).
enum class FpMode { final_step, pairwise, all_steps };

inline std::string fp_mode_name(FpMode m) {
  switch (m) {
    case FpMode::final_step: return "final";
    case FpMode::pairwise: return "pairwise";
    default: return "all-steps";
  }
}

inline FpMode fp_mode_from_name(const std::string& s) {
  if (s == "final") return FpMode::final_step;
  if (s == "pairwise") return FpMode::pairwise;
  if (s == "all-steps") return FpMode::all_steps;
  fail("unknown fingerprint mode '" + s + "'");
}

/// Histogram bin for a hidden value. Bins are equal width over [-1,1],
/// left-closed right-open, with the last bin closed at +1. Values outside
/// the range by at most 1e-6 are clamped; anything further out is an error
/// (hidden states are bounded, so that would be corrupted input).
inline int hist_bin(double v, int bins) {
  require(bins >= 1, "hist_bin: need at least one bin");
  if (v < -1.0) {
    require(v >= -1.0 - 1e-6, "hist_bin: value outside [-1,1]");
    v = -1.0;
  }
  if (v > 1.0) {
    require(v <= 1.0 + 1e-6, "hist_bin: value outside [-1,1]");
    v = 1.0;
  }
  int b = int(std::floor((v + 1.0) * 0.5 * double(bins)));
  if (b >= bins) b = bins - 1;
  if (b < 0) b = 0;
  return b;
}

/// Counts per bin over [-1,1]. An empty value set yields all zeros with a
/// warning; downstream scoring treats the resulting flat fingerprint as
/// maximally novel rather than failing.
inline std::vector<double> histogram(const double* values, std::size_t n, int bins) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  if (n == 0) {
    std::fprintf(stderr, "warning: histogram over an empty value set\n");
    return counts;
  }
  for (std::size_t i = 0; i < n; ++i) counts[std::size_t(hist_bin(values[i], bins))] += 1.0;
  return counts;
}

/// Per-device (or per-test-group) histogram matrix. data is node-major:
/// [nodes][bins] in single mode, [nodes][bins][bins] in pairwise mode with
/// the first bin axis indexing the earlier step. The same layout is the
/// documented flattening order for rank correlation.
struct Fingerprint {
  int owner_id = -1;
  int nodes = 0;
  int bins = 0;
  FpMode mode = FpMode::final_step;
  bool normalized = false;
  std::int64_t n_slices = 0;
  std::vector<double> data;

  std::size_t expected_size() const {
    const std::size_t nb = std::size_t(nodes) * std::size_t(bins);
    return mode == FpMode::pairwise ? nb * std::size_t(bins) : nb;
  }
  bool degenerate() const {
    if (data.empty()) return true;
    for (double v : data)
      if (v != data[0]) return false;
    return true;  // all-constant: rank correlation is undefined against it
  }
};

/// Final-step hidden values gathered from correctly classified slices, per
/// class. prev holds the step T-1 values when collected for pairwise use.
struct HiddenBank {
  int nodes = 0;
  bool with_prev = false;
  struct ClassBank {
    std::vector<float> last;  // [count][nodes]
    std::vector<float> prev;  // [count][nodes] when with_prev
    std::int64_t count = 0;
  };
  std::vector<ClassBank> classes;
};

/// Runs the trained model over labeled slices in eval mode and records the
/// final-step hidden vector of every correctly classified slice (plus the
/// step T-1 vector when with_prev). Misclassified slices contribute nothing.
/// With allow_empty false, a class with zero correctly classified slices is
/// an error naming the class; the evaluation pipeline passes true and lets
/// the degenerate fingerprint score as maximally novel.
inline HiddenBank collect_hidden(nn::Model<float>& model, const float* feats, const int* labels,
                                 int n, int n_classes, bool with_prev, bool allow_empty) {
  require(n >= 1, "collect_hidden: no slices");
  require(model.spec().arch == nn::Arch::cnn_lstm, "collect_hidden: model has no recurrent stage");
  require(model.spec().n_classes == n_classes, "collect_hidden: class count mismatch");
  const int m = model.spec().lstm_hidden;
  const int t_n = model.t_steps();
  require(!with_prev || t_n >= 2, "collect_hidden: pairwise needs at least two steps");
  HiddenBank bank;
  bank.nodes = m;
  bank.with_prev = with_prev;
  bank.classes.resize(static_cast<std::size_t>(n_classes));
  const std::size_t item = std::size_t(model.spec().in_h) * model.spec().in_w;
  const int k = n_classes;
  const int bmax = model.max_batch();
  for (int start = 0; start < n; start += bmax) {
    const int b = std::min(bmax, n - start);
    model.forward(feats + std::size_t(start) * item, b, false);
    const float* logits = model.logits();
    const float* h_last = model.hidden_step(t_n - 1);
    const float* h_prev = with_prev ? model.hidden_step(t_n - 2) : nullptr;
    for (int i = 0; i < b; ++i) {
      const int label = labels[start + i];
      require(label >= 0 && label < k, "collect_hidden: label out of range");
      if (nn::argmax_row(logits + std::size_t(i) * k, k) != label) continue;
      auto& cb = bank.classes[std::size_t(label)];
      cb.last.insert(cb.last.end(), h_last + std::size_t(i) * m, h_last + std::size_t(i + 1) * m);
      if (with_prev)
        cb.prev.insert(cb.prev.end(), h_prev + std::size_t(i) * m, h_prev + std::size_t(i + 1) * m);
      ++cb.count;
    }
  }
  if (!allow_empty) {
    for (int c = 0; c < n_classes; ++c)
      if (bank.classes[std::size_t(c)].count == 0)
        fail("collect_hidden: class " + std::to_string(c) +
             " has zero correctly classified slices; its fingerprint is undefined");
  }
  return bank;
}

namespace detail {
inline void maybe_normalize(Fingerprint& fp, bool normalize) {
  fp.normalized = normalize;
  if (normalize && fp.n_slices > 0)
    for (double& v : fp.data) v /= double(fp.n_slices);
}
}  // namespace detail

/// One M x B fingerprint per class, from the bank's final-step values.
/// Unnormalized entries are counts, so each node row sums to the class's
/// correctly-classified slice count. Normalization divides by that count.
inline std::vector<Fingerprint> build_fingerprints(const HiddenBank& bank, int bins,
                                                   bool normalize) {
  require(bins >= 1, "build_fingerprints: need at least one bin");
  std::vector<Fingerprint> out;
  const int m = bank.nodes;
  for (std::size_t c = 0; c < bank.classes.size(); ++c) {
    const auto& cb = bank.classes[c];
    Fingerprint fp;
    fp.owner_id = int(c);
    fp.nodes = m;
    fp.bins = bins;
    fp.mode = FpMode::final_step;
    fp.n_slices = cb.count;
    fp.data.assign(std::size_t(m) * std::size_t(bins), 0.0);
    if (cb.count == 0)
      std::fprintf(stderr, "warning: class %zu fingerprint built from zero slices\n", c);
    for (std::int64_t s = 0; s < cb.count; ++s)
      for (int node = 0; node < m; ++node) {
        const double v = double(cb.last[std::size_t(s) * m + node]);
        fp.data[std::size_t(node) * bins + hist_bin(v, bins)] += 1.0;
      }
    detail::maybe_normalize(fp, normalize);
    out.push_back(std::move(fp));
  }
  return out;
}

/// Pairwise variant: per node, a B x B joint histogram of the hidden value
/// at step T-1 (first axis) and step T (second axis).
inline std::vector<Fingerprint> build_pairwise_fingerprints(const HiddenBank& bank, int bins,
                                                            bool normalize) {
  require(bins >= 1, "build_pairwise_fingerprints: need at least one bin");
  require(bank.with_prev, "build_pairwise_fingerprints: bank lacks step T-1 values");
  std::vector<Fingerprint> out;
  const int m = bank.nodes;
  for (std::size_t c = 0; c < bank.classes.size(); ++c) {
    const auto& cb = bank.classes[c];
    Fingerprint fp;
    fp.owner_id = int(c);
    fp.nodes = m;
    fp.bins = bins;
    fp.mode = FpMode::pairwise;
    fp.n_slices = cb.count;
    fp.data.assign(std::size_t(m) * std::size_t(bins) * std::size_t(bins), 0.0);
    if (cb.count == 0)
      std::fprintf(stderr, "warning: class %zu pairwise fingerprint built from zero slices\n", c);
    for (std::int64_t s = 0; s < cb.count; ++s)
      for (int node = 0; node < m; ++node) {
        const int bp = hist_bin(double(cb.prev[std::size_t(s) * m + node]), bins);
        const int bc = hist_bin(double(cb.last[std::size_t(s) * m + node]), bins);
        fp.data[(std::size_t(node) * bins + std::size_t(bp)) * bins + std::size_t(bc)] += 1.0;
      }
    detail::maybe_normalize(fp, normalize);
    out.push_back(std::move(fp));
  }
  return out;
}

/// Fingerprint of one test group: every slice contributes (device identity
/// is unknown at test time, so there is no correctness filter). all_steps
/// pools the hidden values of every recurrent step instead of only the last,
/// accumulated streaming so long sequences cost no extra memory.
inline Fingerprint build_test_fingerprint(nn::Model<float>& model, const float* slices,
                                          int n_slices, int bins, FpMode mode, bool normalize) {
  require(n_slices >= 1, "build_test_fingerprint: empty test group");
  require(bins >= 1, "build_test_fingerprint: need at least one bin");
  require(model.spec().arch == nn::Arch::cnn_lstm,
          "build_test_fingerprint: model has no recurrent stage");
  const int m = model.spec().lstm_hidden;
  const int t_n = model.t_steps();
  require(mode != FpMode::pairwise || t_n >= 2,
          "build_test_fingerprint: pairwise needs at least two steps");
  Fingerprint fp;
  fp.nodes = m;
  fp.bins = bins;
  fp.mode = mode;
  fp.n_slices = n_slices;
  fp.data.assign(fp.expected_size(), 0.0);
  const std::size_t item = std::size_t(model.spec().in_h) * model.spec().in_w;
  const int bmax = model.max_batch();
  for (int start = 0; start < n_slices; start += bmax) {
    const int b = std::min(bmax, n_slices - start);
    model.forward(slices + std::size_t(start) * item, b, false);
    if (mode == FpMode::pairwise) {
      const float* hp = model.hidden_step(t_n - 2);
      const float* hc = model.hidden_step(t_n - 1);
      for (int i = 0; i < b; ++i)
        for (int node = 0; node < m; ++node) {
          const int bp = hist_bin(double(hp[std::size_t(i) * m + node]), bins);
          const int bc = hist_bin(double(hc[std::size_t(i) * m + node]), bins);
          fp.data[(std::size_t(node) * bins + std::size_t(bp)) * bins + std::size_t(bc)] += 1.0;
        }
    } else {
      const int t_lo = mode == FpMode::all_steps ? 0 : t_n - 1;
      for (int t = t_lo; t < t_n; ++t) {
        const float* h = model.hidden_step(t);
        for (int i = 0; i < b; ++i)
          for (int node = 0; node < m; ++node)
            fp.data[std::size_t(node) * bins +
                    hist_bin(double(h[std::size_t(i) * m + node]), bins)] += 1.0;
      }
    }
  }
  detail::maybe_normalize(fp, normalize);
  return fp;
}

/// Study-flag counterpart of collect_hidden + build_fingerprints: per-class
/// single-mode fingerprints pooling every recurrent step of every correctly
/// classified slice, accumulated streaming. Pairwise all-steps is rejected.
inline std::vector<Fingerprint> collect_fingerprints_all_steps(nn::Model<float>& model,
                                                               const float* feats,
                                                               const int* labels, int n,
                                                               int n_classes, int bins,
                                                               bool normalize, bool allow_empty) {
  require(n >= 1, "collect_fingerprints_all_steps: no slices");
  require(model.spec().arch == nn::Arch::cnn_lstm,
          "collect_fingerprints_all_steps: model has no recurrent stage");
  require(model.spec().n_classes == n_classes,
          "collect_fingerprints_all_steps: class count mismatch");
  const int m = model.spec().lstm_hidden;
  const int t_n = model.t_steps();
  std::vector<Fingerprint> out(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    out[std::size_t(c)].owner_id = c;
    out[std::size_t(c)].nodes = m;
    out[std::size_t(c)].bins = bins;
    out[std::size_t(c)].mode = FpMode::all_steps;
    out[std::size_t(c)].data.assign(std::size_t(m) * std::size_t(bins), 0.0);
  }
  const std::size_t item = std::size_t(model.spec().in_h) * model.spec().in_w;
  const int bmax = model.max_batch();
  for (int start = 0; start < n; start += bmax) {
    const int b = std::min(bmax, n - start);
    model.forward(feats + std::size_t(start) * item, b, false);
    const float* logits = model.logits();
    for (int i = 0; i < b; ++i) {
      const int label = labels[start + i];
      require(label >= 0 && label < n_classes, "collect_fingerprints_all_steps: label out of range");
      if (nn::argmax_row(logits + std::size_t(i) * n_classes, n_classes) != label) continue;
      Fingerprint& fp = out[std::size_t(label)];
      ++fp.n_slices;
      for (int t = 0; t < t_n; ++t) {
        const float* h = model.hidden_step(t);
        for (int node = 0; node < m; ++node)
          fp.data[std::size_t(node) * bins +
                  hist_bin(double(h[std::size_t(i) * m + node]), bins)] += 1.0;
      }
    }
  }
  for (int c = 0; c < n_classes; ++c) {
    if (out[std::size_t(c)].n_slices == 0) {
      if (!allow_empty)
        fail("collect_fingerprints_all_steps: class " + std::to_string(c) +
             " has zero correctly classified slices; its fingerprint is undefined");
      std::fprintf(stderr, "warning: class %d fingerprint built from zero slices\n", c);
    }
    detail::maybe_normalize(out[std::size_t(c)], normalize);
  }
  return out;
}

/// Fingerprint file: text header, separator, float64 blob in the documented
/// flattening order. Round-trips bitwise.
inline void save_fingerprint(const std::string& path, const Fingerprint& fp) {
  require(fp.data.size() == fp.expected_size(), "save_fingerprint: inconsistent data size");
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("save_fingerprint: cannot open " + path);
  os << "HFP 1\n";
  os << "owner_id=" << fp.owner_id << "\n";
  os << "nodes=" << fp.nodes << "\n";
  os << "bins=" << fp.bins << "\n";
  os << "mode=" << fp_mode_name(fp.mode) << "\n";
  os << "normalized=" << (fp.normalized ? 1 : 0) << "\n";
  os << "n_slices=" << fp.n_slices << "\n";
  os << "---BLOB---\n";
  write_f64_block(os, fp.data.data(), fp.data.size());
  if (!os) fail("save_fingerprint: write failed: " + path);
}

inline Fingerprint load_fingerprint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("load_fingerprint: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "HFP 1")
    fail("load_fingerprint: unsupported fingerprint file version in " + path);
  std::string header;
  bool sep = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "---BLOB---") {
      sep = true;
      break;
    }
    header += line + "\n";
  }
  if (!sep) fail("load_fingerprint: missing blob separator in " + path);
  std::istringstream hs(header);
  KvMap kv = parse_kv(hs);
  Fingerprint fp;
  fp.owner_id = int(kv.get_int("owner_id"));
  fp.nodes = int(kv.get_int("nodes"));
  fp.bins = int(kv.get_int("bins"));
  fp.mode = fp_mode_from_name(kv.get("mode"));
  fp.normalized = kv.get_int("normalized") != 0;
  fp.n_slices = kv.get_int("n_slices");
  require(fp.nodes >= 1 && fp.bins >= 1, "load_fingerprint: bad header in " + path);
  fp.data.resize(fp.expected_size());
  read_f64_block(is, fp.data.data(), fp.data.size());
  char extra;
  if (is.read(&extra, 1)) fail("load_fingerprint: trailing bytes in " + path);
  return fp;
}

}  // namespace hinova
