// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/dataio.hpp"
#include "hinova/fft.hpp"
#include "hinova/parallel.hpp"

namespace hinova {

/// Reusable autocorrelation engine for a fixed slice length. Holds one FFT
/// plan and scratch buffers so featurizing thousands of slices does not
/// re-plan. Not thread safe; create one per thread.
class Autocorrelator {
 public:
  explicit Autocorrelator(int n) : n_(n), fft_(next_pow2(2 * n)) {
    require(n >= 1, "Autocorrelator: empty length");
    padded_.assign(static_cast<std::size_t>(fft_.size()), 0.0);
    re_.resize(static_cast<std::size_t>(fft_.bins()));
    im_.resize(static_cast<std::size_t>(fft_.bins()));
    full_.resize(static_cast<std::size_t>(fft_.size()));
  }

  int length() const { return n_; }

  /// Biased r[k] = (1/n) sum_t x[t] x[t+k], k in [0, n_lags).
  void transform(const float* x, int n_lags, double* out) {
    require(n_lags >= 1 && n_lags <= n_, "Autocorrelator: n_lags out of range");
    for (int i = 0; i < n_; ++i) padded_[std::size_t(i)] = double(x[i]);
    const int nf = fft_.bins();
    fft_.forward(padded_.data(), re_.data(), im_.data());
    for (int i = 0; i < nf; ++i) {
      re_[std::size_t(i)] = re_[std::size_t(i)] * re_[std::size_t(i)] +
                            im_[std::size_t(i)] * im_[std::size_t(i)];
      im_[std::size_t(i)] = 0.0;
    }
    fft_.inverse(re_.data(), im_.data(), full_.data());
    const double scale = 1.0 / (double(fft_.size()) * double(n_));
    for (int k = 0; k < n_lags; ++k) out[k] = full_[std::size_t(k)] * scale;
  }

 private:
  int n_;
  RealFft<double> fft_;
  std::vector<double> padded_, re_, im_, full_;
};

/// Feature input geometry: one [2][slice_len] plane per slice, row 0 the I
/// autocorrelation and row 1 the Q autocorrelation, both over slice_len lags.
constexpr int kFeatureRows = 2;

/// Computes the feature plane for one slice of interleaved I,Q floats.
/// With normalize set (the default pipeline behavior) each row is divided by
/// its zero-lag value, so row values land in [-1, 1] and amplitude scale is
/// removed. A zero-energy row cannot be normalized and is an error.
inline void featurize_slice(const float* iq, int slice_len, bool normalize, Autocorrelator& ac,
                            float* out) {
  require(ac.length() == slice_len, "featurize_slice: autocorrelator length mismatch");
  std::vector<float> chan(static_cast<std::size_t>(slice_len));
  std::vector<double> r(static_cast<std::size_t>(slice_len));
  for (int row = 0; row < kFeatureRows; ++row) {
    for (int t = 0; t < slice_len; ++t) chan[std::size_t(t)] = iq[2 * t + row];
    ac.transform(chan.data(), slice_len, r.data());
    if (normalize) {
      const double r0 = r[0];
      if (!(r0 > 0.0) || !std::isfinite(r0))
        fail("featurize_slice: zero-energy channel, cannot normalize");
      for (int k = 0; k < slice_len; ++k)
        out[row * slice_len + k] = float(r[std::size_t(k)] / r0);
    } else {
      for (int k = 0; k < slice_len; ++k) out[row * slice_len + k] = float(r[std::size_t(k)]);
    }
  }
}

/// A featurized slice collection. features is [n][kFeatureRows][slice_len];
/// device_ids / capture_ids / slice_in_capture are parallel per-slice arrays.
/// capture_ids index the manifest order the dataset was built from, so
/// slices can be grouped back into their source captures.
struct SliceDataset {
  int slice_len = 0;
  bool normalized = true;
  std::vector<float> features;
  std::vector<int> device_ids;
  std::vector<int> capture_ids;
  std::vector<int> slice_in_capture;

  std::size_t n() const { return device_ids.size(); }
  std::size_t feature_size() const { return std::size_t(kFeatureRows) * std::size_t(slice_len); }
  const float* feature(std::size_t i) const { return features.data() + i * feature_size(); }
};

/// Number of whole non-overlapping slices in a capture.
inline std::size_t slice_count(const Capture& cap, int slice_len) {
  return cap.n_samples() / std::size_t(slice_len);
}

/// Featurizes every whole slice of every manifest capture. Work is split
/// across captures; each worker uses its own Autocorrelator and writes only
/// its own output slots, so results do not depend on the thread count.
inline SliceDataset build_slice_dataset(const std::vector<ManifestEntry>& entries, int slice_len,
                                        bool normalize, ThreadPool* pool = nullptr) {
  require(!entries.empty(), "build_slice_dataset: empty manifest");
  require(slice_len >= 2, "build_slice_dataset: slice_len too small");

  std::vector<Capture> caps(entries.size());
  std::vector<std::size_t> first_slice(entries.size() + 1, 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    caps[i] = read_capture(entries[i].path);
    if (caps[i].device_id != entries[i].device_id)
      fail("build_slice_dataset: manifest device id disagrees with sidecar for " + entries[i].path);
    const std::size_t ns = slice_count(caps[i], slice_len);
    require(ns > 0, "build_slice_dataset: capture shorter than one slice: " + entries[i].path);
    first_slice[i + 1] = first_slice[i] + ns;
  }

  SliceDataset ds;
  ds.slice_len = slice_len;
  ds.normalized = normalize;
  const std::size_t total = first_slice.back();
  ds.features.resize(total * std::size_t(kFeatureRows) * std::size_t(slice_len));
  ds.device_ids.resize(total);
  ds.capture_ids.resize(total);
  ds.slice_in_capture.resize(total);

  auto do_capture = [&](std::size_t ci, Autocorrelator& ac) {
    const Capture& cap = caps[ci];
    const std::size_t ns = first_slice[ci + 1] - first_slice[ci];
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t gi = first_slice[ci] + s;
      featurize_slice(cap.samples.data() + s * std::size_t(slice_len) * 2, slice_len, normalize,
                      ac, ds.features.data() + gi * ds.feature_size());
      ds.device_ids[gi] = cap.device_id;
      ds.capture_ids[gi] = int(ci);
      ds.slice_in_capture[gi] = int(s);
    }
  };

  if (pool && pool->size() > 1) {
    pool->parallel_chunks(entries.size(), [&](std::size_t, std::size_t lo, std::size_t hi) {
      if (lo >= hi) return;
      Autocorrelator ac(slice_len);
      for (std::size_t ci = lo; ci < hi; ++ci) do_capture(ci, ac);
    });
  } else {
    Autocorrelator ac(slice_len);
    for (std::size_t ci = 0; ci < entries.size(); ++ci) do_capture(ci, ac);
  }
  return ds;
}

/// Feature cache on disk: text header, then a separator, then int32 label
/// blocks and the float32 feature block. Round-trips bitwise.
inline void save_slice_dataset(const std::string& path, const SliceDataset& ds) {
  require(ds.n() > 0, "save_slice_dataset: empty dataset");
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("save_slice_dataset: cannot open " + path);
  os << "HNF 1\n";
  os << "slice_len=" << ds.slice_len << "\n";
  os << "n_slices=" << ds.n() << "\n";
  os << "normalized=" << (ds.normalized ? 1 : 0) << "\n";
  os << "---BLOB---\n";
  std::vector<std::int32_t> tmp(ds.n());
  auto put_ints = [&](const std::vector<int>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) tmp[i] = std::int32_t(v[i]);
    write_i32_block(os, tmp.data(), tmp.size());
  };
  put_ints(ds.device_ids);
  put_ints(ds.capture_ids);
  put_ints(ds.slice_in_capture);
  write_f32_block(os, ds.features.data(), ds.features.size());
  if (!os) fail("save_slice_dataset: write failed: " + path);
}

inline SliceDataset load_slice_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("load_slice_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "HNF 1")
    fail("load_slice_dataset: bad magic in " + path);
  std::string header;
  while (std::getline(is, line)) {
    if (line == "---BLOB---") break;
    header += line + "\n";
  }
  std::istringstream hs(header);
  KvMap kv = parse_kv(hs);
  SliceDataset ds;
  ds.slice_len = int(kv.get_int("slice_len"));
  ds.normalized = kv.get_int("normalized") != 0;
  const std::size_t n = std::size_t(kv.get_int("n_slices"));
  require(ds.slice_len >= 2 && n > 0, "load_slice_dataset: bad header in " + path);
  std::vector<std::int32_t> tmp(n);
  auto get_ints = [&](std::vector<int>& v) {
    read_i32_block(is, tmp.data(), n);
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = int(tmp[i]);
  };
  get_ints(ds.device_ids);
  get_ints(ds.capture_ids);
  get_ints(ds.slice_in_capture);
  ds.features.resize(n * ds.feature_size());
  read_f32_block(is, ds.features.data(), ds.features.size());
  char extra;
  if (is.read(&extra, 1)) fail("load_slice_dataset: trailing bytes in " + path);
  return ds;
}

}  // namespace hinova
