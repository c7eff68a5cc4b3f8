// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hinova/common.hpp"

namespace hinova {

/// A complex baseband capture. samples holds interleaved I,Q pairs
/// (sample k: samples[2k] = I, samples[2k+1] = Q).
struct Capture {
  int device_id = -1;
  double sample_rate_hz = 0.0;
  std::vector<float> samples;  // 2 * n_samples floats

  std::size_t n_samples() const { return samples.size() / 2; }
};

/// Extra provenance carried in the text sidecar.
struct CaptureMeta {
  std::string source = "unknown";
  std::uint64_t generator_seed = 0;
  std::string impairment_digest;
};

namespace detail {
inline std::string meta_path_for(const std::string& iq_path) {
  return iq_path + ".meta";
}
}  // namespace detail

/// Writes <path> (interleaved little-endian float32 I,Q) and <path>.meta
/// (key=value text). The meta records device id, rate and sample count so a
/// reader can validate payload length.
inline void write_capture(const std::string& path, const Capture& cap, const CaptureMeta& meta) {
  require(!cap.samples.empty(), "write_capture: empty capture");
  require(cap.samples.size() % 2 == 0, "write_capture: odd float count");
  require(cap.sample_rate_hz > 0.0, "write_capture: sample rate must be positive");
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail("write_capture: cannot open " + path);
    write_f32_block(os, cap.samples.data(), cap.samples.size());
  }
  std::string m;
  m += "device_id=" + std::to_string(cap.device_id) + "\n";
  m += "sample_rate_hz=" + fmt_double(cap.sample_rate_hz) + "\n";
  m += "n_samples=" + std::to_string(cap.n_samples()) + "\n";
  m += "source=" + meta.source + "\n";
  m += "generator_seed=" + std::to_string(meta.generator_seed) + "\n";
  if (!meta.impairment_digest.empty()) m += "impairment_digest=" + meta.impairment_digest + "\n";
  write_text_file(detail::meta_path_for(path), m);
}

/// Reads a capture written by write_capture. Fails on a missing sidecar, a
/// malformed sidecar, or a payload whose byte length disagrees with the
/// sidecar's n_samples.
inline Capture read_capture(const std::string& path, CaptureMeta* meta_out = nullptr) {
  std::ifstream ms(detail::meta_path_for(path));
  if (!ms) fail("read_capture: missing sidecar " + detail::meta_path_for(path));
  KvMap kv = parse_kv(ms);
  Capture cap;
  cap.device_id = int(kv.get_int("device_id"));
  cap.sample_rate_hz = kv.get_double("sample_rate_hz");
  const long long n = kv.get_int("n_samples");
  require(n > 0, "read_capture: non-positive n_samples in sidecar");
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("read_capture: cannot open " + path);
  is.seekg(0, std::ios::end);
  const auto bytes = is.tellg();
  if (bytes != std::streampos(n * 8))
    fail("read_capture: payload length " + std::to_string(long(bytes)) + " does not match sidecar (" +
         std::to_string(n * 8) + " bytes expected) for " + path);
  is.seekg(0);
  cap.samples.resize(std::size_t(n) * 2);
  read_f32_block(is, cap.samples.data(), cap.samples.size());
  if (meta_out) {
    meta_out->source = kv.find("source") ? kv.get("source") : "unknown";
    meta_out->generator_seed = kv.find("generator_seed") ? std::uint64_t(kv.get_int("generator_seed")) : 0;
    meta_out->impairment_digest = kv.find("impairment_digest") ? kv.get("impairment_digest") : "";
  }
  return cap;
}

/// Dataset manifest: one "device_id path" row per capture, paths relative to
/// the manifest's directory.
struct ManifestEntry {
  int device_id = -1;
  std::string path;  // absolute, resolved at read time
};

inline void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries,
                           const std::string& base_dir) {
  std::string out;
  for (const auto& e : entries) {
    std::filesystem::path p(e.path);
    std::string rel = std::filesystem::relative(p, base_dir).string();
    out += std::to_string(e.device_id) + " " + rel + "\n";
  }
  write_text_file(path, out);
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("read_manifest: cannot open " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos)
      fail("read_manifest: malformed line " + std::to_string(lineno) + " in " + path);
    ManifestEntry e;
    try {
      e.device_id = std::stoi(line.substr(0, sp));
    } catch (const std::exception&) {
      fail("read_manifest: bad device id on line " + std::to_string(lineno) + " in " + path);
    }
    e.path = (base / line.substr(sp + 1)).string();
    out.push_back(e);
  }
  require(!out.empty(), "read_manifest: no entries in " + path);
  return out;
}

}  // namespace hinova
