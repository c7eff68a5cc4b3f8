// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hinova {

/// Error type thrown on every contract violation and I/O failure.
/// Messages are single-line and start with the failing stage or function.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

/// FNV-1a 64-bit over raw bytes. Used for config digests and profile digests;
/// stable across platforms, no dependency on std::hash.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Little-endian scalar I/O. All binary payloads in this project are
// little-endian float32 regardless of host order.
namespace detail {
inline bool host_is_le() {
  const std::uint16_t x = 1;
  unsigned char b;
  std::memcpy(&b, &x, 1);
  return b == 1;
}
}  // namespace detail

inline void store_f32_le(float v, unsigned char out[4]) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  out[0] = static_cast<unsigned char>(u);
  out[1] = static_cast<unsigned char>(u >> 8);
  out[2] = static_cast<unsigned char>(u >> 16);
  out[3] = static_cast<unsigned char>(u >> 24);
}

inline float load_f32_le(const unsigned char in[4]) {
  std::uint32_t u = std::uint32_t(in[0]) | (std::uint32_t(in[1]) << 8) |
                    (std::uint32_t(in[2]) << 16) | (std::uint32_t(in[3]) << 24);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

/// Bulk write of float32 values as little-endian bytes.
inline void write_f32_block(std::ostream& os, const float* data, std::size_t n) {
  if (detail::host_is_le()) {
    os.write(reinterpret_cast<const char*>(data), std::streamsize(n * 4));
  } else {
    std::vector<unsigned char> buf(n * 4);
    for (std::size_t i = 0; i < n; ++i) store_f32_le(data[i], &buf[i * 4]);
    os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  }
  if (!os) fail("write_f32_block: stream write failed");
}

inline void read_f32_block(std::istream& is, float* data, std::size_t n) {
  if (detail::host_is_le()) {
    is.read(reinterpret_cast<char*>(data), std::streamsize(n * 4));
  } else {
    std::vector<unsigned char> buf(n * 4);
    is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    for (std::size_t i = 0; i < n; ++i) data[i] = load_f32_le(&buf[i * 4]);
  }
  if (is.gcount() != std::streamsize(n * 4)) fail("read_f32_block: short read");
}

/// Same contract for float64 payloads (fingerprint files).
inline void write_f64_block(std::ostream& os, const double* data, std::size_t n) {
  if (detail::host_is_le()) {
    os.write(reinterpret_cast<const char*>(data), std::streamsize(n * 8));
  } else {
    std::vector<unsigned char> buf(n * 8);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t u;
      std::memcpy(&u, &data[i], 8);
      for (int b = 0; b < 8; ++b) buf[i * 8 + std::size_t(b)] = static_cast<unsigned char>(u >> (8 * b));
    }
    os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  }
  if (!os) fail("write_f64_block: stream write failed");
}

inline void read_f64_block(std::istream& is, double* data, std::size_t n) {
  if (detail::host_is_le()) {
    is.read(reinterpret_cast<char*>(data), std::streamsize(n * 8));
  } else {
    std::vector<unsigned char> buf(n * 8);
    is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t u = 0;
      for (int b = 0; b < 8; ++b) u |= std::uint64_t(buf[i * 8 + std::size_t(b)]) << (8 * b);
      std::memcpy(&data[i], &u, 8);
    }
  }
  if (is.gcount() != std::streamsize(n * 8)) fail("read_f64_block: short read");
}

/// int32 payloads (label blocks in feature caches).
inline void write_i32_block(std::ostream& os, const std::int32_t* data, std::size_t n) {
  if (detail::host_is_le()) {
    os.write(reinterpret_cast<const char*>(data), std::streamsize(n * 4));
  } else {
    std::vector<unsigned char> buf(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::uint32_t>(data[i]);
      buf[i * 4] = static_cast<unsigned char>(u);
      buf[i * 4 + 1] = static_cast<unsigned char>(u >> 8);
      buf[i * 4 + 2] = static_cast<unsigned char>(u >> 16);
      buf[i * 4 + 3] = static_cast<unsigned char>(u >> 24);
    }
    os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  }
  if (!os) fail("write_i32_block: stream write failed");
}

inline void read_i32_block(std::istream& is, std::int32_t* data, std::size_t n) {
  if (detail::host_is_le()) {
    is.read(reinterpret_cast<char*>(data), std::streamsize(n * 4));
  } else {
    std::vector<unsigned char> buf(n * 4);
    is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = std::uint32_t(buf[i * 4]) | (std::uint32_t(buf[i * 4 + 1]) << 8) |
                        (std::uint32_t(buf[i * 4 + 2]) << 16) | (std::uint32_t(buf[i * 4 + 3]) << 24);
      std::int32_t v;
      std::memcpy(&v, &u, 4);
      data[i] = v;
    }
  }
  if (is.gcount() != std::streamsize(n * 4)) fail("read_i32_block: short read");
}

/// Minimal key=value text block parser used by the sidecar/header formats.
/// Lines are "key=value"; blank lines and lines starting with '#' are skipped.
struct KvMap {
  std::vector<std::pair<std::string, std::string>> items;

  const std::string* find(const std::string& key) const {
    for (const auto& kv : items)
      if (kv.first == key) return &kv.second;
    return nullptr;
  }
  std::string get(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) fail("missing key '" + key + "'");
    return *v;
  }
  long long get_int(const std::string& key) const {
    const std::string s = get(key);
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      fail("key '" + key + "' is not an integer: " + s);
    }
    if (pos != s.size()) fail("key '" + key + "' is not an integer: " + s);
    return v;
  }
  double get_double(const std::string& key) const {
    const std::string s = get(key);
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      fail("key '" + key + "' is not a number: " + s);
    }
    if (pos != s.size()) fail("key '" + key + "' is not a number: " + s);
    return v;
  }
};

inline KvMap parse_kv(std::istream& is) {
  KvMap m;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("malformed key=value line: " + line);
    m.items.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return m;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("cannot open " + path + " for writing");
  os << content;
  if (!os) fail("write failed: " + path);
}

/// Formats a double with enough digits to round-trip (used in text headers).
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace hinova
