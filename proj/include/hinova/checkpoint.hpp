// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/nn/model.hpp"

namespace hinova {

/// Trained-model metadata stored alongside the weights. classes maps the
/// network's class index to the original device id; the feature flag records
/// whether the model expects energy-normalized inputs.
struct CheckpointInfo {
  nn::ModelSpec spec;
  std::vector<int> classes;
  bool features_normalized = true;
  int epochs_trained = 0;
  std::vector<double> train_loss;  // per epoch
  std::vector<double> train_acc;   // per epoch
};

namespace detail {

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt_double(v[i]);
  }
  return s;
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  if (s.empty()) return out;
  for (const std::string& part : split(s, ',')) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(part, &pos);
    } catch (const std::exception&) {
      fail("checkpoint: bad integer list entry '" + part + "'");
    }
    if (pos != part.size()) fail("checkpoint: bad integer list entry '" + part + "'");
    out.push_back(v);
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const std::string& part : split(s, ',')) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(part, &pos);
    } catch (const std::exception&) {
      fail("checkpoint: bad number list entry '" + part + "'");
    }
    if (pos != part.size()) fail("checkpoint: bad number list entry '" + part + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Model file layout: a "HNV 1" magic line, key=value header lines, one
/// ordered shape.<tensor>=count line per tensor (parameters first, then the
/// batch-norm running statistics and the input standardizer), a
/// "---BLOB---" separator, then every tensor as little-endian float32 in
/// exactly the listed order. Weights round-trip bitwise.
inline void save_checkpoint(const std::string& path, nn::Model<float>& model,
                            const CheckpointInfo& info) {
  const nn::ModelSpec& s = model.spec();
  require(int(info.classes.size()) == s.n_classes,
          "save_checkpoint: classes list does not match n_classes");
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("save_checkpoint: cannot open " + path);
  os << "HNV 1\n";
  os << "arch=" << nn::arch_name(s.arch) << "\n";
  os << "in_h=" << s.in_h << "\nin_w=" << s.in_w << "\n";
  os << "ch1=" << s.ch1 << "\nch2=" << s.ch2 << "\nch3=" << s.ch3 << "\nch4=" << s.ch4 << "\n";
  os << "kh=" << s.kh << "\nkw=" << s.kw << "\n";
  os << "dropout_p=" << fmt_double(s.dropout_p) << "\n";
  os << "lstm_hidden=" << s.lstm_hidden << "\n";
  os << "n_classes=" << s.n_classes << "\n";
  os << "bn_momentum=" << fmt_double(s.bn_momentum) << "\n";
  os << "bn_eps=" << fmt_double(s.bn_eps) << "\n";
  os << "init_seed=" << s.init_seed << "\n";
  os << "classes=" << detail::join_ints(info.classes) << "\n";
  os << "features_normalized=" << (info.features_normalized ? 1 : 0) << "\n";
  os << "epochs_trained=" << info.epochs_trained << "\n";
  os << "train_loss=" << detail::join_doubles(info.train_loss) << "\n";
  os << "train_acc=" << detail::join_doubles(info.train_acc) << "\n";
  for (int i = 0; i < 4; ++i)
    os << "batches.bn" << (i + 1) << "=" << model.bn_batches(i) << "\n";
  model.visit_params([&](const std::string& name, float*, float*, std::size_t c) {
    os << "shape." << name << "=" << c << "\n";
  });
  model.visit_buffers([&](const std::string& name, float*, std::size_t c) {
    os << "shape." << name << "=" << c << "\n";
  });
  os << "---BLOB---\n";
  model.visit_params([&](const std::string&, float* p, float*, std::size_t c) {
    write_f32_block(os, p, c);
  });
  model.visit_buffers([&](const std::string&, float* p, std::size_t c) {
    write_f32_block(os, p, c);
  });
  if (!os) fail("save_checkpoint: write failed: " + path);
}

/// Reads only the header (cheap; stops at the blob separator).
inline CheckpointInfo read_checkpoint_info(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("read_checkpoint_info: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "HNV 1")
    fail("read_checkpoint_info: unsupported model file version in " + path);
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
  if (!sep) fail("read_checkpoint_info: missing blob separator in " + path);
  std::istringstream hs(header);
  KvMap kv = parse_kv(hs);
  CheckpointInfo info;
  nn::ModelSpec& s = info.spec;
  s.arch = nn::arch_from_name(kv.get("arch"));
  s.in_h = int(kv.get_int("in_h"));
  s.in_w = int(kv.get_int("in_w"));
  s.ch1 = int(kv.get_int("ch1"));
  s.ch2 = int(kv.get_int("ch2"));
  s.ch3 = int(kv.get_int("ch3"));
  s.ch4 = int(kv.get_int("ch4"));
  s.kh = int(kv.get_int("kh"));
  s.kw = int(kv.get_int("kw"));
  s.dropout_p = kv.get_double("dropout_p");
  s.lstm_hidden = int(kv.get_int("lstm_hidden"));
  s.n_classes = int(kv.get_int("n_classes"));
  s.bn_momentum = kv.get_double("bn_momentum");
  s.bn_eps = kv.get_double("bn_eps");
  s.init_seed = std::uint64_t(kv.get_int("init_seed"));
  s.validate();
  info.classes = detail::parse_int_list(kv.get("classes"));
  require(int(info.classes.size()) == s.n_classes,
          "read_checkpoint_info: classes list does not match n_classes");
  info.features_normalized = kv.get_int("features_normalized") != 0;
  info.epochs_trained = int(kv.get_int("epochs_trained"));
  info.train_loss = detail::parse_double_list(kv.get("train_loss"));
  info.train_acc = detail::parse_double_list(kv.get("train_acc"));
  return info;
}

/// Loads weights into a model constructed from the file's own spec. Every
/// tensor's name and element count must match the listed shapes; the blob
/// must contain exactly the listed payload.
inline void load_checkpoint_params(const std::string& path, nn::Model<float>& model) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("load_checkpoint_params: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "HNV 1")
    fail("load_checkpoint_params: unsupported model file version in " + path);
  std::vector<std::pair<std::string, std::size_t>> shapes;
  KvMap kv;
  bool sep = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "---BLOB---") {
      sep = true;
      break;
    }
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("load_checkpoint_params: malformed header line: " + line);
    const std::string key = line.substr(0, eq);
    if (key.rfind("shape.", 0) == 0) {
      std::size_t pos = 0;
      unsigned long long c = 0;
      const std::string v = line.substr(eq + 1);
      try {
        c = std::stoull(v, &pos);
      } catch (const std::exception&) {
        fail("load_checkpoint_params: bad shape count: " + line);
      }
      if (pos != v.size()) fail("load_checkpoint_params: bad shape count: " + line);
      shapes.emplace_back(key.substr(6), std::size_t(c));
    } else {
      kv.items.emplace_back(key, line.substr(eq + 1));
    }
  }
  if (!sep) fail("load_checkpoint_params: missing blob separator in " + path);

  std::size_t idx = 0;
  auto take = [&](const std::string& name, float* p, std::size_t c) {
    if (idx >= shapes.size())
      fail("load_checkpoint_params: model has tensor '" + name + "' missing from " + path);
    if (shapes[idx].first != name)
      fail("load_checkpoint_params: tensor order mismatch: expected '" + name + "', file has '" +
           shapes[idx].first + "'");
    if (shapes[idx].second != c)
      fail("load_checkpoint_params: tensor '" + name + "' has " + std::to_string(shapes[idx].second) +
           " values in file, model needs " + std::to_string(c));
    ++idx;
    read_f32_block(is, p, c);
  };
  model.visit_params([&](const std::string& name, float* p, float*, std::size_t c) {
    take(name, p, c);
  });
  model.visit_buffers([&](const std::string& name, float* p, std::size_t c) { take(name, p, c); });
  if (idx != shapes.size())
    fail("load_checkpoint_params: file lists extra tensor '" + shapes[idx].first + "'");
  char extra;
  if (is.read(&extra, 1)) fail("load_checkpoint_params: trailing bytes in " + path);
  for (int i = 0; i < 4; ++i) {
    const std::string key = "batches.bn" + std::to_string(i + 1);
    if (kv.find(key)) model.set_bn_batches(i, kv.get_int(key));
  }
}

}  // namespace hinova
