// SPDX-License-Identifier: Apache-2.0
//
// Single entry point for the pipeline: synth -> slice -> train ->
// fingerprint -> detect / baseline -> evaluate, plus an oracle selftest.
//
// Option precedence: command-line flag > config file (--config, flat
// key=value with [section] headers; keys are section-scoped) > built-in
// default. Environment overrides exist for paths only: HINOVA_DATA and
// HINOVA_OUT fill in --data/--out when neither flag nor config supplies
// them. All randomness flows from named seeds; --threads changes wall time,
// never numbers.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hinova/hinova.hpp"

namespace {

using hinova::fail;

/// Flat config file: key=value lines, optional [section] headers scoping
/// subsequent keys to "section.key". '#' starts a comment line.
hinova::KvMap parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open config file " + path);
  hinova::KvMap kv;
  std::string line, section;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("malformed config line: " + line);
    const std::string key = section.empty() ? line.substr(0, eq) : section + "." + line.substr(0, eq);
    kv.items.emplace_back(key, line.substr(eq + 1));
  }
  return kv;
}

/// Applies config-file values to options the command line left untouched.
struct ConfigLayer {
  hinova::KvMap kv;
  CLI::App* cmd = nullptr;
  std::string section;

  template <typename T>
  void fill(const std::string& flag, const std::string& key, T& var) const {
    if (cmd->count("--" + flag) > 0) return;
    const std::string* v = kv.find(section + "." + key);
    if (!v) return;
    std::istringstream ss(*v);
    ss >> var;
    if (ss.fail()) fail("config key " + section + "." + key + " has bad value '" + *v + "'");
  }
  void fill_str(const std::string& flag, const std::string& key, std::string& var) const {
    if (cmd->count("--" + flag) > 0) return;
    if (const std::string* v = kv.find(section + "." + key)) var = *v;
  }
};

void env_path_default(std::string& var, const char* env) {
  if (!var.empty()) return;
  if (const char* v = std::getenv(env)) var = v;
}

std::unique_ptr<hinova::ThreadPool> make_pool(int threads) {
  if (threads <= 1) return nullptr;
  return std::make_unique<hinova::ThreadPool>(threads);
}

/// Sorted unique device ids of a dataset; doubles as the class list.
std::vector<int> device_list(const hinova::SliceDataset& ds) {
  std::vector<int> ids(ds.device_ids.begin(), ds.device_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

/// Labels = index of each slice's device in the class list.
std::vector<int> labels_for(const hinova::SliceDataset& ds, const std::vector<int>& classes) {
  std::vector<int> labels(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), ds.device_ids[i]);
    if (it == classes.end() || *it != ds.device_ids[i])
      fail("device " + std::to_string(ds.device_ids[i]) + " is not in the model's class list");
    labels[i] = int(it - classes.begin());
  }
  return labels;
}

std::unique_ptr<hinova::nn::Model<float>> load_model(const std::string& path,
                                                     hinova::CheckpointInfo& info,
                                                     hinova::ThreadPool* pool) {
  info = hinova::read_checkpoint_info(path);
  auto model = std::make_unique<hinova::nn::Model<float>>(info.spec, 32, pool);
  hinova::load_checkpoint_params(path, *model);
  return model;
}

// ---------------------------------------------------------------- synth --

struct SynthArgs {
  std::string out, config;
  hinova::SynthConfig cfg;
};

int run_synth(const SynthArgs& a) {
  hinova::SynthConfig cfg = a.cfg;
  const auto entries = hinova::synthesize_dataset(cfg, a.out);
  std::printf("synth: wrote %zu captures for %d devices under %s\n", entries.size(),
              cfg.n_devices, a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------- slice --

struct SliceArgs {
  std::string manifest, out;
  int slice_len = 2048;
  int normalize = 1;
  int threads = 1;
};

int run_slice(const SliceArgs& a) {
  const auto entries = hinova::read_manifest(a.manifest);
  auto pool = make_pool(a.threads);
  const hinova::SliceDataset ds =
      hinova::build_slice_dataset(entries, a.slice_len, a.normalize != 0, pool.get());
  hinova::save_slice_dataset(a.out, ds);
  std::printf("slice: %zu slices of %d lags (%zu devices) -> %s\n", ds.n(), a.slice_len,
              device_list(ds).size(), a.out.c_str());
  return 0;
}

// ---------------------------------------------------------------- train --

struct TrainArgs {
  std::string data, out, arch = "cnn_lstm";
  hinova::nn::ModelSpec spec;
  hinova::nn::TrainConfig cfg;
  int threads = 1;
  bool verbose = false;
};

int run_train(const TrainArgs& a) {
  const hinova::SliceDataset ds = hinova::load_slice_dataset(a.data);
  const std::vector<int> classes = device_list(ds);
  hinova::require(classes.size() >= 2, "need at least two devices");
  const std::vector<int> labels = labels_for(ds, classes);

  hinova::nn::ModelSpec spec = a.spec;
  spec.arch = a.arch == "cnn_only" ? hinova::nn::Arch::cnn_only : hinova::nn::Arch::cnn_lstm;
  if (a.arch != "cnn_lstm" && a.arch != "cnn_only") fail("unknown arch '" + a.arch + "'");
  spec.in_h = 2;
  spec.in_w = ds.slice_len;
  spec.n_classes = int(classes.size());
  spec.validate();

  auto pool = make_pool(a.threads);
  hinova::nn::Model<float> model(spec, std::min<int>(a.cfg.batch, int(ds.n())), pool.get());
  model.init_params();
  hinova::nn::TrainConfig cfg = a.cfg;
  cfg.verbose = a.verbose;
  const auto stats = hinova::nn::train_model(model, ds.features.data(), labels.data(),
                                             int(ds.n()), cfg);

  hinova::CheckpointInfo info;
  info.spec = spec;
  info.classes = classes;
  info.features_normalized = ds.normalized;
  info.epochs_trained = int(stats.size());
  for (const auto& s : stats) {
    info.train_loss.push_back(s.loss);
    info.train_acc.push_back(s.accuracy);
  }
  hinova::save_checkpoint(a.out, model, info);
  std::printf("train: %d epochs on %zu slices, final loss %.4f acc %.4f -> %s\n",
              info.epochs_trained, ds.n(), info.train_loss.back(), info.train_acc.back(),
              a.out.c_str());
  return 0;
}

// ----------------------------------------------------------- fingerprint --

struct FingerprintArgs {
  std::string model, data, out, mode = "final";
  int bins = 25;
  int normalize = 1;
  int allow_empty = 0;
  int threads = 1;
};

int run_fingerprint(const FingerprintArgs& a) {
  auto pool = make_pool(a.threads);
  hinova::CheckpointInfo info;
  auto model = load_model(a.model, info, pool.get());
  const hinova::SliceDataset ds = hinova::load_slice_dataset(a.data);
  if (ds.normalized != info.features_normalized)
    fail("dataset normalization does not match the model's training data");
  hinova::require(ds.slice_len == info.spec.in_w,
                  "dataset slice length does not match the model");
  const std::vector<int> labels = labels_for(ds, info.classes);
  const hinova::FpMode mode = hinova::fp_mode_from_name(a.mode);

  std::vector<hinova::Fingerprint> fps;
  if (mode == hinova::FpMode::all_steps) {
    fps = hinova::collect_fingerprints_all_steps(*model, ds.features.data(), labels.data(),
                                                 int(ds.n()), int(info.classes.size()), a.bins,
                                                 a.normalize != 0, a.allow_empty != 0);
  } else {
    const hinova::HiddenBank bank =
        hinova::collect_hidden(*model, ds.features.data(), labels.data(), int(ds.n()),
                               int(info.classes.size()), mode == hinova::FpMode::pairwise,
                               a.allow_empty != 0);
    fps = mode == hinova::FpMode::pairwise
              ? hinova::build_pairwise_fingerprints(bank, a.bins, a.normalize != 0)
              : hinova::build_fingerprints(bank, a.bins, a.normalize != 0);
  }

  std::filesystem::create_directories(a.out);
  std::ofstream index(std::filesystem::path(a.out) / "fingerprints.txt", std::ios::binary);
  if (!index) fail("cannot open index in " + a.out);
  for (std::size_t c = 0; c < fps.size(); ++c) {
    fps[c].owner_id = info.classes[c];
    const std::string name = "dev" + std::to_string(info.classes[c]) + ".hfp";
    hinova::save_fingerprint((std::filesystem::path(a.out) / name).string(), fps[c]);
    index << info.classes[c] << " " << name << "\n";
  }
  std::printf("fingerprint: %zu device fingerprints (mode %s, %d bins) -> %s\n", fps.size(),
              a.mode.c_str(), a.bins, a.out.c_str());
  return 0;
}

std::vector<hinova::Fingerprint> load_fingerprint_dir(const std::string& dir) {
  const std::string index_path = (std::filesystem::path(dir) / "fingerprints.txt").string();
  std::ifstream is(index_path);
  if (!is) fail("cannot open fingerprint index " + index_path);
  std::vector<hinova::Fingerprint> fps;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) fail("malformed fingerprint index line: " + line);
    fps.push_back(
        hinova::load_fingerprint((std::filesystem::path(dir) / line.substr(sp + 1)).string()));
  }
  hinova::require(!fps.empty(), "fingerprint index " + index_path + " lists no fingerprints");
  return fps;
}

// --------------------------------------------------------------- detect --

struct DetectArgs {
  std::string model, data, enrolled, out;
  double threshold = 1.0;
  int window = 0;
  int threads = 1;
};

int run_detect(const DetectArgs& a) {
  auto pool = make_pool(a.threads);
  hinova::CheckpointInfo info;
  auto model = load_model(a.model, info, pool.get());
  const hinova::SliceDataset ds = hinova::load_slice_dataset(a.data);
  hinova::require(ds.slice_len == info.spec.in_w,
                  "dataset slice length does not match the model");
  const std::vector<hinova::Fingerprint> enrolled = load_fingerprint_dir(a.enrolled);
  const std::vector<hinova::SliceGroup> groups =
      a.window > 0 ? hinova::group_by_window(ds, a.window) : hinova::group_by_device(ds);
  const std::vector<hinova::DetectRow> rows =
      hinova::detect(*model, ds, groups, enrolled, a.threshold);
  hinova::write_detect_csv(a.out, rows, a.threshold);
  int flagged = 0;
  for (const auto& r : rows) flagged += r.flagged;
  std::printf("detect: %zu groups scored, %d flagged above %.3f -> %s\n", rows.size(), flagged,
              a.threshold, a.out.c_str());
  return 0;
}

// -------------------------------------------------------------- baseline --

struct BaselineArgs {
  std::string model, data, test, out, method = "maxlogit";
  int tail = 20;
  double alpha = 3.0;
  int threads = 1;
};

int run_baseline(const BaselineArgs& a) {
  auto pool = make_pool(a.threads);
  hinova::CheckpointInfo info;
  auto model = load_model(a.model, info, pool.get());
  const hinova::SliceDataset test = hinova::load_slice_dataset(a.test);
  hinova::require(test.slice_len == info.spec.in_w,
                  "dataset slice length does not match the model");
  const int k = info.spec.n_classes;

  hinova::OpenMaxModel om;
  if (a.method == "openmax") {
    hinova::require(!a.data.empty(), "openmax needs --data (training slices) to fit on");
    const hinova::SliceDataset fit = hinova::load_slice_dataset(a.data);
    const std::vector<int> labels = labels_for(fit, info.classes);
    const auto acts = hinova::collect_logits(*model, fit.features.data(), labels.data(),
                                             int(fit.n()), k, /*allow_empty=*/true);
    om = hinova::fit_openmax(acts, k, a.tail, a.alpha);
  } else if (a.method != "maxlogit") {
    fail("unknown method '" + a.method + "'");
  }

  std::ofstream os(a.out, std::ios::binary);
  if (!os) fail("cannot open " + a.out);
  os << "slice,device,score\n";
  const std::size_t item = test.feature_size();
  const int bmax = model->max_batch();
  std::vector<double> scores;
  for (int start = 0; start < int(test.n()); start += bmax) {
    const int b = std::min<int>(bmax, int(test.n()) - start);
    model->forward(test.features.data() + std::size_t(start) * item, b, false);
    const float* logits = model->logits();
    for (int i = 0; i < b; ++i) {
      const float* row = logits + std::size_t(i) * k;
      const double s = a.method == "openmax" ? hinova::openmax_novelty(om, row)
                                             : hinova::maxlogit_score(row, k);
      os << (start + i) << "," << test.device_ids[std::size_t(start + i)] << ","
         << hinova::fmt_double(s) << "\n";
      scores.push_back(s);
    }
  }
  if (!os) fail("write failed: " + a.out);
  std::printf("baseline: %s scores for %zu slices -> %s\n", a.method.c_str(), scores.size(),
              a.out.c_str());
  return 0;
}

// -------------------------------------------------------------- evaluate --

struct EvaluateArgs {
  std::string data, out;
  std::string methods = "all";
  std::string experiments = "1,2,3";
  hinova::EvalConfig cfg;
  int threads = 1;
  bool verbose = false;
};

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  return out;
}

int run_evaluate(const EvaluateArgs& a) {
  const hinova::SliceDataset ds = hinova::load_slice_dataset(a.data);
  hinova::EvalConfig cfg = a.cfg;
  if (a.methods != "all") {
    cfg.methods.clear();
    std::istringstream ss(a.methods);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      cfg.methods.push_back(tok);
    }
  }
  cfg.experiments = parse_int_list(a.experiments);
  hinova::require(!cfg.experiments.empty(), "no experiments requested");
  auto pool = make_pool(a.threads);
  cfg.pool = pool.get();

  std::filesystem::create_directories(a.out);
  std::vector<hinova::ExperimentReport> reports;
  for (int e : cfg.experiments) {
    reports.push_back(hinova::run_experiment(ds, cfg, e, a.verbose));
    for (const std::string& m : cfg.methods)
      std::printf("evaluate: experiment %d %-17s mean auprc group %.4f slice %.4f\n", e,
                  m.c_str(), reports.back().mean_auprc_group(m),
                  reports.back().mean_auprc_slice(m));
  }
  hinova::write_reports(a.out, reports);
  std::printf("evaluate: config digest %s, reports -> %s\n",
              reports.front().config_digest.c_str(), a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-set RF device authentication pipeline"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "flat key=value config file with [section] headers")
      ->expected(1);

  SynthArgs sy;
  CLI::App* synth = app.add_subcommand("synth", "generate synthetic IQ captures");
  synth->add_option("--out", sy.out, "output directory for captures + manifest");
  synth->add_option("--devices", sy.cfg.n_devices, "number of simulated devices");
  synth->add_option("--captures", sy.cfg.captures_per_device, "captures per device");
  synth->add_option("--seconds", sy.cfg.capture_seconds, "capture length in seconds");
  synth->add_option("--rate", sy.cfg.sample_rate_hz, "sample rate in Hz");
  synth->add_option("--snr", sy.cfg.snr_db, "additive noise SNR in dB (inf disables)");
  synth->add_option("--separability", sy.cfg.separability,
                    "impairment spread scale; 0 makes devices identical");
  synth->add_option("--seed", sy.cfg.master_seed, "master seed");

  SliceArgs sl;
  CLI::App* slice = app.add_subcommand("slice", "extract autocorrelation slices from captures");
  slice->add_option("--manifest", sl.manifest, "capture manifest file");
  slice->add_option("--out", sl.out, "output slice dataset (.hnf)");
  slice->add_option("--slice-len", sl.slice_len, "samples (and lags) per slice");
  slice->add_option("--normalize", sl.normalize, "divide autocorrelation by lag 0 (0/1)");
  slice->add_option("--threads", sl.threads, "worker threads (numerics unaffected)");

  TrainArgs tr;
  CLI::App* train = app.add_subcommand("train", "train the classifier on a slice dataset");
  train->add_option("--data", tr.data, "slice dataset (.hnf)");
  train->add_option("--out", tr.out, "output model file (.hnv)");
  train->add_option("--arch", tr.arch, "cnn_lstm or cnn_only");
  train->add_option("--epochs", tr.cfg.epochs, "training epochs");
  train->add_option("--batch", tr.cfg.batch, "batch size");
  train->add_option("--lr", tr.cfg.adam.lr, "learning rate");
  train->add_option("--seed", tr.cfg.seed, "shuffle/dropout seed");
  train->add_option("--init-seed", tr.spec.init_seed, "parameter init seed");
  train->add_option("--dropout", tr.spec.dropout_p, "dropout probability");
  train->add_option("--hidden", tr.spec.lstm_hidden, "recurrent state width");
  train->add_option("--ch1", tr.spec.ch1, "stage 1 channels");
  train->add_option("--ch2", tr.spec.ch2, "stage 2 channels");
  train->add_option("--ch3", tr.spec.ch3, "stage 3 channels");
  train->add_option("--ch4", tr.spec.ch4, "stage 4 channels");
  train->add_option("--kw", tr.spec.kw, "convolution kernel width");
  train->add_option("--threads", tr.threads, "worker threads (numerics unaffected)");
  train->add_flag("--verbose", tr.verbose, "per-epoch progress");

  FingerprintArgs fp;
  CLI::App* fing = app.add_subcommand("fingerprint", "build per-device histogram fingerprints");
  fing->add_option("--model", fp.model, "trained model (.hnv)");
  fing->add_option("--data", fp.data, "slice dataset (.hnf) the devices are enrolled from");
  fing->add_option("--out", fp.out, "output directory (one .hfp per device + index)");
  fing->add_option("--bins", fp.bins, "histogram bins over [-1,1]");
  fing->add_option("--mode", fp.mode, "final, pairwise, or all-steps");
  fing->add_option("--normalize", fp.normalize, "store frequencies instead of counts (0/1)");
  fing->add_option("--allow-empty", fp.allow_empty,
                   "tolerate devices with zero correct slices (0/1)");
  fing->add_option("--threads", fp.threads, "worker threads (numerics unaffected)");

  DetectArgs de;
  CLI::App* detect = app.add_subcommand("detect", "score test groups against enrolled devices");
  detect->add_option("--model", de.model, "trained model (.hnv)");
  detect->add_option("--data", de.data, "slice dataset (.hnf) to score");
  detect->add_option("--enrolled", de.enrolled, "fingerprint directory from `fingerprint`");
  detect->add_option("--threshold", de.threshold, "novelty flag threshold in [0,2]");
  detect->add_option("--window", de.window, "group windows of N slices (0: one group/device)");
  detect->add_option("--out", de.out, "output CSV");
  detect->add_option("--threads", de.threads, "worker threads (numerics unaffected)");

  BaselineArgs ba;
  CLI::App* baseline = app.add_subcommand("baseline", "per-slice baseline novelty scores");
  baseline->add_option("--model", ba.model, "trained model (.hnv)");
  baseline->add_option("--data", ba.data, "training slices (openmax fit)");
  baseline->add_option("--test", ba.test, "slices to score (.hnf)");
  baseline->add_option("--method", ba.method, "maxlogit or openmax");
  baseline->add_option("--tail", ba.tail, "openmax weibull tail size");
  baseline->add_option("--alpha", ba.alpha, "openmax revised class count");
  baseline->add_option("--out", ba.out, "output CSV");
  baseline->add_option("--threads", ba.threads, "worker threads (numerics unaffected)");

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "open-set cross-validation harness");
  evaluate->add_option("--data", ev.data, "slice dataset (.hnf)");
  evaluate->add_option("--out", ev.out, "report directory");
  evaluate->add_option("--methods", ev.methods, "comma list or 'all'");
  evaluate->add_option("--experiments", ev.experiments, "comma list of experiment indices");
  evaluate->add_option("--known", ev.cfg.n_known, "known devices per experiment");
  evaluate->add_option("--unknown", ev.cfg.n_unknown, "unknown devices per experiment");
  evaluate->add_option("--folds", ev.cfg.k_folds, "cross-validation folds");
  evaluate->add_option("--bins", ev.cfg.bins, "histogram bins");
  evaluate->add_option("--window", ev.cfg.window, "test group window (0: per device)");
  evaluate->add_option("--split-seed", ev.cfg.split_seed, "device split seed");
  evaluate->add_option("--epochs", ev.cfg.train.epochs, "training epochs per fold");
  evaluate->add_option("--batch", ev.cfg.train.batch, "batch size");
  evaluate->add_option("--lr", ev.cfg.train.adam.lr, "learning rate");
  evaluate->add_option("--train-seed", ev.cfg.train.seed, "shuffle/dropout seed");
  evaluate->add_option("--init-seed", ev.cfg.spec.init_seed, "parameter init seed");
  evaluate->add_option("--dropout", ev.cfg.spec.dropout_p, "dropout probability");
  evaluate->add_option("--hidden", ev.cfg.spec.lstm_hidden, "recurrent state width");
  evaluate->add_option("--ch1", ev.cfg.spec.ch1, "stage 1 channels");
  evaluate->add_option("--ch2", ev.cfg.spec.ch2, "stage 2 channels");
  evaluate->add_option("--ch3", ev.cfg.spec.ch3, "stage 3 channels");
  evaluate->add_option("--ch4", ev.cfg.spec.ch4, "stage 4 channels");
  evaluate->add_option("--kw", ev.cfg.spec.kw, "convolution kernel width");
  evaluate->add_option("--tail", ev.cfg.openmax_tail, "openmax weibull tail size");
  evaluate->add_option("--alpha", ev.cfg.openmax_alpha, "openmax revised class count");
  evaluate->add_option("--threads", ev.threads, "worker threads (numerics unaffected)");
  evaluate->add_flag("--verbose", ev.verbose, "per-fold progress");

  CLI::App* selftest = app.add_subcommand("selftest", "run the built-in oracle suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "hinova: usage: %s\n", e.what());
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    hinova::KvMap kv;
    if (!config_path.empty()) kv = parse_config_file(config_path);

    if (cmd == "synth") {
      ConfigLayer c{kv, synth, "synth"};
      c.fill_str("out", "out", sy.out);
      c.fill("devices", "devices", sy.cfg.n_devices);
      c.fill("captures", "captures", sy.cfg.captures_per_device);
      c.fill("seconds", "seconds", sy.cfg.capture_seconds);
      c.fill("rate", "rate", sy.cfg.sample_rate_hz);
      c.fill("snr", "snr", sy.cfg.snr_db);
      c.fill("separability", "separability", sy.cfg.separability);
      c.fill("seed", "seed", sy.cfg.master_seed);
      env_path_default(sy.out, "HINOVA_OUT");
      hinova::require(!sy.out.empty(), "--out is required");
      return run_synth(sy);
    }
    if (cmd == "slice") {
      ConfigLayer c{kv, slice, "slice"};
      c.fill_str("manifest", "manifest", sl.manifest);
      c.fill_str("out", "out", sl.out);
      c.fill("slice-len", "slice_len", sl.slice_len);
      c.fill("normalize", "normalize", sl.normalize);
      c.fill("threads", "threads", sl.threads);
      env_path_default(sl.manifest, "HINOVA_DATA");
      env_path_default(sl.out, "HINOVA_OUT");
      hinova::require(!sl.manifest.empty(), "--manifest is required");
      hinova::require(!sl.out.empty(), "--out is required");
      return run_slice(sl);
    }
    if (cmd == "train") {
      ConfigLayer c{kv, train, "train"};
      c.fill_str("data", "data", tr.data);
      c.fill_str("out", "out", tr.out);
      c.fill_str("arch", "arch", tr.arch);
      c.fill("epochs", "epochs", tr.cfg.epochs);
      c.fill("batch", "batch", tr.cfg.batch);
      c.fill("lr", "lr", tr.cfg.adam.lr);
      c.fill("seed", "seed", tr.cfg.seed);
      c.fill("init-seed", "init_seed", tr.spec.init_seed);
      c.fill("dropout", "dropout", tr.spec.dropout_p);
      c.fill("hidden", "hidden", tr.spec.lstm_hidden);
      c.fill("ch1", "ch1", tr.spec.ch1);
      c.fill("ch2", "ch2", tr.spec.ch2);
      c.fill("ch3", "ch3", tr.spec.ch3);
      c.fill("ch4", "ch4", tr.spec.ch4);
      c.fill("kw", "kw", tr.spec.kw);
      c.fill("threads", "threads", tr.threads);
      env_path_default(tr.data, "HINOVA_DATA");
      env_path_default(tr.out, "HINOVA_OUT");
      hinova::require(!tr.data.empty(), "--data is required");
      hinova::require(!tr.out.empty(), "--out is required");
      return run_train(tr);
    }
    if (cmd == "fingerprint") {
      ConfigLayer c{kv, fing, "fingerprint"};
      c.fill_str("model", "model", fp.model);
      c.fill_str("data", "data", fp.data);
      c.fill_str("out", "out", fp.out);
      c.fill("bins", "bins", fp.bins);
      c.fill_str("mode", "mode", fp.mode);
      c.fill("normalize", "normalize", fp.normalize);
      c.fill("allow-empty", "allow_empty", fp.allow_empty);
      c.fill("threads", "threads", fp.threads);
      env_path_default(fp.data, "HINOVA_DATA");
      env_path_default(fp.out, "HINOVA_OUT");
      hinova::require(!fp.model.empty(), "--model is required");
      hinova::require(!fp.data.empty(), "--data is required");
      hinova::require(!fp.out.empty(), "--out is required");
      return run_fingerprint(fp);
    }
    if (cmd == "detect") {
      ConfigLayer c{kv, detect, "detect"};
      c.fill_str("model", "model", de.model);
      c.fill_str("data", "data", de.data);
      c.fill_str("enrolled", "enrolled", de.enrolled);
      c.fill("threshold", "threshold", de.threshold);
      c.fill("window", "window", de.window);
      c.fill_str("out", "out", de.out);
      c.fill("threads", "threads", de.threads);
      env_path_default(de.data, "HINOVA_DATA");
      env_path_default(de.out, "HINOVA_OUT");
      hinova::require(!de.model.empty(), "--model is required");
      hinova::require(!de.data.empty(), "--data is required");
      hinova::require(!de.enrolled.empty(), "--enrolled is required");
      hinova::require(!de.out.empty(), "--out is required");
      return run_detect(de);
    }
    if (cmd == "baseline") {
      ConfigLayer c{kv, baseline, "baseline"};
      c.fill_str("model", "model", ba.model);
      c.fill_str("data", "data", ba.data);
      c.fill_str("test", "test", ba.test);
      c.fill_str("method", "method", ba.method);
      c.fill("tail", "tail", ba.tail);
      c.fill("alpha", "alpha", ba.alpha);
      c.fill_str("out", "out", ba.out);
      c.fill("threads", "threads", ba.threads);
      env_path_default(ba.test, "HINOVA_DATA");
      env_path_default(ba.out, "HINOVA_OUT");
      hinova::require(!ba.model.empty(), "--model is required");
      hinova::require(!ba.test.empty(), "--test is required");
      hinova::require(!ba.out.empty(), "--out is required");
      return run_baseline(ba);
    }
    if (cmd == "evaluate") {
      ConfigLayer c{kv, evaluate, "evaluate"};
      c.fill_str("data", "data", ev.data);
      c.fill_str("out", "out", ev.out);
      c.fill_str("methods", "methods", ev.methods);
      c.fill_str("experiments", "experiments", ev.experiments);
      c.fill("known", "known", ev.cfg.n_known);
      c.fill("unknown", "unknown", ev.cfg.n_unknown);
      c.fill("folds", "folds", ev.cfg.k_folds);
      c.fill("bins", "bins", ev.cfg.bins);
      c.fill("window", "window", ev.cfg.window);
      c.fill("split-seed", "split_seed", ev.cfg.split_seed);
      c.fill("epochs", "epochs", ev.cfg.train.epochs);
      c.fill("batch", "batch", ev.cfg.train.batch);
      c.fill("lr", "lr", ev.cfg.train.adam.lr);
      c.fill("train-seed", "train_seed", ev.cfg.train.seed);
      c.fill("init-seed", "init_seed", ev.cfg.spec.init_seed);
      c.fill("dropout", "dropout", ev.cfg.spec.dropout_p);
      c.fill("hidden", "hidden", ev.cfg.spec.lstm_hidden);
      c.fill("ch1", "ch1", ev.cfg.spec.ch1);
      c.fill("ch2", "ch2", ev.cfg.spec.ch2);
      c.fill("ch3", "ch3", ev.cfg.spec.ch3);
      c.fill("ch4", "ch4", ev.cfg.spec.ch4);
      c.fill("kw", "kw", ev.cfg.spec.kw);
      c.fill("tail", "tail", ev.cfg.openmax_tail);
      c.fill("alpha", "alpha", ev.cfg.openmax_alpha);
      c.fill("threads", "threads", ev.threads);
      env_path_default(ev.data, "HINOVA_DATA");
      env_path_default(ev.out, "HINOVA_OUT");
      hinova::require(!ev.data.empty(), "--data is required");
      hinova::require(!ev.out.empty(), "--out is required");
      return run_evaluate(ev);
    }
    if (cmd == "selftest") {
      (void)selftest;
      return hinova::run_selftest() ? 0 : 1;
    }
    fail("unknown subcommand " + cmd);
  } catch (const hinova::Error& e) {
    std::fprintf(stderr, "hinova: %s: %s\n", cmd.c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hinova: %s: %s\n", cmd.c_str(), e.what());
    return 1;
  }
  return 0;
}
