// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hinova/baselines.hpp"
#include "hinova/common.hpp"
#include "hinova/detector.hpp"
#include "hinova/fingerprint.hpp"
#include "hinova/nn/train.hpp"
#include "hinova/preprocess.hpp"
#include "hinova/rng.hpp"

namespace hinova {

/// One cross-validation fold of the open-set protocol: known devices train
/// the classifier, unknown devices appear only at test time, and each
/// device's slices are split into k equal contiguous partitions of which
/// partition `fold` is held out.
struct FoldSpec {
  int experiment = 1;
  int fold = 0;
  std::vector<int> known;    // device ids, ascending
  std::vector<int> unknown;  // device ids, ascending
  std::vector<int> train_slices;
  std::vector<int> test_slices;
};

namespace eval_detail {
constexpr std::uint64_t kSplitSalt = 0x53504c54ull;  // device split stream
}

/// Seeded device split plus slice partitioning. The experiment index salts
/// the split so the three experiments disagree on which devices are unknown
/// while everything stays reproducible from (seed, experiment).
inline std::vector<FoldSpec> make_openset_folds(const SliceDataset& ds, int n_known,
                                                int n_unknown, int k_folds, std::uint64_t seed,
                                                int experiment) {
  require(n_known >= 1 && n_unknown >= 1 && k_folds >= 2, "make_openset_folds: bad fold shape");
  std::vector<int> devices;
  for (std::size_t i = 0; i < ds.n(); ++i) devices.push_back(ds.device_ids[i]);
  std::sort(devices.begin(), devices.end());
  devices.erase(std::unique(devices.begin(), devices.end()), devices.end());
  require(int(devices.size()) >= n_known + n_unknown,
          "make_openset_folds: too few devices: have " + std::to_string(devices.size()) +
              ", need " + std::to_string(n_known + n_unknown));

  Rng rng(mix_seed(seed, eval_detail::kSplitSalt, std::uint64_t(experiment)));
  rng.shuffle(devices);
  std::vector<int> known(devices.begin(), devices.begin() + n_known);
  std::vector<int> unknown(devices.begin() + n_known, devices.begin() + n_known + n_unknown);
  std::sort(known.begin(), known.end());
  std::sort(unknown.begin(), unknown.end());

  // Per-device slice lists in dataset order; contiguous partitions keep
  // temporally adjacent slices together, the stricter hygiene choice.
  auto partitions_of = [&](int device) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < ds.n(); ++i)
      if (ds.device_ids[i] == device) idx.push_back(int(i));
    const std::size_t per = idx.size() / std::size_t(k_folds);
    require(per >= 1, "make_openset_folds: device " + std::to_string(device) +
                          " has fewer slices than folds");
    idx.resize(per * std::size_t(k_folds));  // truncate the remainder
    std::vector<std::vector<int>> parts(static_cast<std::size_t>(k_folds));
    for (int p = 0; p < k_folds; ++p)
      parts[std::size_t(p)].assign(idx.begin() + std::ptrdiff_t(std::size_t(p) * per),
                                   idx.begin() + std::ptrdiff_t(std::size_t(p + 1) * per));
    return parts;
  };

  std::vector<FoldSpec> folds(static_cast<std::size_t>(k_folds));
  for (int f = 0; f < k_folds; ++f) {
    folds[std::size_t(f)].experiment = experiment;
    folds[std::size_t(f)].fold = f;
    folds[std::size_t(f)].known = known;
    folds[std::size_t(f)].unknown = unknown;
  }
  for (int d : known) {
    const auto parts = partitions_of(d);
    for (int f = 0; f < k_folds; ++f)
      for (int p = 0; p < k_folds; ++p) {
        auto& dst =
            p == f ? folds[std::size_t(f)].test_slices : folds[std::size_t(f)].train_slices;
        dst.insert(dst.end(), parts[std::size_t(p)].begin(), parts[std::size_t(p)].end());
      }
  }
  for (int d : unknown) {
    const auto parts = partitions_of(d);
    for (int f = 0; f < k_folds; ++f)
      folds[std::size_t(f)].test_slices.insert(folds[std::size_t(f)].test_slices.end(),
                                               parts[std::size_t(f)].begin(),
                                               parts[std::size_t(f)].end());
  }
  return folds;
}

/// Average precision with unknown = positive. Tied score blocks contribute
/// the expectation over every achievable ordering of the block (closed
/// form), which is what a brute-force enumeration converges to.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  require(scores.size() == labels.size(), "average_precision: size mismatch");
  const int n = int(scores.size());
  require(n >= 1, "average_precision: empty input");
  for (double s : scores) require(std::isfinite(s), "average_precision: non-finite score");
  int n_pos = 0;
  for (int l : labels) n_pos += (l != 0);
  require(n_pos >= 1, "average_precision: no positive labels");
  require(n_pos < n, "average_precision: no negative labels");
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[std::size_t(i)] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return scores[std::size_t(a)] > scores[std::size_t(b)]; });
  double total = 0.0;
  int before = 0, tp_before = 0;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n &&
           scores[std::size_t(idx[std::size_t(j)])] == scores[std::size_t(idx[std::size_t(i)])])
      ++j;
    const int b = j - i;
    int p = 0;
    for (int t = i; t < j; ++t) p += (labels[std::size_t(idx[std::size_t(t)])] != 0);
    if (p > 0) {
      if (b == 1) {
        total += double(tp_before + 1) / double(before + 1);
      } else {
        // Positives land uniformly over the block's slots; precision at
        // slot r averages over the hypergeometric count of earlier ones.
        for (int r = 1; r <= b; ++r)
          total += (double(p) / double(b)) *
                   (double(tp_before) + 1.0 +
                    double(r - 1) * double(p - 1) / double(b - 1)) /
                   double(before + r);
      }
    }
    before += b;
    tp_before += p;
    i = j;
  }
  return total / double(n_pos);
}

struct PrPoint {
  double threshold = 0.0;  // smallest score still treated as positive
  double precision = 1.0;
  double recall = 0.0;
};

/// Step precision-recall points, one per distinct score (tied blocks enter
/// together). Consumable as plot data.
inline std::vector<PrPoint> pr_curve(const std::vector<double>& scores,
                                     const std::vector<int>& labels) {
  require(scores.size() == labels.size(), "pr_curve: size mismatch");
  require(!scores.empty(), "pr_curve: empty input");
  int n_pos = 0;
  for (int l : labels) n_pos += (l != 0);
  require(n_pos >= 1, "pr_curve: no positive labels");
  std::vector<int> idx(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) idx[i] = int(i);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return scores[std::size_t(a)] > scores[std::size_t(b)]; });
  std::vector<PrPoint> out;
  int tp = 0, seen = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() &&
           scores[std::size_t(idx[j])] == scores[std::size_t(idx[i])])
      ++j;
    for (std::size_t t = i; t < j; ++t) tp += (labels[std::size_t(idx[t])] != 0);
    seen += int(j - i);
    PrPoint pt;
    pt.threshold = scores[std::size_t(idx[i])];
    pt.precision = double(tp) / double(seen);
    pt.recall = double(tp) / double(n_pos);
    out.push_back(pt);
    i = j;
  }
  return out;
}

struct F1Result {
  double f1 = 0.0;
  double cut = 0.0;  // smallest score still flagged at the optimum
};

/// Best F1 over all cut points of the ranked list (flag everything scoring
/// at or above the cut).
inline F1Result best_f1(const std::vector<double>& scores, const std::vector<int>& labels) {
  const std::vector<PrPoint> pts = pr_curve(scores, labels);
  F1Result best;
  best.cut = pts.empty() ? 0.0 : pts.front().threshold;
  for (const PrPoint& pt : pts) {
    if (pt.precision + pt.recall <= 0.0) continue;
    const double f1 = 2.0 * pt.precision * pt.recall / (pt.precision + pt.recall);
    if (f1 > best.f1) {
      best.f1 = f1;
      best.cut = pt.threshold;
    }
  }
  return best;
}

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m = {"hinova", "hinova-pairwise", "maxlogit-cnn",
                                             "maxlogit-cnnlstm", "openmax"};
  return m;
}

/// Everything run_experiment needs beyond the dataset. Model width is tied
/// to the dataset at run time (in_w = slice length, two feature rows).
struct EvalConfig {
  int n_known = 10;
  int n_unknown = 5;
  int k_folds = 5;
  std::uint64_t split_seed = 1;
  std::vector<int> experiments = {1, 2, 3};
  std::vector<std::string> methods = known_methods();
  int bins = 25;
  int window = 0;  // 0: one test group per device; >0: windows of this many slices
  nn::ModelSpec spec;        // arch/in_w/n_classes are overwritten per run
  nn::TrainConfig train;
  int openmax_tail = 20;
  double openmax_alpha = 3.0;
  ThreadPool* pool = nullptr;

  /// Canonical text of every numeric knob; the report digest is the FNV-1a
  /// of this string, so equal digests really do mean an identical setup.
  std::string canonical(const SliceDataset& ds) const {
    std::ostringstream os;
    os << "n_known=" << n_known << "\nn_unknown=" << n_unknown << "\nk_folds=" << k_folds
       << "\nsplit_seed=" << split_seed << "\nbins=" << bins << "\nwindow=" << window
       << "\nexperiments=";
    for (int e : experiments) os << e << ",";
    os << "\nmethods=";
    for (const auto& m : methods) os << m << ",";
    os << "\nslice_len=" << ds.slice_len << "\nnormalized=" << (ds.normalized ? 1 : 0)
       << "\nn_slices=" << ds.n() << "\nch=" << spec.ch1 << "," << spec.ch2 << "," << spec.ch3
       << "," << spec.ch4 << "\nkh=" << spec.kh << "\nkw=" << spec.kw
       << "\ndropout=" << fmt_double(spec.dropout_p) << "\nlstm_hidden=" << spec.lstm_hidden
       << "\nbn_momentum=" << fmt_double(spec.bn_momentum) << "\ninit_seed=" << spec.init_seed
       << "\nepochs=" << train.epochs << "\nbatch=" << train.batch
       << "\nlr=" << fmt_double(train.adam.lr) << "\nbeta1=" << fmt_double(train.adam.beta1)
       << "\nbeta2=" << fmt_double(train.adam.beta2) << "\neps=" << fmt_double(train.adam.eps)
       << "\ntrain_seed=" << train.seed << "\nopenmax_tail=" << openmax_tail
       << "\nopenmax_alpha=" << fmt_double(openmax_alpha) << "\n";
    return os.str();
  }
};

struct GroupScore {
  std::string group;
  int device_id = -1;
  int label = 0;  // 1 = unknown device
  double score = 0.0;
};

struct FoldResult {
  std::string method;
  int experiment = 1;
  int fold = 0;
  std::vector<GroupScore> groups;
  std::vector<GroupScore> slices;
  double auprc_group = 0.0;
  double auprc_slice = 0.0;
  double f1_group = 0.0;
  double f1_cut = 0.0;
  double train_acc = 0.0;
};

struct ExperimentReport {
  int experiment = 1;
  std::string config_digest;
  std::vector<FoldResult> folds;  // methods x k_folds, method-major

  double mean_auprc_group(const std::string& method) const {
    double s = 0.0;
    int c = 0;
    for (const FoldResult& f : folds)
      if (f.method == method) {
        s += f.auprc_group;
        ++c;
      }
    require(c > 0, "mean_auprc_group: no folds for method " + method);
    return s / double(c);
  }
  double mean_auprc_slice(const std::string& method) const {
    double s = 0.0;
    int c = 0;
    for (const FoldResult& f : folds)
      if (f.method == method) {
        s += f.auprc_slice;
        ++c;
      }
    require(c > 0, "mean_auprc_slice: no folds for method " + method);
    return s / double(c);
  }
};

namespace eval_detail {

/// Per-slice evaluation pass output: hidden steps T-1/T and logits for
/// every slice, in order. One forward pass feeds every method.
struct SlicePass {
  int m = 0;
  int k = 0;
  std::vector<float> h_last;  // [n][m]
  std::vector<float> h_prev;  // [n][m]
  std::vector<float> logits;  // [n][k]
};

inline SlicePass run_slice_pass(nn::Model<float>& model, const SliceDataset& ds,
                                const std::vector<int>& slices) {
  SlicePass out;
  out.m = model.spec().arch == nn::Arch::cnn_lstm ? model.spec().lstm_hidden : 0;
  out.k = model.spec().n_classes;
  const std::size_t item = std::size_t(model.spec().in_h) * model.spec().in_w;
  const int t_n = model.spec().arch == nn::Arch::cnn_lstm ? model.t_steps() : 0;
  const int n = int(slices.size());
  out.logits.resize(std::size_t(n) * out.k);
  if (out.m > 0) {
    out.h_last.resize(std::size_t(n) * out.m);
    out.h_prev.resize(std::size_t(n) * out.m);
  }
  const int bmax = model.max_batch();
  std::vector<float> buf(std::size_t(bmax) * item);
  for (int start = 0; start < n; start += bmax) {
    const int b = std::min(bmax, n - start);
    for (int i = 0; i < b; ++i)
      std::copy_n(ds.feature(std::size_t(slices[std::size_t(start + i)])), item,
                  buf.data() + std::size_t(i) * item);
    model.forward(buf.data(), b, false);
    std::copy_n(model.logits(), std::size_t(b) * out.k,
                out.logits.data() + std::size_t(start) * out.k);
    if (out.m > 0) {
      std::copy_n(model.hidden_step(t_n - 1), std::size_t(b) * out.m,
                  out.h_last.data() + std::size_t(start) * out.m);
      std::copy_n(model.hidden_step(t_n - 2), std::size_t(b) * out.m,
                  out.h_prev.data() + std::size_t(start) * out.m);
    }
  }
  return out;
}

/// Histogram fingerprint of a set of rows from a slice pass.
inline Fingerprint fp_from_pass(const SlicePass& pass, const std::vector<int>& rows, int bins,
                                bool pairwise) {
  Fingerprint fp;
  fp.nodes = pass.m;
  fp.bins = bins;
  fp.mode = pairwise ? FpMode::pairwise : FpMode::final_step;
  fp.n_slices = std::int64_t(rows.size());
  fp.data.assign(fp.expected_size(), 0.0);
  for (int r : rows)
    for (int node = 0; node < pass.m; ++node) {
      const int bc = hist_bin(double(pass.h_last[std::size_t(r) * pass.m + node]), bins);
      if (pairwise) {
        const int bp = hist_bin(double(pass.h_prev[std::size_t(r) * pass.m + node]), bins);
        fp.data[(std::size_t(node) * bins + std::size_t(bp)) * bins + std::size_t(bc)] += 1.0;
      } else {
        fp.data[std::size_t(node) * bins + std::size_t(bc)] += 1.0;
      }
    }
  return fp;
}

struct TestGroup {
  std::string name;
  int device_id = -1;
  int label = 0;
  std::vector<int> rows;  // indices into the fold's test slice pass
};

}  // namespace eval_detail

/// Runs every requested method over every fold of one experiment. All
/// methods sharing the recurrent model see the same trained weights; the
/// convolution-only baseline trains its own model on the same fold data.
inline ExperimentReport run_experiment(const SliceDataset& ds, const EvalConfig& cfg,
                                       int experiment, bool verbose = false) {
  for (const std::string& m : cfg.methods)
    require(std::find(known_methods().begin(), known_methods().end(), m) != known_methods().end(),
            "run_experiment: unknown method '" + m + "'");
  require(!cfg.methods.empty(), "run_experiment: no methods requested");

  const std::vector<FoldSpec> folds =
      make_openset_folds(ds, cfg.n_known, cfg.n_unknown, cfg.k_folds, cfg.split_seed, experiment);

  ExperimentReport report;
  report.experiment = experiment;
  report.config_digest = hex64(fnv1a64(cfg.canonical(ds)));

  const bool want_lstm =
      std::any_of(cfg.methods.begin(), cfg.methods.end(),
                  [](const std::string& m) { return m != "maxlogit-cnn"; });
  const bool want_cnn = std::find(cfg.methods.begin(), cfg.methods.end(), "maxlogit-cnn") !=
                        cfg.methods.end();

  for (const FoldSpec& fold : folds) {
    // Class index = position in the ascending known-device list.
    auto class_of = [&](int device) {
      const auto it = std::lower_bound(fold.known.begin(), fold.known.end(), device);
      require(it != fold.known.end() && *it == device, "run_experiment: device not in known set");
      return int(it - fold.known.begin());
    };

    const std::size_t item = ds.feature_size();
    std::vector<float> xtr(fold.train_slices.size() * item);
    std::vector<int> ytr(fold.train_slices.size());
    for (std::size_t i = 0; i < fold.train_slices.size(); ++i) {
      std::copy_n(ds.feature(std::size_t(fold.train_slices[i])), item, xtr.data() + i * item);
      ytr[i] = class_of(ds.device_ids[std::size_t(fold.train_slices[i])]);
    }

    nn::ModelSpec spec = cfg.spec;
    spec.in_h = 2;
    spec.in_w = ds.slice_len;
    spec.n_classes = int(fold.known.size());
    spec.init_seed = mix_seed(cfg.spec.init_seed, 0x464f4c44ull, std::uint64_t(experiment),
                              std::uint64_t(fold.fold));
    nn::TrainConfig tcfg = cfg.train;
    tcfg.seed = mix_seed(cfg.train.seed, 0x464f4c44ull, std::uint64_t(experiment),
                         std::uint64_t(fold.fold));
    tcfg.verbose = verbose;

    // Test groups, fixed across methods: per device by default, fixed
    // windows when requested. Slice granularity reuses rows directly.
    std::vector<eval_detail::TestGroup> groups;
    {
      std::vector<int> devices = fold.known;
      devices.insert(devices.end(), fold.unknown.begin(), fold.unknown.end());
      std::sort(devices.begin(), devices.end());
      for (int d : devices) {
        std::vector<int> rows;
        for (std::size_t i = 0; i < fold.test_slices.size(); ++i)
          if (ds.device_ids[std::size_t(fold.test_slices[i])] == d) rows.push_back(int(i));
        const bool unknown = std::binary_search(fold.unknown.begin(), fold.unknown.end(), d);
        if (cfg.window <= 0) {
          eval_detail::TestGroup g;
          g.name = "dev" + std::to_string(d);
          g.device_id = d;
          g.label = unknown ? 1 : 0;
          g.rows = std::move(rows);
          groups.push_back(std::move(g));
        } else {
          int w = 0;
          for (std::size_t s = 0; s < rows.size(); s += std::size_t(cfg.window), ++w) {
            eval_detail::TestGroup g;
            g.name = "dev" + std::to_string(d) + "_w" + std::to_string(w);
            g.device_id = d;
            g.label = unknown ? 1 : 0;
            const std::size_t e = std::min(rows.size(), s + std::size_t(cfg.window));
            g.rows.assign(rows.begin() + std::ptrdiff_t(s), rows.begin() + std::ptrdiff_t(e));
            groups.push_back(std::move(g));
          }
        }
      }
    }

    const int n_train = int(fold.train_slices.size());
    eval_detail::SlicePass train_pass, test_pass;
    double train_acc = 0.0;
    if (want_lstm) {
      spec.arch = nn::Arch::cnn_lstm;
      nn::Model<float> model(spec, std::min(32, n_train), cfg.pool);
      model.init_params();
      const auto stats = nn::train_model(model, xtr.data(), ytr.data(), n_train, tcfg);
      train_acc = stats.empty() ? 0.0 : stats.back().accuracy;
      train_pass = eval_detail::run_slice_pass(model, ds, fold.train_slices);
      test_pass = eval_detail::run_slice_pass(model, ds, fold.test_slices);
    }
    eval_detail::SlicePass cnn_test_pass;
    if (want_cnn) {
      nn::ModelSpec cspec = spec;
      cspec.arch = nn::Arch::cnn_only;
      cspec.init_seed = mix_seed(spec.init_seed, 0x434f4e56ull);
      nn::TrainConfig ccfg = tcfg;
      ccfg.seed = mix_seed(tcfg.seed, 0x434f4e56ull);
      nn::Model<float> cmodel(cspec, std::min(32, n_train), cfg.pool);
      cmodel.init_params();
      nn::train_model(cmodel, xtr.data(), ytr.data(), n_train, ccfg);
      cnn_test_pass = eval_detail::run_slice_pass(cmodel, ds, fold.test_slices);
    }

    // Correctly classified train rows per class feed fingerprints and the
    // activation calibration alike.
    std::vector<std::vector<int>> correct_rows(static_cast<std::size_t>(spec.n_classes));
    if (want_lstm)
      for (int i = 0; i < n_train; ++i) {
        const int label = ytr[std::size_t(i)];
        if (nn::argmax_row(train_pass.logits.data() + std::size_t(i) * train_pass.k,
                           train_pass.k) == label)
          correct_rows[std::size_t(label)].push_back(i);
      }

    const int n_test = int(fold.test_slices.size());
    auto slice_label = [&](int row) {
      const int d = ds.device_ids[std::size_t(fold.test_slices[std::size_t(row)])];
      return std::binary_search(fold.unknown.begin(), fold.unknown.end(), d) ? 1 : 0;
    };
    auto slice_name = [&](int row) {
      const int d = ds.device_ids[std::size_t(fold.test_slices[std::size_t(row)])];
      return "dev" + std::to_string(d) + "_s" + std::to_string(row);
    };
    auto slice_device = [&](int row) {
      return ds.device_ids[std::size_t(fold.test_slices[std::size_t(row)])];
    };

    for (const std::string& method : cfg.methods) {
      FoldResult fr;
      fr.method = method;
      fr.experiment = experiment;
      fr.fold = fold.fold;
      fr.train_acc = train_acc;

      std::vector<double> per_slice(static_cast<std::size_t>(n_test), 0.0);
      auto group_mean = [&](const eval_detail::TestGroup& g) {
        double s = 0.0;
        for (int r : g.rows) s += per_slice[std::size_t(r)];
        return s / double(g.rows.size());
      };

      if (method == "hinova" || method == "hinova-pairwise") {
        const bool pairwise = method == "hinova-pairwise";
        std::vector<Fingerprint> enrolled;
        for (int c = 0; c < spec.n_classes; ++c) {
          Fingerprint fp = eval_detail::fp_from_pass(train_pass, correct_rows[std::size_t(c)],
                                                     cfg.bins, pairwise);
          fp.owner_id = fold.known[std::size_t(c)];
          if (fp.n_slices == 0)
            std::fprintf(stderr,
                         "warning: experiment %d fold %d: device %d has zero correctly "
                         "classified training slices\n",
                         experiment, fold.fold, fp.owner_id);
          enrolled.push_back(std::move(fp));
        }
        for (const auto& g : groups) {
          const Fingerprint fp = eval_detail::fp_from_pass(test_pass, g.rows, cfg.bins, pairwise);
          fr.groups.push_back({g.name, g.device_id, g.label, score_open_set(fp, enrolled).score});
        }
        for (int r = 0; r < n_test; ++r) {
          const Fingerprint fp = eval_detail::fp_from_pass(test_pass, {r}, cfg.bins, pairwise);
          per_slice[std::size_t(r)] = score_open_set(fp, enrolled).score;
          fr.slices.push_back({slice_name(r), slice_device(r), slice_label(r),
                               per_slice[std::size_t(r)]});
        }
      } else {
        const eval_detail::SlicePass& pass = method == "maxlogit-cnn" ? cnn_test_pass : test_pass;
        if (method == "openmax") {
          std::vector<std::vector<double>> acts(static_cast<std::size_t>(spec.n_classes));
          for (int c = 0; c < spec.n_classes; ++c)
            for (int r : correct_rows[std::size_t(c)])
              for (int j = 0; j < train_pass.k; ++j)
                acts[std::size_t(c)].push_back(
                    double(train_pass.logits[std::size_t(r) * train_pass.k + j]));
          const OpenMaxModel om =
              fit_openmax(acts, spec.n_classes, cfg.openmax_tail, cfg.openmax_alpha);
          for (int r = 0; r < n_test; ++r)
            per_slice[std::size_t(r)] =
                openmax_novelty(om, pass.logits.data() + std::size_t(r) * pass.k);
        } else {
          for (int r = 0; r < n_test; ++r)
            per_slice[std::size_t(r)] =
                maxlogit_score(pass.logits.data() + std::size_t(r) * pass.k, pass.k);
        }
        for (const auto& g : groups)
          fr.groups.push_back({g.name, g.device_id, g.label, group_mean(g)});
        for (int r = 0; r < n_test; ++r)
          fr.slices.push_back({slice_name(r), slice_device(r), slice_label(r),
                               per_slice[std::size_t(r)]});
      }

      std::vector<double> gs, ss;
      std::vector<int> gl, sl;
      for (const GroupScore& g : fr.groups) {
        gs.push_back(g.score);
        gl.push_back(g.label);
      }
      for (const GroupScore& s : fr.slices) {
        ss.push_back(s.score);
        sl.push_back(s.label);
      }
      fr.auprc_group = average_precision(gs, gl);
      fr.auprc_slice = average_precision(ss, sl);
      const F1Result f1 = best_f1(gs, gl);
      fr.f1_group = f1.f1;
      fr.f1_cut = f1.cut;
      report.folds.push_back(std::move(fr));
    }
    if (verbose)
      std::fprintf(stderr, "experiment %d fold %d done (train acc %.3f)\n", experiment, fold.fold,
                   train_acc);
  }
  return report;
}

/// CSV report set. Every file opens with the config digest so reruns are
/// comparable byte for byte; no timestamps or machine identity anywhere.
inline void write_reports(const std::string& dir, const std::vector<ExperimentReport>& reports) {
  require(!reports.empty(), "write_reports: nothing to write");
  const std::string digest = reports.front().config_digest;
  for (const auto& r : reports)
    require(r.config_digest == digest, "write_reports: mixed config digests");

  std::ofstream rep(dir + "/report.csv", std::ios::binary);
  if (!rep) fail("write_reports: cannot open " + dir + "/report.csv");
  rep << "# config_digest=" << digest << "\n";
  rep << "method,experiment,fold,auprc_group,auprc_slice,f1_group,f1_cut,train_acc\n";
  for (const auto& r : reports)
    for (const auto& f : r.folds)
      rep << f.method << "," << f.experiment << "," << f.fold << "," << fmt_double(f.auprc_group)
          << "," << fmt_double(f.auprc_slice) << "," << fmt_double(f.f1_group) << ","
          << fmt_double(f.f1_cut) << "," << fmt_double(f.train_acc) << "\n";

  std::ofstream sum(dir + "/summary.csv", std::ios::binary);
  if (!sum) fail("write_reports: cannot open " + dir + "/summary.csv");
  sum << "# config_digest=" << digest << "\n";
  sum << "method,experiment,mean_auprc_group,mean_auprc_slice\n";
  for (const auto& r : reports) {
    std::vector<std::string> methods;
    for (const auto& f : r.folds)
      if (std::find(methods.begin(), methods.end(), f.method) == methods.end())
        methods.push_back(f.method);
    for (const auto& m : methods)
      sum << m << "," << r.experiment << "," << fmt_double(r.mean_auprc_group(m)) << ","
          << fmt_double(r.mean_auprc_slice(m)) << "\n";
  }

  std::ofstream sc(dir + "/scores.csv", std::ios::binary);
  if (!sc) fail("write_reports: cannot open " + dir + "/scores.csv");
  sc << "# config_digest=" << digest << "\n";
  sc << "method,experiment,fold,granularity,group,device,label,score\n";
  for (const auto& r : reports)
    for (const auto& f : r.folds) {
      for (const auto& g : f.groups)
        sc << f.method << "," << f.experiment << "," << f.fold << ",group," << g.group << ","
           << g.device_id << "," << g.label << "," << fmt_double(g.score) << "\n";
      for (const auto& s : f.slices)
        sc << f.method << "," << f.experiment << "," << f.fold << ",slice," << s.group << ","
           << s.device_id << "," << s.label << "," << fmt_double(s.score) << "\n";
    }

  std::ofstream pr(dir + "/pr_curve.csv", std::ios::binary);
  if (!pr) fail("write_reports: cannot open " + dir + "/pr_curve.csv");
  pr << "# config_digest=" << digest << "\n";
  pr << "method,experiment,fold,threshold,precision,recall\n";
  for (const auto& r : reports)
    for (const auto& f : r.folds) {
      std::vector<double> gs;
      std::vector<int> gl;
      for (const auto& g : f.groups) {
        gs.push_back(g.score);
        gl.push_back(g.label);
      }
      for (const PrPoint& pt : pr_curve(gs, gl))
        pr << f.method << "," << f.experiment << "," << f.fold << "," << fmt_double(pt.threshold)
           << "," << fmt_double(pt.precision) << "," << fmt_double(pt.recall) << "\n";
    }
}

}  // namespace hinova
