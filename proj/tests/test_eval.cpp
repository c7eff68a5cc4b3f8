// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "hinova/eval.hpp"
#include "hinova/reference.hpp"
#include "hinova/rng.hpp"

using namespace hinova;

TEST_CASE("average precision hand cases") {
  CHECK(average_precision({0.9, 0.8, 0.1}, {1, 1, 0}) == 1.0);
  CHECK_THAT(average_precision({0.9, 0.8, 0.1}, {0, 1, 1}),
             Catch::Matchers::WithinAbs(7.0 / 12.0, 1e-6));
  // Worst ranking: positives at the bottom.
  CHECK_THAT(average_precision({0.1, 0.2, 0.9}, {1, 1, 0}),
             Catch::Matchers::WithinAbs((1.0 / 2.0 + 2.0 / 3.0) / 2.0, 1e-15));
}

TEST_CASE("average precision input validation") {
  CHECK_THROWS_WITH(average_precision({0.5, 0.4}, {0, 0}),
                    Catch::Matchers::ContainsSubstring("no positive"));
  CHECK_THROWS_WITH(average_precision({0.5, 0.4}, {1, 1}),
                    Catch::Matchers::ContainsSubstring("no negative"));
  CHECK_THROWS(average_precision({0.5}, {1, 0}));
  CHECK_THROWS(average_precision({std::nan(""), 0.4}, {1, 0}));
}

TEST_CASE("average precision equals brute-force enumeration on small instances") {
  // Exhaustive binary-score instances up to n = 6: every tie pattern between
  // two levels, every label assignment with both classes present.
  for (int n = 2; n <= 6; ++n) {
    for (int smask = 0; smask < (1 << n); ++smask)
      for (int lmask = 1; lmask < (1 << n) - 1; ++lmask) {
        std::vector<double> scores(static_cast<std::size_t>(n));
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
          scores[std::size_t(i)] = (smask >> i) & 1;
          labels[std::size_t(i)] = (lmask >> i) & 1;
        }
        const double fast = average_precision(scores, labels);
        const auto brute = reference::average_precision_brute(scores, labels);
        REQUIRE(brute.has_value());
        REQUIRE_THAT(fast, Catch::Matchers::WithinAbs(*brute, 1e-12));
      }
  }
}

TEST_CASE("average precision equals brute force on random tie-heavy instances") {
  Rng rng(555);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 2 + int(rng.below(19));  // up to 20
    const int levels = 1 + int(rng.below(4));
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    int n_pos = 0;
    for (int i = 0; i < n; ++i) {
      scores[std::size_t(i)] = double(rng.below(std::uint64_t(levels)));
      labels[std::size_t(i)] = int(rng.below(2));
      n_pos += labels[std::size_t(i)];
    }
    if (n_pos == 0) labels[0] = 1;
    if (n_pos == n) labels[0] = 0;
    const double fast = average_precision(scores, labels);
    const auto brute = reference::average_precision_brute(scores, labels);
    REQUIRE(brute.has_value());
    REQUIRE_THAT(fast, Catch::Matchers::WithinAbs(*brute, 1e-12));
  }
}

TEST_CASE("random rankings score near the positive rate") {
  Rng rng(808);
  double mean = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> scores(300);
    std::vector<int> labels(300);
    for (int i = 0; i < 300; ++i) {
      scores[std::size_t(i)] = rng.uniform01();
      labels[std::size_t(i)] = i % 3 == 0;  // positive rate 1/3
    }
    mean += average_precision(scores, labels);
  }
  mean /= double(trials);
  CHECK_THAT(mean, Catch::Matchers::WithinAbs(1.0 / 3.0, 0.02));
}

TEST_CASE("precision-recall curve and best F1 on the hand case") {
  const std::vector<double> scores = {0.9, 0.8, 0.1};
  const std::vector<int> labels = {0, 1, 1};
  const std::vector<PrPoint> pts = pr_curve(scores, labels);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].threshold == 0.9);
  CHECK(pts[0].precision == 0.0);
  CHECK(pts[0].recall == 0.0);
  CHECK(pts[1].precision == 0.5);
  CHECK(pts[1].recall == 0.5);
  CHECK_THAT(pts[2].precision, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
  CHECK(pts[2].recall == 1.0);

  const F1Result f1 = best_f1(scores, labels);
  CHECK_THAT(f1.f1, Catch::Matchers::WithinAbs(0.8, 1e-12));
  CHECK(f1.cut == 0.1);
}

namespace {

/// Synthetic slice dataset: per-device sinusoid period, two feature rows.
SliceDataset toy_dataset(int n_devices, int slices_per_device, int slice_len,
                         std::uint64_t seed) {
  SliceDataset ds;
  ds.slice_len = slice_len;
  ds.normalized = true;
  Rng rng(seed);
  for (int d = 0; d < n_devices; ++d)
    for (int s = 0; s < slices_per_device; ++s) {
      ds.device_ids.push_back(d);
      ds.capture_ids.push_back(0);
      ds.slice_in_capture.push_back(s);
      const double period = 6.0 + 3.0 * d;
      for (int h = 0; h < 2; ++h)
        for (int w = 0; w < slice_len; ++w)
          ds.features.push_back(
              float(std::sin(2.0 * M_PI * (w + 8 * h) / period) + 0.05 * rng.normal()));
    }
  return ds;
}

}  // namespace

TEST_CASE("open-set folds satisfy the protocol hygiene rules") {
  const SliceDataset ds = toy_dataset(15, 17, 8, 42);  // 17 truncates to 15 per device
  const auto folds = make_openset_folds(ds, 10, 5, 5, 7, 1);
  REQUIRE(folds.size() == 5);

  std::set<int> unknown_set(folds[0].unknown.begin(), folds[0].unknown.end());
  REQUIRE(unknown_set.size() == 5);
  for (const FoldSpec& f : folds) {
    CHECK(f.known.size() == 10);
    CHECK(f.unknown.size() == 5);
    // Known and unknown never overlap.
    for (int d : f.known) CHECK(unknown_set.count(d) == 0);
    // Train/test intersection empty, and no unknown-device slice in train.
    std::set<int> train(f.train_slices.begin(), f.train_slices.end());
    CHECK(train.size() == f.train_slices.size());
    for (int t : f.test_slices) CHECK(train.count(t) == 0);
    for (int t : f.train_slices)
      CHECK(unknown_set.count(ds.device_ids[std::size_t(t)]) == 0);
    // 15 kept slices per device, 3 per partition: 10x12 train, 15x3 test.
    CHECK(f.train_slices.size() == 120);
    CHECK(f.test_slices.size() == 45);
    int test_known = 0, test_unknown = 0;
    for (int t : f.test_slices)
      (unknown_set.count(ds.device_ids[std::size_t(t)]) ? test_unknown : test_known)++;
    CHECK(test_known == 2 * test_unknown);  // 2:1 balance
  }

  SECTION("per-device test partitions tile the kept slices") {
    for (int d = 0; d < 15; ++d) {
      std::vector<int> seen;
      for (const FoldSpec& f : folds)
        for (int t : f.test_slices)
          if (ds.device_ids[std::size_t(t)] == d) seen.push_back(t);
      std::sort(seen.begin(), seen.end());
      CHECK(seen.size() == 15);  // 17 truncated to a multiple of 5
      CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    }
  }

  SECTION("determinism and experiment seeding") {
    const auto again = make_openset_folds(ds, 10, 5, 5, 7, 1);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      CHECK(folds[f].known == again[f].known);
      CHECK(folds[f].unknown == again[f].unknown);
      CHECK(folds[f].train_slices == again[f].train_slices);
      CHECK(folds[f].test_slices == again[f].test_slices);
    }
    const auto other = make_openset_folds(ds, 10, 5, 5, 7, 2);
    CHECK(folds[0].unknown != other[0].unknown);
  }

  SECTION("too few devices is an error") {
    const SliceDataset small = toy_dataset(8, 10, 8, 43);
    CHECK_THROWS_WITH(make_openset_folds(small, 10, 5, 5, 7, 1),
                      Catch::Matchers::ContainsSubstring("too few devices"));
  }
}

TEST_CASE("experiment harness produces a deterministic, complete report") {
  const SliceDataset ds = toy_dataset(6, 12, 32, 99);
  EvalConfig cfg;
  cfg.n_known = 4;
  cfg.n_unknown = 2;
  cfg.k_folds = 3;
  cfg.split_seed = 5;
  cfg.bins = 25;
  cfg.spec.ch1 = 2;
  cfg.spec.ch2 = 2;
  cfg.spec.ch3 = 3;
  cfg.spec.ch4 = 3;
  cfg.spec.kw = 9;
  cfg.spec.dropout_p = 0.1;
  cfg.spec.lstm_hidden = 4;
  cfg.spec.init_seed = 5;
  cfg.train.epochs = 8;
  cfg.train.batch = 8;
  cfg.train.adam.lr = 5e-3;
  cfg.train.seed = 7;
  cfg.openmax_tail = 2;

  const ExperimentReport rep = run_experiment(ds, cfg, 1);
  CHECK(rep.experiment == 1);
  CHECK(rep.folds.size() == cfg.methods.size() * 3);

  for (const FoldResult& f : rep.folds) {
    CHECK(f.auprc_group >= 0.0);
    CHECK(f.auprc_group <= 1.0);
    CHECK(f.auprc_slice >= 0.0);
    CHECK(f.auprc_slice <= 1.0);
    REQUIRE(f.groups.size() == 6);
    REQUIRE(f.slices.size() == 6 * 4);  // 12 slices -> 4 per partition
    int pos = 0;
    for (const GroupScore& g : f.groups) pos += g.label;
    CHECK(pos == 2);
    for (const GroupScore& g : f.groups) {
      CHECK(std::isfinite(g.score));
      CHECK(g.group.substr(0, 3) == "dev");
    }
  }
  for (const std::string& m : cfg.methods) {
    CHECK(rep.mean_auprc_group(m) >= 0.0);
    CHECK(rep.mean_auprc_group(m) <= 1.0);
  }

  SECTION("reruns are bit-identical and share the digest") {
    const ExperimentReport again = run_experiment(ds, cfg, 1);
    REQUIRE(again.folds.size() == rep.folds.size());
    CHECK(again.config_digest == rep.config_digest);
    for (std::size_t i = 0; i < rep.folds.size(); ++i) {
      CHECK(again.folds[i].auprc_group == rep.folds[i].auprc_group);
      CHECK(again.folds[i].auprc_slice == rep.folds[i].auprc_slice);
      REQUIRE(again.folds[i].slices.size() == rep.folds[i].slices.size());
      for (std::size_t s = 0; s < rep.folds[i].slices.size(); ++s)
        CHECK(again.folds[i].slices[s].score == rep.folds[i].slices[s].score);
    }
  }

  SECTION("config changes move the digest") {
    EvalConfig other = cfg;
    other.train.seed = 8;
    const std::string a = hex64(fnv1a64(cfg.canonical(ds)));
    const std::string b = hex64(fnv1a64(other.canonical(ds)));
    CHECK(a != b);
    CHECK(a == rep.config_digest);
  }

  SECTION("report files are written with the digest up front") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hinova_test_eval";
    fs::create_directories(dir);
    write_reports(dir.string(), {rep});
    for (const char* name : {"report.csv", "summary.csv", "scores.csv", "pr_curve.csv"}) {
      const std::string text = read_text_file((dir / name).string());
      CHECK(text.rfind("# config_digest=" + rep.config_digest + "\n", 0) == 0);
      CHECK(std::count(text.begin(), text.end(), '\n') > 2);
    }
    const std::string report = read_text_file((dir / "report.csv").string());
    CHECK(report.find("hinova,1,0,") != std::string::npos);
    CHECK(report.find("openmax,1,2,") != std::string::npos);
  }

  SECTION("window grouping multiplies the group count") {
    EvalConfig wcfg = cfg;
    wcfg.window = 2;  // 4 test slices per device -> 2 windows each
    wcfg.methods = {"maxlogit-cnnlstm"};
    const ExperimentReport wrep = run_experiment(ds, wcfg, 1);
    for (const FoldResult& f : wrep.folds) REQUIRE(f.groups.size() == 12);
  }

  SECTION("unknown methods are rejected") {
    EvalConfig bad = cfg;
    bad.methods = {"nearest-neighbor"};
    CHECK_THROWS_WITH(run_experiment(ds, bad, 1),
                      Catch::Matchers::ContainsSubstring("unknown method"));
  }
}
