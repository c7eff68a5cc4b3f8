// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hinova/baselines.hpp"
#include "hinova/nn/train.hpp"
#include "hinova/rng.hpp"
#include "hinova/weibull.hpp"

using namespace hinova;

TEST_CASE("negated max logit hand case") {
  const float logits[3] = {2.0f, -1.0f, 0.5f};
  CHECK(maxlogit_score(logits, 3) == -2.0);
  const float neg[2] = {-3.0f, -0.25f};
  CHECK(maxlogit_score(neg, 2) == 0.25);
}

TEST_CASE("weibull cdf basics") {
  WeibullFit w;
  w.shape = 2.0;
  w.scale = 1.5;
  CHECK(w.cdf(0.0) == 0.0);
  CHECK(w.cdf(-1.0) == 0.0);
  CHECK_THAT(w.cdf(1.5), Catch::Matchers::WithinAbs(1.0 - std::exp(-1.0), 1e-15));
  double prev = 0.0;
  for (double x = 0.1; x < 8.0; x += 0.1) {
    const double c = w.cdf(x);
    CHECK(c >= prev);
    prev = c;
  }
  CHECK(prev > 0.999);
}

TEST_CASE("weibull maximum likelihood recovers known parameters") {
  // Inverse-CDF sampling from shape 2, scale 1.
  Rng rng(2024);
  std::vector<double> x(500);
  for (double& v : x) v = std::pow(-std::log(1.0 - rng.uniform01()), 0.5);
  const WeibullFit fit = fit_weibull_mle(x.data(), x.size());
  CHECK(fit.shape > 0.8 * 2.0);
  CHECK(fit.shape < 1.2 * 2.0);
  CHECK(fit.scale > 0.8);
  CHECK(fit.scale < 1.2);

  SECTION("fit is equivariant under scaling of the sample") {
    std::vector<double> x3 = x;
    for (double& v : x3) v *= 3.0;
    const WeibullFit f3 = fit_weibull_mle(x3.data(), x3.size());
    CHECK_THAT(f3.shape, Catch::Matchers::WithinRel(fit.shape, 1e-9));
    CHECK_THAT(f3.scale, Catch::Matchers::WithinRel(3.0 * fit.scale, 1e-9));
  }
}

TEST_CASE("weibull fit rejects unusable samples") {
  const double one[1] = {1.0};
  CHECK_THROWS(fit_weibull_mle(one, 1));
  const double bad[3] = {1.0, 0.0, 2.0};
  CHECK_THROWS(fit_weibull_mle(bad, 3));
  const double same[4] = {2.0, 2.0, 2.0, 2.0};
  CHECK_THROWS_WITH(fit_weibull_mle(same, 4),
                    Catch::Matchers::ContainsSubstring("identical"));
}

namespace {

/// Three well-separated activation clusters in 3-d logit space.
std::vector<std::vector<double>> toy_activations(int per_class, double spread,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> acts(3);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < per_class; ++i)
      for (int j = 0; j < 3; ++j)
        acts[std::size_t(c)].push_back((j == c ? 5.0 : -1.0) + spread * rng.normal());
  return acts;
}

}  // namespace

TEST_CASE("openmax calibration produces a valid probability vector") {
  const auto acts = toy_activations(50, 0.5, 77);
  const OpenMaxModel m = fit_openmax(acts, 3, 20, 3.0);
  REQUIRE(m.n_classes == 3);
  for (int c = 0; c < 3; ++c) {
    CHECK_FALSE(m.degenerate[std::size_t(c)]);
    CHECK(m.tails[std::size_t(c)].shape > 0.0);
    CHECK(m.tails[std::size_t(c)].scale > 0.0);
    // Mean activation vector sits near the cluster center.
    for (int j = 0; j < 3; ++j) {
      const double want = j == c ? 5.0 : -1.0;
      CHECK_THAT(m.mav[std::size_t(c) * 3 + j], Catch::Matchers::WithinAbs(want, 0.5));
    }
  }
  const double probe[3] = {4.8, -1.1, -0.9};
  const OpenMaxScore s = openmax_score(m, probe);
  REQUIRE(s.probs.size() == 4);
  double total = 0.0;
  for (double p : s.probs) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    total += p;
  }
  CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-6));
  CHECK(s.unknown_prob == s.probs[3]);

  SECTION("an in-distribution probe keeps its class, a far probe goes unknown") {
    CHECK(s.argmax == 0);
    const double far[3] = {40.0, 35.0, 38.0};
    const OpenMaxScore sf = openmax_score(m, far);
    CHECK(sf.unknown_prob > s.unknown_prob);
    CHECK(sf.unknown_prob > 0.5);
  }
}

TEST_CASE("unknown probability grows with distance from the matched mean") {
  const auto acts = toy_activations(50, 0.5, 78);
  const OpenMaxModel m = fit_openmax(acts, 3, 20, 3.0);
  std::vector<double> probe(m.mav.begin(), m.mav.begin() + 3);
  double prev = -1.0;
  for (int step = 0; step <= 12; ++step) {
    // Walk class 0's activation upward: class 0 stays the top class while
    // the probe leaves its calibrated neighborhood.
    std::vector<double> a = probe;
    a[0] += double(step);
    const double u = openmax_score(m, a.data()).unknown_prob;
    CHECK(u >= prev);
    prev = u;
  }
  CHECK(prev > openmax_score(m, probe.data()).unknown_prob);
}

TEST_CASE("small classes reduce the tail instead of failing") {
  auto acts = toy_activations(50, 0.5, 79);
  acts[1].resize(std::size_t(7) * 3);  // class 1 has only 7 rows
  const OpenMaxModel m = fit_openmax(acts, 3, 20, 3.0);
  CHECK_FALSE(m.degenerate[1]);
  CHECK(m.tails[1].shape > 0.0);
  const double probe[3] = {-1.0, 5.0, -1.0};
  const OpenMaxScore s = openmax_score(m, probe);
  CHECK(s.probs.size() == 4);
}

TEST_CASE("degenerate classes never vote novel and reduce to plain softmax") {
  // Every class carries identical activations: no tail exists, so scoring
  // must collapse to a softmax over the raw activations plus a zero
  // unknown activation.
  std::vector<std::vector<double>> acts(3);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 3; ++j) acts[std::size_t(c)].push_back(j == c ? 1.0 : 0.0);
  const OpenMaxModel m = fit_openmax(acts, 3, 20, 3.0);
  for (int c = 0; c < 3; ++c) CHECK(m.degenerate[std::size_t(c)]);

  const double act[3] = {1.0, 2.0, 0.5};
  const OpenMaxScore s = openmax_score(m, act);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(0.5) + 1.0;
  CHECK_THAT(s.probs[0], Catch::Matchers::WithinAbs(std::exp(1.0) / z, 1e-12));
  CHECK_THAT(s.probs[1], Catch::Matchers::WithinAbs(std::exp(2.0) / z, 1e-12));
  CHECK_THAT(s.probs[2], Catch::Matchers::WithinAbs(std::exp(0.5) / z, 1e-12));
  CHECK_THAT(s.unknown_prob, Catch::Matchers::WithinAbs(1.0 / z, 1e-12));
}

TEST_CASE("fit_openmax validates its configuration") {
  const auto acts = toy_activations(10, 0.5, 80);
  CHECK_THROWS(fit_openmax(acts, 3, 1, 3.0));   // tail too small
  CHECK_THROWS(fit_openmax(acts, 3, 20, 0.5));  // alpha below 1
  CHECK_THROWS(fit_openmax(acts, 3, 20, 4.0));  // alpha above class count
  std::vector<std::vector<double>> ragged = acts;
  ragged[0].push_back(1.0);
  CHECK_THROWS(fit_openmax(ragged, 3, 20, 3.0));
}

namespace {

nn::ModelSpec tiny_spec() {
  nn::ModelSpec s;
  s.arch = nn::Arch::cnn_lstm;
  s.in_w = 32;
  s.ch1 = 2;
  s.ch2 = 2;
  s.ch3 = 3;
  s.ch4 = 3;
  s.kw = 9;
  s.dropout_p = 0.1;
  s.lstm_hidden = 4;
  s.n_classes = 3;
  s.init_seed = 5;
  return s;
}

}  // namespace

TEST_CASE("logit collection keeps exactly the correctly classified slices") {
  nn::ModelSpec spec = tiny_spec();
  nn::Model<float> model(spec, 32, nullptr);
  model.init_params();
  const std::size_t item = 64;
  std::vector<float> x(std::size_t(60) * item);
  std::vector<int> y(60);
  Rng rng(66);
  const double periods[3] = {8.0, 16.0, 32.0};
  auto fill = [&](float* row, int cls, double jitter) {
    for (std::size_t j = 0; j < item; ++j)
      row[j] = float(std::sin(2.0 * M_PI * double(j % 32) / periods[cls]) + jitter * rng.normal());
  };
  for (int i = 0; i < 60; ++i) {
    y[std::size_t(i)] = i % 3;
    fill(x.data() + std::size_t(i) * item, i % 3, 0.05);
  }
  nn::TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch = 8;
  cfg.adam.lr = 5e-3;
  cfg.seed = 7;
  nn::train_model(model, x.data(), y.data(), 60, cfg);

  // Noisy eval set with some misclassifications.
  std::vector<float> xe(std::size_t(45) * item);
  std::vector<int> ye(45);
  for (int i = 0; i < 45; ++i) {
    ye[std::size_t(i)] = i % 3;
    fill(xe.data() + std::size_t(i) * item, i % 3, 0.7);
  }
  std::vector<int> want(3, 0);
  for (int i = 0; i < 45; ++i) {
    model.forward(xe.data() + std::size_t(i) * item, 1, false);
    if (nn::argmax_row(model.logits(), 3) == ye[std::size_t(i)]) ++want[std::size_t(i % 3)];
  }
  const auto acts = collect_logits(model, xe.data(), ye.data(), 45, 3, true);
  for (int c = 0; c < 3; ++c)
    CHECK(acts[std::size_t(c)].size() == std::size_t(want[std::size_t(c)]) * 3);

  SECTION("empty classes are fatal when not allowed") {
    // Labels no slice can match: give every slice the label after its
    // prediction, so nothing is ever correct.
    std::vector<int> yw(45);
    for (int i = 0; i < 45; ++i) {
      model.forward(xe.data() + std::size_t(i) * item, 1, false);
      yw[std::size_t(i)] = (nn::argmax_row(model.logits(), 3) + 1) % 3;
    }
    CHECK_THROWS_WITH(collect_logits(model, xe.data(), yw.data(), 45, 3, false),
                      Catch::Matchers::ContainsSubstring("zero correctly classified"));
  }
}
