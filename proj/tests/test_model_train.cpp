// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hinova/nn/gradcheck.hpp"
#include "hinova/nn/model.hpp"
#include "hinova/nn/train.hpp"
#include "hinova/rng.hpp"

using namespace hinova;

namespace {

nn::ModelSpec reduced_spec(nn::Arch arch) {
  nn::ModelSpec s;
  s.arch = arch;
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

/// Two linearly separable waveform classes with mild jitter.
void make_toy_set(int n, int in_h, int in_w, std::uint64_t seed, std::vector<float>& x,
                  std::vector<int>& y) {
  Rng rng(seed);
  const std::size_t item = std::size_t(in_h) * in_w;
  x.resize(std::size_t(n) * item);
  y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    y[std::size_t(i)] = cls;
    float* row = x.data() + std::size_t(i) * item;
    for (int h = 0; h < in_h; ++h)
      for (int w = 0; w < in_w; ++w) {
        const double base = cls == 0 ? std::sin(2.0 * M_PI * w / 8.0)   // fast cycle
                                     : std::sin(2.0 * M_PI * w / 32.0); // slow cycle
        row[std::size_t(h) * in_w + w] = float(base + 0.05 * rng.normal());
      }
  }
}

}  // namespace

TEST_CASE("full model analytic gradients match finite differences") {
  // Double precision end to end; the FFT convolution, batch norm, dropout,
  // pooling, recurrence and classifier all sit inside the checked path.
  nn::ModelSpec spec = reduced_spec(nn::Arch::cnn_lstm);
  ThreadPool* no_pool = nullptr;
  nn::Model<double> m(spec, 2, no_pool);
  m.init_params();
  Rng rng(17);
  std::vector<double> x(std::size_t(2) * spec.in_h * spec.in_w);
  for (auto& v : x) v = rng.normal();
  const std::vector<int> labels = {0, 2};
  const nn::GradCheckReport rep = nn::grad_check(m, x.data(), labels.data(), 2, 0, 1e-5);
  INFO("worst " << rep.worst_param << " rel err " << rep.max_rel_err);
  REQUIRE(rep.n_checked > 500);
  REQUIRE(rep.max_rel_err < 1e-2);
  // The classifier head is an exact linear map; its gradients are tight.
  REQUIRE(rep.tensor_err("fc.") < 1e-5);
}

TEST_CASE("convolution-only model gradients match finite differences") {
  nn::ModelSpec spec = reduced_spec(nn::Arch::cnn_only);
  ThreadPool* no_pool = nullptr;
  nn::Model<double> m(spec, 2, no_pool);
  m.init_params();
  Rng rng(19);
  std::vector<double> x(std::size_t(2) * spec.in_h * spec.in_w);
  for (auto& v : x) v = rng.normal();
  const std::vector<int> labels = {1, 0};
  const nn::GradCheckReport rep = nn::grad_check(m, x.data(), labels.data(), 2, 0, 1e-5);
  INFO("worst " << rep.worst_param << " rel err " << rep.max_rel_err);
  REQUIRE(rep.max_rel_err < 1e-2);
  REQUIRE(rep.tensor_err("fc.") < 1e-5);
}

TEST_CASE("training separates a toy two-class problem") {
  nn::ModelSpec spec = reduced_spec(nn::Arch::cnn_lstm);
  spec.n_classes = 2;
  ThreadPool* no_pool = nullptr;
  nn::Model<float> m(spec, 8, no_pool);
  m.init_params();
  std::vector<float> x;
  std::vector<int> y;
  make_toy_set(40, spec.in_h, spec.in_w, 23, x, y);
  nn::TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch = 8;
  cfg.adam.lr = 5e-3;
  cfg.seed = 9;
  const auto log = nn::train_model(m, x.data(), y.data(), 40, cfg);
  REQUIRE(log.size() == 30);
  REQUIRE(log.back().loss < log.front().loss);
  // Accuracy measured in eval mode: dropout off, batch-norm running stats.
  int correct = 0;
  const std::size_t item = std::size_t(spec.in_h) * spec.in_w;
  for (int i = 0; i < 40; ++i) {
    const float* lp = m.forward(x.data() + std::size_t(i) * item, 1, false);
    correct += (nn::argmax_row(lp, 2) == y[std::size_t(i)]);
  }
  REQUIRE(double(correct) / 40.0 >= 0.99);
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  nn::ModelSpec spec = reduced_spec(nn::Arch::cnn_lstm);
  spec.n_classes = 2;
  std::vector<float> x;
  std::vector<int> y;
  make_toy_set(24, spec.in_h, spec.in_w, 31, x, y);
  nn::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch = 6;
  cfg.seed = 77;

  auto run = [&](ThreadPool* pool) {
    nn::Model<float> m(spec, 6, pool);
    m.init_params();
    nn::train_model(m, x.data(), y.data(), 24, cfg);
    std::vector<float> params;
    m.visit_params([&](const std::string&, float* p, float*, std::size_t c) {
      params.insert(params.end(), p, p + c);
    });
    return params;
  };
  const auto a = run(nullptr);
  const auto b = run(nullptr);
  REQUIRE(a == b);
  // The thread pool must not change results either.
  ThreadPool pool(3);
  const auto c = run(&pool);
  REQUIRE(a == c);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  nn::ModelSpec spec = reduced_spec(nn::Arch::cnn_lstm);
  spec.n_classes = 2;
  ThreadPool* no_pool = nullptr;
  nn::Model<float> m(spec, 4, no_pool);
  m.init_params();
  std::vector<float> before;
  m.visit_params([&](const std::string&, float* p, float*, std::size_t c) {
    before.insert(before.end(), p, p + c);
  });
  std::vector<float> x;
  std::vector<int> y;
  make_toy_set(8, spec.in_h, spec.in_w, 41, x, y);
  nn::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch = 4;
  cfg.adam.lr = 0.0;
  nn::train_model(m, x.data(), y.data(), 8, cfg);
  std::vector<float> after;
  m.visit_params([&](const std::string&, float* p, float*, std::size_t c) {
    after.insert(after.end(), p, p + c);
  });
  REQUIRE(before == after);
}

TEST_CASE("training rejects invalid labels and non-finite inputs") {
  nn::ModelSpec spec = reduced_spec(nn::Arch::cnn_lstm);
  spec.n_classes = 2;
  ThreadPool* no_pool = nullptr;
  nn::Model<float> m(spec, 4, no_pool);
  m.init_params();
  std::vector<float> x;
  std::vector<int> y;
  make_toy_set(8, spec.in_h, spec.in_w, 43, x, y);
  nn::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 4;

  SECTION("label out of range") {
    y[3] = 2;
    REQUIRE_THROWS_AS(nn::train_model(m, x.data(), y.data(), 8, cfg), Error);
  }
  SECTION("NaN feature produces a non-finite loss error") {
    x[100] = std::numeric_limits<float>::quiet_NaN();
    REQUIRE_THROWS_WITH(nn::train_model(m, x.data(), y.data(), 8, cfg),
                        Catch::Matchers::ContainsSubstring("non-finite"));
  }
}
