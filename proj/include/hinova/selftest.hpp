// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <vector>

#include "hinova/eval.hpp"
#include "hinova/fft.hpp"
#include "hinova/kendall.hpp"
#include "hinova/nn/gradcheck.hpp"
#include "hinova/nn/model.hpp"
#include "hinova/reference.hpp"
#include "hinova/rng.hpp"

namespace hinova {

/// Fast counterparts checked against their brute-force oracles, runnable
/// from the installed binary without the test suite. Returns true when every
/// suite passes; prints one line per suite either way.
inline bool run_selftest() {
  bool ok = true;
  const auto report = [&](const char* name, bool pass, const std::string& detail) {
    std::printf("selftest %-16s %s  %s\n", name, pass ? "ok " : "FAIL", detail.c_str());
    ok = ok && pass;
  };

  {
    // FFT autocorrelation vs the O(n^2) definition.
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 512;
      std::vector<float> x(static_cast<std::size_t>(n));
      for (auto& v : x) v = float(rng.normal());
      const std::vector<double> fast = autocorrelate(x.data(), n, 64);
      const std::vector<double> slow = reference::autocorr_direct(x.data(), n, 64);
      for (int l = 0; l < 64; ++l) {
        const double denom = std::max(std::abs(slow[std::size_t(l)]), 1e-12);
        worst = std::max(worst, std::abs(fast[std::size_t(l)] - slow[std::size_t(l)]) / denom);
      }
    }
    report("autocorr", worst < 1e-4, "max rel err " + fmt_double(worst));
  }

  {
    // Rank correlation: exact agreement with the O(n^2) count, plus the
    // worked tie example.
    Rng rng(102);
    bool pass = true;
    const std::vector<double> hx = {1, 2, 2, 3}, hy = {1, 3, 2, 3};
    const auto hand = kendall_tau(hx, hy);
    pass = pass && hand.has_value() && std::abs(*hand - 0.8) < 1e-15;
    for (int trial = 0; trial < 300 && pass; ++trial) {
      const int n = 2 + int(rng.below(120));
      std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        x[std::size_t(i)] = double(rng.below(8));
        y[std::size_t(i)] = double(rng.below(8));
      }
      const auto fast = kendall_tau(x, y);
      const auto brute = reference::kendall_tau_brute(x.data(), y.data(), n);
      pass = fast.has_value() == brute.has_value() && (!fast || *fast == *brute);
    }
    report("kendall", pass, pass ? "fast == brute on tie-bearing vectors" : "mismatch");
  }

  {
    // Analytic gradients vs central differences on a reduced model.
    nn::ModelSpec spec;
    spec.in_w = 32;
    spec.ch1 = 2;
    spec.ch2 = 2;
    spec.ch3 = 3;
    spec.ch4 = 3;
    spec.kw = 9;
    spec.lstm_hidden = 4;
    spec.n_classes = 3;
    spec.init_seed = 11;
    nn::Model<double> model(spec, 2, nullptr);
    model.init_params();
    Rng rng(103);
    std::vector<double> x(std::size_t(2) * spec.in_h * spec.in_w);
    for (auto& v : x) v = rng.normal();
    const std::vector<int> labels = {0, 2};
    const nn::GradCheckReport rep = nn::grad_check(model, x.data(), labels.data(), 2, 0, 1e-5);
    report("gradients", rep.max_rel_err < 1e-2,
           "max rel err " + fmt_double(rep.max_rel_err) + " over " +
               std::to_string(rep.n_checked) + " params");
  }

  {
    // Average precision vs exhaustive tie-block enumeration.
    Rng rng(104);
    bool pass = true;
    const double hand = average_precision({0.9, 0.8, 0.1}, {0, 1, 1});
    pass = std::abs(hand - 7.0 / 12.0) < 1e-6;
    for (int trial = 0; trial < 500 && pass; ++trial) {
      const int n = 2 + int(rng.below(15));
      std::vector<double> scores(static_cast<std::size_t>(n));
      std::vector<int> labels(static_cast<std::size_t>(n));
      int n_pos = 0;
      for (int i = 0; i < n; ++i) {
        scores[std::size_t(i)] = double(rng.below(3));
        labels[std::size_t(i)] = int(rng.below(2));
        n_pos += labels[std::size_t(i)];
      }
      if (n_pos == 0) labels[0] = 1;
      if (n_pos == n) labels[0] = 0;
      const auto brute = reference::average_precision_brute(scores, labels);
      pass = brute.has_value() && std::abs(average_precision(scores, labels) - *brute) < 1e-12;
    }
    report("auprc", pass, pass ? "fast == brute on tie-heavy instances" : "mismatch");
  }

  return ok;
}

}  // namespace hinova
