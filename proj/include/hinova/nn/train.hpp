// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/nn/adam.hpp"
#include "hinova/nn/loss.hpp"
#include "hinova/nn/model.hpp"
#include "hinova/rng.hpp"

namespace hinova::nn {

struct TrainConfig {
  int epochs = 3;
  int batch = 32;
  AdamConfig adam;
  std::uint64_t seed = 1;
  bool verbose = false;
};

struct EpochStat {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Minibatch training with per-epoch reshuffling. feats: [n][1][in_h][in_w],
/// labels in [0, n_classes). Reported accuracy is the running training-mode
/// accuracy (dropout active). Throws on a non-finite loss. Deterministic for
/// a fixed seed, independent of the thread pool size.
template <class T>
std::vector<EpochStat> train_model(Model<T>& model, const T* feats, const int* labels, int n,
                                   const TrainConfig& cfg) {
  require(n >= 1, "train: empty training set");
  require(cfg.epochs >= 1 && cfg.batch >= 1, "train: bad epochs/batch");
  const int k = model.spec().n_classes;
  for (int i = 0; i < n; ++i)
    require(labels[i] >= 0 && labels[i] < k, "train: label out of range");
  const std::size_t item = std::size_t(model.spec().in_h) * model.spec().in_w;
  // Reject poisoned inputs here; ReLU would silently flush NaN activations
  // to zero further down and the run would "succeed" on garbage.
  for (std::size_t i = 0; i < std::size_t(n) * item; ++i)
    if (!std::isfinite(double(feats[i]))) fail("train: non-finite feature value in item " +
                                               std::to_string(i / item));
  const int bmax = std::min(cfg.batch, model.max_batch());
  // Standardize inputs per position from the training set; the statistics
  // travel with the model so inference sees the same transform.
  if (n >= 2) model.fit_input_scaler(feats, n);
  Adam<T> adam(model);
  std::vector<T> xb(std::size_t(bmax) * item);
  std::vector<T> dlogp(std::size_t(bmax) * k);
  std::vector<int> yb(static_cast<std::size_t>(bmax));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[std::size_t(i)] = i;
  std::vector<EpochStat> log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, 0x45504f43ull, std::uint64_t(epoch)));
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::int64_t correct = 0;
    int step = 0;
    for (int start = 0; start < n; start += bmax, ++step) {
      const int b = std::min(bmax, n - start);
      for (int i = 0; i < b; ++i) {
        const int src = order[std::size_t(start + i)];
        std::copy(feats + std::size_t(src) * item, feats + std::size_t(src + 1) * item,
                  xb.data() + std::size_t(i) * item);
        yb[std::size_t(i)] = labels[src];
      }
      model.zero_grads();
      const T* logp = model.forward(xb.data(), b, true);
      const double loss = nll_loss(logp, yb.data(), b, k);
      if (!std::isfinite(loss))
        fail("train: non-finite loss at epoch " + std::to_string(epoch) + " step " +
             std::to_string(step));
      loss_sum += loss * b;
      for (int i = 0; i < b; ++i)
        correct += (argmax_row(logp + std::size_t(i) * k, k) == yb[std::size_t(i)]);
      nll_backward(dlogp.data(), yb.data(), b, k);
      model.backward(dlogp.data(), b);
      adam.step(model, cfg.adam);
      model.advance_dropout();
    }
    EpochStat st;
    st.epoch = epoch;
    st.loss = loss_sum / double(n);
    st.accuracy = double(correct) / double(n);
    log.push_back(st);
    if (cfg.verbose)
      std::fprintf(stderr, "epoch %d loss %.4f acc %.4f\n", epoch, st.loss, st.accuracy);
  }
  return log;
}

}  // namespace hinova::nn
