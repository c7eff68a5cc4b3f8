// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/nn/layers.hpp"
#include "hinova/nn/loss.hpp"
#include "hinova/nn/lstm.hpp"
#include "hinova/parallel.hpp"
#include "hinova/rng.hpp"

namespace hinova::nn {

enum class Arch { cnn_lstm, cnn_only };

inline std::string arch_name(Arch a) { return a == Arch::cnn_lstm ? "cnn-lstm" : "cnn"; }

inline Arch arch_from_name(const std::string& s) {
  if (s == "cnn-lstm") return Arch::cnn_lstm;
  if (s == "cnn") return Arch::cnn_only;
  fail("unknown architecture '" + s + "'");
}

/// Architecture description. The default values are the production network:
/// four 2x256 same-padded conv blocks (16,16,32,32 channels) with batch norm,
/// ReLU and 10% dropout after blocks 1 and 3, a 2x2 max pool, then either a
/// 64-unit LSTM over the pooled width (features = channels, time = width) or
/// a direct flatten, and a linear classifier read out through log-softmax.
struct ModelSpec {
  Arch arch = Arch::cnn_lstm;
  int in_h = 2;
  int in_w = 2048;
  int ch1 = 16, ch2 = 16, ch3 = 32, ch4 = 32;
  int kh = 2, kw = 256;
  double dropout_p = 0.1;
  int lstm_hidden = 64;
  int n_classes = 0;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  std::uint64_t init_seed = 1;

  void validate() const {
    require(in_h == 2, "ModelSpec: input height must be 2");
    require(in_w >= 2 && in_w % 2 == 0, "ModelSpec: input width must be even and >= 2");
    require(ch1 >= 1 && ch2 >= 1 && ch3 >= 1 && ch4 >= 1, "ModelSpec: channel counts must be >= 1");
    require(kh >= 1 && kh <= 2 && kw >= 1, "ModelSpec: bad kernel shape");
    require(dropout_p >= 0.0 && dropout_p < 1.0, "ModelSpec: dropout must be in [0,1)");
    require(lstm_hidden >= 1, "ModelSpec: hidden size must be >= 1");
    require(n_classes >= 2, "ModelSpec: need at least two classes");
  }
};

/// The full network. Activation buffers are owned by the model and sized for
/// max_batch items; forward/backward must use matching batch sizes. One
/// instance is not thread safe, but all internal parallelism keeps results
/// independent of the pool size.
template <class T>
class Model {
 public:
  Model(const ModelSpec& spec, int max_batch, ThreadPool* pool)
      : spec_(spec),
        pool_(pool),
        max_b_(max_batch),
        conv1_("conv1", 1, spec.ch1, spec.kh, spec.kw, spec.in_h, spec.in_w),
        bn1_("bn1", spec.ch1, spec.bn_momentum, spec.bn_eps),
        conv2_("conv2", spec.ch1, spec.ch2, spec.kh, spec.kw, spec.in_h, spec.in_w),
        bn2_("bn2", spec.ch2, spec.bn_momentum, spec.bn_eps),
        conv3_("conv3", spec.ch2, spec.ch3, spec.kh, spec.kw, spec.in_h, spec.in_w),
        bn3_("bn3", spec.ch3, spec.bn_momentum, spec.bn_eps),
        conv4_("conv4", spec.ch3, spec.ch4, spec.kh, spec.kw, spec.in_h, spec.in_w),
        bn4_("bn4", spec.ch4, spec.bn_momentum, spec.bn_eps),
        pool_layer_(spec.ch4, spec.in_h, spec.in_w),
        lstm_("lstm", spec.ch4, spec.lstm_hidden),
        fc_("fc", spec.arch == Arch::cnn_lstm ? spec.lstm_hidden : spec.ch4 * (spec.in_w / 2),
            spec.n_classes) {
    spec.validate();
    require(max_batch >= 1, "Model: max_batch must be >= 1");
    drop1_.p = spec.dropout_p;
    drop1_.layer_salt = 0x11;
    drop2_.p = 0.0;
    drop2_.layer_salt = 0x22;
    drop3_.p = spec.dropout_p;
    drop3_.layer_salt = 0x33;
    drop4_.p = 0.0;
    drop4_.layer_salt = 0x44;
    const std::size_t hw = std::size_t(spec.in_h) * spec.in_w;
    const std::size_t mb = std::size_t(max_b_);
    a1_.resize(mb * spec.ch1 * hw);
    o1_.resize(mb * spec.ch1 * hw);
    a2_.resize(mb * spec.ch2 * hw);
    o2_.resize(mb * spec.ch2 * hw);
    a3_.resize(mb * spec.ch3 * hw);
    o3_.resize(mb * spec.ch3 * hw);
    a4_.resize(mb * spec.ch4 * hw);
    o4_.resize(mb * spec.ch4 * hw);
    pooled_.resize(mb * spec.ch4 * (hw / 4));  // [b][ch4][w/2]
    const std::size_t gmax =
        mb * std::size_t(std::max({spec.ch1, spec.ch2, spec.ch3, spec.ch4})) * hw;
    ga_.resize(gmax);
    gb_.resize(gmax);
    logits_.resize(mb * spec.n_classes);
    logp_.resize(mb * spec.n_classes);
    dlogits_.resize(mb * spec.n_classes);
    if (spec.arch == Arch::cnn_lstm) {
      const int t_steps = spec.in_w / 2;
      xseq_.resize(std::size_t(t_steps) * mb * spec.ch4);
      dxseq_.resize(xseq_.size());
      dh_last_.resize(mb * spec.lstm_hidden);
    }
    dpooled_.resize(pooled_.size());
    in_mu_.assign(hw, T(0));
    in_scale_.assign(hw, T(1));
    xs_.resize(mb * hw);
  }

  const ModelSpec& spec() const { return spec_; }
  int t_steps() const { return spec_.in_w / 2; }
  int max_batch() const { return max_b_; }

  /// Deterministic init: layers draw from one stream in declaration order.
  void init_params() {
    Rng rng(mix_seed(spec_.init_seed, 0x494e4954ull));
    conv1_.init(rng);
    bn1_.init(rng);
    conv2_.init(rng);
    bn2_.init(rng);
    conv3_.init(rng);
    bn3_.init(rng);
    conv4_.init(rng);
    bn4_.init(rng);
    if (spec_.arch == Arch::cnn_lstm) lstm_.init(rng);
    fc_.init(rng);
  }

  void zero_grads() {
    conv1_.zero_grads();
    bn1_.zero_grads();
    conv2_.zero_grads();
    bn2_.zero_grads();
    conv3_.zero_grads();
    bn3_.zero_grads();
    conv4_.zero_grads();
    bn4_.zero_grads();
    if (spec_.arch == Arch::cnn_lstm) lstm_.zero_grads();
    fc_.zero_grads();
  }

  /// Per-position input standardization fitted on the training set. A
  /// position whose spread is below the floor carries no information; its
  /// scale is zeroed so constant features vanish instead of amplifying
  /// rounding noise. Identity (mu 0, scale 1) until fitted or loaded.
  void fit_input_scaler(const T* x, int n) {
    require(n >= 2, "fit_input_scaler: need at least two items");
    const std::size_t hw = std::size_t(spec_.in_h) * spec_.in_w;
    for (std::size_t p = 0; p < hw; ++p) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += double(x[std::size_t(i) * hw + p]);
      const double mu = sum / n;
      double sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = double(x[std::size_t(i) * hw + p]) - mu;
        sq += d * d;
      }
      const double sd = std::sqrt(sq / n);
      in_mu_[p] = T(mu);
      in_scale_[p] = sd > 1e-6 ? T(1.0 / sd) : T(0);
    }
  }

  /// x: [b][1][in_h][in_w]. Returns log-probabilities [b][n_classes].
  /// Training mode keeps every intermediate needed by backward().
  const T* forward(const T* x, int b, bool train) {
    require(b >= 1 && b <= max_b_, "Model::forward: batch out of range");
    b_ = b;
    train_ = train;
    const int hw = spec_.in_h * spec_.in_w;
    const std::uint64_t seed = spec_.init_seed;
    for (int i = 0; i < b; ++i) {
      const T* src = x + std::size_t(i) * hw;
      T* dst = xs_.data() + std::size_t(i) * hw;
      for (int p = 0; p < hw; ++p) dst[p] = (src[p] - in_mu_[std::size_t(p)]) * in_scale_[std::size_t(p)];
    }
    x_in_ = xs_.data();
    conv1_.forward(xs_.data(), a1_.data(), b, train, pool_);
    bn1_.forward(a1_.data(), o1_.data(), b, hw, train, pool_);
    drop1_.forward(o1_.data(), std::size_t(b) * spec_.ch1 * hw, train, seed, dropout_step_);
    conv2_.forward(o1_.data(), a2_.data(), b, train, pool_);
    bn2_.forward(a2_.data(), o2_.data(), b, hw, train, pool_);
    drop2_.forward(o2_.data(), std::size_t(b) * spec_.ch2 * hw, train, seed, dropout_step_);
    conv3_.forward(o2_.data(), a3_.data(), b, train, pool_);
    bn3_.forward(a3_.data(), o3_.data(), b, hw, train, pool_);
    drop3_.forward(o3_.data(), std::size_t(b) * spec_.ch3 * hw, train, seed, dropout_step_);
    conv4_.forward(o3_.data(), a4_.data(), b, train, pool_);
    bn4_.forward(a4_.data(), o4_.data(), b, hw, train, pool_);
    drop4_.forward(o4_.data(), std::size_t(b) * spec_.ch4 * hw, train, seed, dropout_step_);
    pool_layer_.forward(o4_.data(), pooled_.data(), b);
    if (spec_.arch == Arch::cnn_lstm) {
      // Pooled plane [b][ch4][w/2] becomes a sequence: time = pooled width,
      // features = channels. The width is traversed from the far end toward
      // column 0, so the final hidden state sits over the short-lag region
      // where autocorrelation features concentrate.
      const int t_n = t_steps();
      const int c4 = spec_.ch4;
      for (int t = 0; t < t_n; ++t)
        for (int i = 0; i < b; ++i) {
          const T* src = pooled_.data() + (std::size_t(i) * c4) * t_n + (t_n - 1 - t);
          T* dst = xseq_.data() + (std::size_t(t) * b + i) * c4;
          for (int c = 0; c < c4; ++c) dst[c] = src[std::size_t(c) * t_n];
        }
      lstm_.forward(xseq_.data(), t_n, b, pool_);
      fc_.forward(lstm_.hidden_step(t_n - 1), logits_.data(), b, pool_);
    } else {
      fc_.forward(pooled_.data(), logits_.data(), b, pool_);
    }
    log_softmax_rows(logits_.data(), logp_.data(), b, spec_.n_classes);
    return logp_.data();
  }

  /// Raw classifier outputs before log-softmax, [b][n_classes].
  const T* logits() const { return logits_.data(); }
  const T* log_probs() const { return logp_.data(); }

  /// Hidden state h_t of the last forward batch, [b][lstm_hidden].
  const T* hidden_step(int t) const {
    require(spec_.arch == Arch::cnn_lstm, "Model::hidden_step: no recurrent stage");
    return lstm_.hidden_step(t);
  }

  /// dlogp: gradient with respect to the returned log-probabilities.
  /// Accumulates parameter gradients; call zero_grads() between steps.
  void backward(const T* dlogp, int b) {
    require(train_ && b == b_, "Model::backward: needs a matching training forward");
    const int k = spec_.n_classes;
    const int hw = spec_.in_h * spec_.in_w;
    // Through log-softmax: dlogits = dlogp - softmax * rowsum(dlogp).
    for (int i = 0; i < b; ++i) {
      double srow = 0.0;
      const T* dl = dlogp + std::size_t(i) * k;
      for (int j = 0; j < k; ++j) srow += double(dl[j]);
      const T* lp = logp_.data() + std::size_t(i) * k;
      T* dz = dlogits_.data() + std::size_t(i) * k;
      for (int j = 0; j < k; ++j) dz[j] = T(double(dl[j]) - std::exp(double(lp[j])) * srow);
    }
    if (spec_.arch == Arch::cnn_lstm) {
      const int t_n = t_steps();
      const int c4 = spec_.ch4;
      std::fill(dh_last_.begin(), dh_last_.end(), T(0));
      fc_.backward(lstm_.hidden_step(t_n - 1), dlogits_.data(), dh_last_.data(), b, pool_);
      lstm_.backward(xseq_.data(), dh_last_.data(), dxseq_.data(), pool_);
      for (int t = 0; t < t_n; ++t)
        for (int i = 0; i < b; ++i) {
          const T* src = dxseq_.data() + (std::size_t(t) * b + i) * c4;
          T* dst = dpooled_.data() + (std::size_t(i) * c4) * t_n + (t_n - 1 - t);
          for (int c = 0; c < c4; ++c) dst[std::size_t(c) * t_n] = src[c];
        }
    } else {
      fc_.backward(pooled_.data(), dlogits_.data(), dpooled_.data(), b, pool_);
    }
    pool_layer_.backward(dpooled_.data(), ga_.data(), b);
    drop4_.backward(ga_.data(), o4_.data(), std::size_t(b) * spec_.ch4 * hw, train_);
    bn4_.backward(a4_.data(), ga_.data(), gb_.data(), b, hw, pool_);
    conv4_.backward(gb_.data(), ga_.data(), b, pool_);
    drop3_.backward(ga_.data(), o3_.data(), std::size_t(b) * spec_.ch3 * hw, train_);
    bn3_.backward(a3_.data(), ga_.data(), gb_.data(), b, hw, pool_);
    conv3_.backward(gb_.data(), ga_.data(), b, pool_);
    drop2_.backward(ga_.data(), o2_.data(), std::size_t(b) * spec_.ch2 * hw, train_);
    bn2_.backward(a2_.data(), ga_.data(), gb_.data(), b, hw, pool_);
    conv2_.backward(gb_.data(), ga_.data(), b, pool_);
    drop1_.backward(ga_.data(), o1_.data(), std::size_t(b) * spec_.ch1 * hw, train_);
    bn1_.backward(a1_.data(), ga_.data(), gb_.data(), b, hw, pool_);
    conv1_.backward(gb_.data(), nullptr, b, pool_);
  }

  void advance_dropout() { ++dropout_step_; }

  template <class F>
  void visit_params(F&& fn) {
    conv1_.visit_params(fn);
    bn1_.visit_params(fn);
    conv2_.visit_params(fn);
    bn2_.visit_params(fn);
    conv3_.visit_params(fn);
    bn3_.visit_params(fn);
    conv4_.visit_params(fn);
    bn4_.visit_params(fn);
    if (spec_.arch == Arch::cnn_lstm) lstm_.visit_params(fn);
    fc_.visit_params(fn);
  }

  template <class F>
  void visit_buffers(F&& fn) {
    bn1_.visit_buffers(fn);
    bn2_.visit_buffers(fn);
    bn3_.visit_buffers(fn);
    bn4_.visit_buffers(fn);
    fn(std::string("input.mu"), in_mu_.data(), in_mu_.size());
    fn(std::string("input.scale"), in_scale_.data(), in_scale_.size());
  }

  std::size_t param_count() {
    std::size_t n = 0;
    visit_params([&](const std::string&, T*, T*, std::size_t c) { n += c; });
    return n;
  }

  std::int64_t bn_batches(int which) const {
    switch (which) {
      case 0: return bn1_.batches_tracked;
      case 1: return bn2_.batches_tracked;
      case 2: return bn3_.batches_tracked;
      default: return bn4_.batches_tracked;
    }
  }
  void set_bn_batches(int which, std::int64_t v) {
    switch (which) {
      case 0: bn1_.batches_tracked = v; break;
      case 1: bn2_.batches_tracked = v; break;
      case 2: bn3_.batches_tracked = v; break;
      default: bn4_.batches_tracked = v; break;
    }
  }

 private:
  ModelSpec spec_;
  ThreadPool* pool_;
  int max_b_;
  int b_ = 0;
  bool train_ = false;
  std::uint64_t dropout_step_ = 0;
  const T* x_in_ = nullptr;

  Conv2dSame<T> conv1_;
  BatchNorm2d<T> bn1_;
  Conv2dSame<T> conv2_;
  BatchNorm2d<T> bn2_;
  Conv2dSame<T> conv3_;
  BatchNorm2d<T> bn3_;
  Conv2dSame<T> conv4_;
  BatchNorm2d<T> bn4_;
  ReluDropout<T> drop1_, drop2_, drop3_, drop4_;
  MaxPool2x2<T> pool_layer_;
  LstmLayer<T> lstm_;
  Linear<T> fc_;

  std::vector<T> a1_, o1_, a2_, o2_, a3_, o3_, a4_, o4_;
  std::vector<T> pooled_, dpooled_;
  std::vector<T> xseq_, dxseq_, dh_last_;
  std::vector<T> ga_, gb_;
  std::vector<T> logits_, logp_, dlogits_;
  std::vector<T> in_mu_, in_scale_, xs_;
};

}  // namespace hinova::nn
