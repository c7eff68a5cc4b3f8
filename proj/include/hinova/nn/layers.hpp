// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/fft.hpp"
#include "hinova/nn/linalg.hpp"
#include "hinova/parallel.hpp"
#include "hinova/rng.hpp"

namespace hinova::nn {

/// Parameter visitor signature: fn(name, values, grads, count).
/// Buffer visitor signature: fn(name, values, count).

/// 2D convolution (cross-correlation) with stride 1 and "same" zero padding,
/// computed per row through a zero-padded real FFT of length nfft >= W+KW-1.
/// Padding splits as top/left (K-1)/2 and bottom/right K/2, so even kernels
/// pad one more at the bottom/right and the output keeps the input's H x W.
///
/// Layouts: in [B][C_in][H][W], weight [C_out][C_in][KH][KW], out
/// [B][C_out][H][W]. Gradients accumulate into wgrad/bgrad until zero_grads().
template <class T>
class Conv2dSame {
 public:
  Conv2dSame(std::string name, int c_in, int c_out, int kh, int kw, int h, int w)
      : name_(std::move(name)),
        c_in_(c_in),
        c_out_(c_out),
        kh_(kh),
        kw_(kw),
        h_(h),
        w_(w),
        nfft_(next_pow2(w + kw - 1)),
        nf_(nfft_ / 2 + 1),
        pl_((kw - 1) / 2),
        pt_((kh - 1) / 2) {
    require(c_in >= 1 && c_out >= 1 && kh >= 1 && kw >= 1 && h >= 1 && w >= 1,
            name_ + ": bad shape");
    require(kh <= h, name_ + ": kernel taller than input");
    weight.assign(std::size_t(c_out) * c_in * kh * kw, T(0));
    bias.assign(std::size_t(c_out), T(0));
    wgrad.assign(weight.size(), T(0));
    bgrad.assign(bias.size(), T(0));
    khat_re_.resize(std::size_t(c_out) * c_in * kh * nf_);
    khat_im_.resize(khat_re_.size());
  }

  int out_height() const { return h_; }
  int out_width() const { return w_; }

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(double(c_in_) * kh_ * kw_);
    for (auto& v : weight) v = T(rng.uniform(-bound, bound));
    for (auto& v : bias) v = T(0);
  }

  void zero_grads() {
    std::fill(wgrad.begin(), wgrad.end(), T(0));
    std::fill(bgrad.begin(), bgrad.end(), T(0));
  }

  template <class F>
  void visit_params(F&& fn) {
    fn(name_ + ".weight", weight.data(), wgrad.data(), weight.size());
    fn(name_ + ".bias", bias.data(), bgrad.data(), bias.size());
  }

  /// keep_spectra must be true when a backward pass will follow.
  void forward(const T* in, T* out, int b, bool keep_spectra, ThreadPool* pool) {
    ensure_scratch(pool);
    build_kernel_spectra(pool);
    const std::size_t row = std::size_t(nf_);
    if (keep_spectra) {
      xhat_re_.resize(std::size_t(b) * c_in_ * h_ * row);
      xhat_im_.resize(xhat_re_.size());
      xhat_items_ = b;
    }
    run_items(pool, b, [&](int chunk, std::size_t item) {
      Scratch& s = *scratch_[std::size_t(chunk)];
      const T* x = in + item * std::size_t(c_in_) * h_ * w_;
      // Input spectra for this item.
      T* xre;
      T* xim;
      if (keep_spectra) {
        xre = xhat_re_.data() + item * std::size_t(c_in_) * h_ * row;
        xim = xhat_im_.data() + item * std::size_t(c_in_) * h_ * row;
      } else {
        xre = s.local_re.data();
        xim = s.local_im.data();
      }
      for (int r = 0; r < c_in_ * h_; ++r) {
        std::fill(s.pad.begin(), s.pad.end(), T(0));
        std::copy(x + std::size_t(r) * w_, x + std::size_t(r) * w_ + w_, s.pad.begin());
        s.fft->forward(s.pad.data(), xre + std::size_t(r) * row, xim + std::size_t(r) * row);
      }
      // Output rows: out[y] = sum_ic sum_dy corr(in[y+dy-pt], k[dy]).
      T* y_out = out + item * std::size_t(c_out_) * h_ * w_;
      for (int oc = 0; oc < c_out_; ++oc) {
        for (int y = 0; y < h_; ++y) {
          std::fill(s.acc_re.begin(), s.acc_re.end(), T(0));
          std::fill(s.acc_im.begin(), s.acc_im.end(), T(0));
          for (int ic = 0; ic < c_in_; ++ic) {
            for (int dy = 0; dy < kh_; ++dy) {
              const int yin = y + dy - pt_;
              if (yin < 0 || yin >= h_) continue;
              const std::size_t xr = (std::size_t(ic) * h_ + yin) * row;
              const std::size_t kr = ((std::size_t(oc) * c_in_ + ic) * kh_ + dy) * row;
              cmac_conj(s.acc_re.data(), s.acc_im.data(), xre + xr, xim + xr,
                        khat_re_.data() + kr, khat_im_.data() + kr, nf_);
            }
          }
          s.fft->inverse(s.acc_re.data(), s.acc_im.data(), s.pad.data());
          T* dst = y_out + (std::size_t(oc) * h_ + y) * w_;
          const T bv = bias[std::size_t(oc)];
          // out[p] = c[(p - pl) mod nfft] + bias
          for (int p = 0; p < std::min(pl_, w_); ++p) dst[p] = s.pad[std::size_t(nfft_ - pl_ + p)] + bv;
          for (int p = pl_; p < w_; ++p) dst[p] = s.pad[std::size_t(p - pl_)] + bv;
        }
      }
    });
  }

  /// gin may be null (first layer). Requires forward(.., keep_spectra=true).
  void backward(const T* gout, T* gin, int b, ThreadPool* pool) {
    require(xhat_items_ == b, name_ + ": backward without matching forward");
    ensure_scratch(pool);
    const std::size_t row = std::size_t(nf_);
    ghat_re_.resize(std::size_t(b) * c_out_ * h_ * row);
    ghat_im_.resize(ghat_re_.size());
    run_items(pool, b, [&](int chunk, std::size_t item) {
      Scratch& s = *scratch_[std::size_t(chunk)];
      const T* g = gout + item * std::size_t(c_out_) * h_ * w_;
      T* gre = ghat_re_.data() + item * std::size_t(c_out_) * h_ * row;
      T* gim = ghat_im_.data() + item * std::size_t(c_out_) * h_ * row;
      for (int r = 0; r < c_out_ * h_; ++r) {
        std::fill(s.pad.begin(), s.pad.end(), T(0));
        std::copy(g + std::size_t(r) * w_, g + std::size_t(r) * w_ + w_, s.pad.begin());
        s.fft->forward(s.pad.data(), gre + std::size_t(r) * row, gim + std::size_t(r) * row);
      }
      if (!gin) return;
      // gin[v] = sum_oc sum_dy conv(gout[v - dy + pt], k[dy]).
      T* gx = gin + item * std::size_t(c_in_) * h_ * w_;
      for (int ic = 0; ic < c_in_; ++ic) {
        for (int v = 0; v < h_; ++v) {
          std::fill(s.acc_re.begin(), s.acc_re.end(), T(0));
          std::fill(s.acc_im.begin(), s.acc_im.end(), T(0));
          for (int oc = 0; oc < c_out_; ++oc) {
            for (int dy = 0; dy < kh_; ++dy) {
              const int yo = v - dy + pt_;
              if (yo < 0 || yo >= h_) continue;
              const std::size_t gr = (std::size_t(oc) * h_ + yo) * row;
              const std::size_t kr = ((std::size_t(oc) * c_in_ + ic) * kh_ + dy) * row;
              cmac(s.acc_re.data(), s.acc_im.data(), gre + gr, gim + gr, khat_re_.data() + kr,
                   khat_im_.data() + kr, nf_);
            }
          }
          s.fft->inverse(s.acc_re.data(), s.acc_im.data(), s.pad.data());
          // gin[t] = d[t + pl]; t + pl < nfft because nfft >= W + KW - 1.
          T* dst = gx + (std::size_t(ic) * h_ + v) * w_;
          std::copy(s.pad.begin() + pl_, s.pad.begin() + pl_ + w_, dst);
        }
      }
    });
    // Weight gradients: one frequency-domain accumulator per (oc, ic, dy),
    // items summed in index order inside each slot.
    const std::size_t pairs = std::size_t(c_out_) * c_in_;
    auto wgrad_body = [&](int chunk, std::size_t lo, std::size_t hi) {
      Scratch& s = *scratch_[std::size_t(chunk)];
      for (std::size_t pair = lo; pair < hi; ++pair) {
        const int oc = int(pair / std::size_t(c_in_));
        const int ic = int(pair % std::size_t(c_in_));
        for (int dy = 0; dy < kh_; ++dy) {
          std::fill(s.acc_re.begin(), s.acc_re.end(), T(0));
          std::fill(s.acc_im.begin(), s.acc_im.end(), T(0));
          for (int item = 0; item < b; ++item) {
            for (int yo = 0; yo < h_; ++yo) {
              const int yin = yo + dy - pt_;
              if (yin < 0 || yin >= h_) continue;
              const std::size_t xr = ((std::size_t(item) * c_in_ + ic) * h_ + yin) * row;
              const std::size_t gr = ((std::size_t(item) * c_out_ + oc) * h_ + yo) * row;
              cmac_conj(s.acc_re.data(), s.acc_im.data(), xhat_re_.data() + xr,
                        xhat_im_.data() + xr, ghat_re_.data() + gr, ghat_im_.data() + gr, nf_);
            }
          }
          s.fft->inverse(s.acc_re.data(), s.acc_im.data(), s.pad.data());
          T* wg = wgrad.data() + ((std::size_t(oc) * c_in_ + ic) * kh_ + dy) * kw_;
          const T inv_n = T(1) / T(nfft_);
          // gk[dx] = c[(dx - pl) mod nfft] / nfft
          for (int dx = 0; dx < std::min(pl_, kw_); ++dx)
            wg[dx] += s.pad[std::size_t(nfft_ - pl_ + dx)] * inv_n;
          for (int dx = pl_; dx < kw_; ++dx) wg[dx] += s.pad[std::size_t(dx - pl_)] * inv_n;
        }
      }
    };
    if (pool && pool->size() > 1) {
      pool->parallel_chunks(pairs, wgrad_body);
    } else {
      wgrad_body(0, 0, pairs);
    }
    // Bias gradients, one double accumulator per output channel.
    for (int oc = 0; oc < c_out_; ++oc) {
      double acc = 0.0;
      for (int item = 0; item < b; ++item) {
        const T* g = gout + (std::size_t(item) * c_out_ + oc) * h_ * w_;
        for (int i = 0; i < h_ * w_; ++i) acc += double(g[i]);
      }
      bgrad[std::size_t(oc)] += T(acc);
    }
    xhat_items_ = 0;
  }

 private:
  struct Scratch {
    std::unique_ptr<RealFft<T>> fft;
    std::vector<T> pad, acc_re, acc_im, local_re, local_im;
  };

  void ensure_scratch(ThreadPool* pool) {
    const int n = pool ? pool->size() : 1;
    if (int(scratch_.size()) == n) return;
    scratch_.clear();
    for (int i = 0; i < n; ++i) {
      auto s = std::make_unique<Scratch>();
      s->fft = std::make_unique<RealFft<T>>(nfft_);
      s->pad.resize(std::size_t(nfft_));
      s->acc_re.resize(std::size_t(nf_));
      s->acc_im.resize(std::size_t(nf_));
      s->local_re.resize(std::size_t(c_in_) * h_ * nf_);
      s->local_im.resize(s->local_re.size());
      scratch_.push_back(std::move(s));
    }
  }

  /// Kernel row spectra, prescaled by 1/nfft so no inverse-transform scaling
  /// is needed on the forward or input-gradient paths.
  void build_kernel_spectra(ThreadPool* pool) {
    const std::size_t rows = std::size_t(c_out_) * c_in_ * kh_;
    auto body = [&](int chunk, std::size_t lo, std::size_t hi) {
      Scratch& s = *scratch_[std::size_t(chunk)];
      const T inv_n = T(1) / T(nfft_);
      for (std::size_t r = lo; r < hi; ++r) {
        std::fill(s.pad.begin(), s.pad.end(), T(0));
        const T* wrow = weight.data() + r * std::size_t(kw_);
        for (int i = 0; i < kw_; ++i) s.pad[std::size_t(i)] = wrow[i] * inv_n;
        s.fft->forward(s.pad.data(), khat_re_.data() + r * std::size_t(nf_),
                       khat_im_.data() + r * std::size_t(nf_));
      }
    };
    if (pool && pool->size() > 1) {
      pool->parallel_chunks(rows, body);
    } else {
      body(0, 0, rows);
    }
  }

  template <class F>
  void run_items(ThreadPool* pool, int b, F&& body) {
    if (pool && pool->size() > 1 && b > 1) {
      pool->parallel_chunks(std::size_t(b), [&](int chunk, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) body(chunk, i);
      });
    } else {
      for (std::size_t i = 0; i < std::size_t(b); ++i) body(0, i);
    }
  }

 public:
  std::vector<T> weight, bias, wgrad, bgrad;

 private:
  std::string name_;
  int c_in_, c_out_, kh_, kw_, h_, w_;
  int nfft_, nf_, pl_, pt_;
  std::vector<T> khat_re_, khat_im_;
  std::vector<T> xhat_re_, xhat_im_;
  std::vector<T> ghat_re_, ghat_im_;
  int xhat_items_ = 0;
  std::vector<std::unique_ptr<Scratch>> scratch_;
};

/// Batch normalization over (item, spatial) per channel. Batch statistics are
/// accumulated in double; the biased variance normalizes the batch while the
/// running variance stores the unbiased estimate. Eval mode requires at least
/// one tracked batch.
template <class T>
class BatchNorm2d {
 public:
  BatchNorm2d(std::string name, int channels, double momentum, double eps)
      : name_(std::move(name)), c_(channels), momentum_(momentum), eps_(eps) {
    gamma.assign(std::size_t(c_), T(1));
    beta.assign(std::size_t(c_), T(0));
    ggrad.assign(std::size_t(c_), T(0));
    bgrad.assign(std::size_t(c_), T(0));
    running_mean.assign(std::size_t(c_), T(0));
    running_var.assign(std::size_t(c_), T(1));
    mean_.resize(std::size_t(c_));
    inv_std_.resize(std::size_t(c_));
  }

  void init(Rng&) {
    std::fill(gamma.begin(), gamma.end(), T(1));
    std::fill(beta.begin(), beta.end(), T(0));
    std::fill(running_mean.begin(), running_mean.end(), T(0));
    std::fill(running_var.begin(), running_var.end(), T(1));
    batches_tracked = 0;
  }

  void zero_grads() {
    std::fill(ggrad.begin(), ggrad.end(), T(0));
    std::fill(bgrad.begin(), bgrad.end(), T(0));
  }

  template <class F>
  void visit_params(F&& fn) {
    fn(name_ + ".weight", gamma.data(), ggrad.data(), gamma.size());
    fn(name_ + ".bias", beta.data(), bgrad.data(), beta.size());
  }

  template <class F>
  void visit_buffers(F&& fn) {
    fn(name_ + ".running_mean", running_mean.data(), running_mean.size());
    fn(name_ + ".running_var", running_var.data(), running_var.size());
  }

  /// hw = spatial size per channel; per-channel element count is b*hw.
  void forward(const T* in, T* out, int b, int hw, bool train, ThreadPool* pool) {
    const std::size_t n = std::size_t(b) * std::size_t(hw);
    if (train) {
      require(n >= 2, name_ + ": training batch has fewer than two values per channel");
      auto body = [&](std::size_t c) {
        double s = 0.0;
        for (int i = 0; i < b; ++i) {
          const T* p = in + (std::size_t(i) * c_ + c) * hw;
          for (int j = 0; j < hw; ++j) s += double(p[j]);
        }
        const double mean = s / double(n);
        double v = 0.0;
        for (int i = 0; i < b; ++i) {
          const T* p = in + (std::size_t(i) * c_ + c) * hw;
          for (int j = 0; j < hw; ++j) {
            const double d = double(p[j]) - mean;
            v += d * d;
          }
        }
        const double var = v / double(n);
        const double inv_std = 1.0 / std::sqrt(var + eps_);
        mean_[c] = mean;
        inv_std_[c] = inv_std;
        const T scale = T(double(gamma[c]) * inv_std);
        const T shift = T(double(beta[c]) - double(gamma[c]) * inv_std * mean);
        for (int i = 0; i < b; ++i) {
          const T* p = in + (std::size_t(i) * c_ + c) * hw;
          T* q = out + (std::size_t(i) * c_ + c) * hw;
          for (int j = 0; j < hw; ++j) q[j] = p[j] * scale + shift;
        }
        running_mean[c] = T((1.0 - momentum_) * double(running_mean[c]) + momentum_ * mean);
        running_var[c] = T((1.0 - momentum_) * double(running_var[c]) +
                           momentum_ * var * double(n) / double(n - 1));
      };
      if (pool && pool->size() > 1) {
        pool->parallel_for(std::size_t(c_), body);
      } else {
        for (std::size_t c = 0; c < std::size_t(c_); ++c) body(c);
      }
      ++batches_tracked;
      train_cached_ = true;
    } else {
      require(batches_tracked > 0, name_ + ": eval before any training batch");
      for (std::size_t c = 0; c < std::size_t(c_); ++c) {
        const double inv_std = 1.0 / std::sqrt(double(running_var[c]) + eps_);
        const T scale = T(double(gamma[c]) * inv_std);
        const T shift = T(double(beta[c]) - double(running_mean[c]) * double(gamma[c]) * inv_std);
        for (int i = 0; i < b; ++i) {
          const T* p = in + (std::size_t(i) * c_ + c) * hw;
          T* q = out + (std::size_t(i) * c_ + c) * hw;
          for (int j = 0; j < hw; ++j) q[j] = p[j] * scale + shift;
        }
      }
      train_cached_ = false;
    }
  }

  /// Backward for the training-mode forward; in must be the same buffer.
  void backward(const T* in, const T* gout, T* gin, int b, int hw, ThreadPool* pool) {
    require(train_cached_, name_ + ": backward requires a training-mode forward");
    const double n = double(b) * double(hw);
    auto body = [&](std::size_t c) {
      const double mean = mean_[c];
      const double inv_std = inv_std_[c];
      double s1 = 0.0, s2 = 0.0;
      for (int i = 0; i < b; ++i) {
        const T* p = in + (std::size_t(i) * c_ + c) * hw;
        const T* g = gout + (std::size_t(i) * c_ + c) * hw;
        for (int j = 0; j < hw; ++j) {
          const double xh = (double(p[j]) - mean) * inv_std;
          s1 += double(g[j]);
          s2 += double(g[j]) * xh;
        }
      }
      ggrad[c] += T(s2);
      bgrad[c] += T(s1);
      const double k1 = s1 / n;
      const double k2 = s2 / n;
      const double gs = double(gamma[c]) * inv_std;
      for (int i = 0; i < b; ++i) {
        const T* p = in + (std::size_t(i) * c_ + c) * hw;
        const T* g = gout + (std::size_t(i) * c_ + c) * hw;
        T* q = gin + (std::size_t(i) * c_ + c) * hw;
        for (int j = 0; j < hw; ++j) {
          const double xh = (double(p[j]) - mean) * inv_std;
          q[j] = T(gs * (double(g[j]) - k1 - xh * k2));
        }
      }
    };
    if (pool && pool->size() > 1) {
      pool->parallel_for(std::size_t(c_), body);
    } else {
      for (std::size_t c = 0; c < std::size_t(c_); ++c) body(c);
    }
  }

  std::vector<T> gamma, beta, ggrad, bgrad;
  std::vector<T> running_mean, running_var;
  std::int64_t batches_tracked = 0;

 private:
  std::string name_;
  int c_;
  double momentum_, eps_;
  std::vector<double> mean_, inv_std_;
  bool train_cached_ = false;
};

/// Fused ReLU followed by inverted dropout, in place. The dropout mask is
/// counter-based (splitmix64 over a key derived from seed, layer id and step),
/// so the backward pass needs no stored mask: a position contributes gradient
/// iff its forward output is positive, which already encodes kept-and-active.
template <class T>
struct ReluDropout {
  double p = 0.0;
  std::uint64_t layer_salt = 0;

  void forward(T* x, std::size_t n, bool train, std::uint64_t seed, std::uint64_t step) const {
    if (!train || p <= 0.0) {
      for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
      return;
    }
    const std::uint64_t key = mix_seed(seed, layer_salt, step);
    const T scale = T(1.0 / (1.0 - p));
    for (std::size_t i = 0; i < n; ++i) {
      T v = x[i] > T(0) ? x[i] : T(0);
      const double u = u64_to_unit(splitmix64(key + i * 0x9e3779b97f4a7c15ull));
      x[i] = (u < p) ? T(0) : v * scale;
    }
  }

  /// out must be the buffer produced by forward (same mode and step).
  void backward(T* g, const T* out, std::size_t n, bool train) const {
    const T scale = (train && p > 0.0) ? T(1.0 / (1.0 - p)) : T(1);
    for (std::size_t i = 0; i < n; ++i) g[i] = out[i] > T(0) ? g[i] * scale : T(0);
  }
};

/// 2x2 max pooling with stride 2 over [B][C][2][W] -> [B][C][1][W/2].
/// Ties resolve to the earliest window position (row-major scan).
template <class T>
class MaxPool2x2 {
 public:
  MaxPool2x2(int channels, int h, int w) : c_(channels), h_(h), w_(w) {
    require(h == 2, "MaxPool2x2: expects height 2");
    require(w % 2 == 0 && w >= 2, "MaxPool2x2: width must be even");
  }

  int out_width() const { return w_ / 2; }

  void forward(const T* in, T* out, int b) {
    const int wo = w_ / 2;
    idx_.resize(std::size_t(b) * c_ * wo);
    for (int i = 0; i < b; ++i) {
      for (int c = 0; c < c_; ++c) {
        const T* p = in + (std::size_t(i) * c_ + c) * h_ * w_;
        T* q = out + (std::size_t(i) * c_ + c) * wo;
        std::uint8_t* ix = idx_.data() + (std::size_t(i) * c_ + c) * wo;
        for (int x = 0; x < wo; ++x) {
          T best = p[2 * x];
          std::uint8_t arg = 0;
          const T cand1 = p[2 * x + 1];
          const T cand2 = p[w_ + 2 * x];
          const T cand3 = p[w_ + 2 * x + 1];
          if (cand1 > best) { best = cand1; arg = 1; }
          if (cand2 > best) { best = cand2; arg = 2; }
          if (cand3 > best) { best = cand3; arg = 3; }
          q[x] = best;
          ix[x] = arg;
        }
      }
    }
  }

  void backward(const T* gout, T* gin, int b) {
    const int wo = w_ / 2;
    std::fill(gin, gin + std::size_t(b) * c_ * h_ * w_, T(0));
    for (int i = 0; i < b; ++i) {
      for (int c = 0; c < c_; ++c) {
        const T* g = gout + (std::size_t(i) * c_ + c) * wo;
        T* q = gin + (std::size_t(i) * c_ + c) * h_ * w_;
        const std::uint8_t* ix = idx_.data() + (std::size_t(i) * c_ + c) * wo;
        for (int x = 0; x < wo; ++x) {
          const int dy = ix[x] >> 1;
          const int dx = ix[x] & 1;
          q[std::size_t(dy) * w_ + 2 * x + dx] += g[x];
        }
      }
    }
  }

 private:
  int c_, h_, w_;
  std::vector<std::uint8_t> idx_;
};

/// Fully connected layer y = x W^T + b with W stored [out][in].
template <class T>
class Linear {
 public:
  Linear(std::string name, int in_features, int out_features)
      : name_(std::move(name)), in_(in_features), out_(out_features) {
    weight.assign(std::size_t(out_) * in_, T(0));
    bias.assign(std::size_t(out_), T(0));
    wgrad.assign(weight.size(), T(0));
    bgrad.assign(bias.size(), T(0));
    wt_.resize(weight.size());
  }

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(double(in_));
    for (auto& v : weight) v = T(rng.uniform(-bound, bound));
    for (auto& v : bias) v = T(0);
  }

  void zero_grads() {
    std::fill(wgrad.begin(), wgrad.end(), T(0));
    std::fill(bgrad.begin(), bgrad.end(), T(0));
  }

  template <class F>
  void visit_params(F&& fn) {
    fn(name_ + ".weight", weight.data(), wgrad.data(), weight.size());
    fn(name_ + ".bias", bias.data(), bgrad.data(), bias.size());
  }

  void forward(const T* x, T* y, int b, ThreadPool* pool) {
    transpose(wt_.data(), weight.data(), out_, in_);
    for (int i = 0; i < b; ++i)
      std::copy(bias.begin(), bias.end(), y + std::size_t(i) * out_);
    gemm_nn(y, x, wt_.data(), b, in_, out_, pool);
  }

  void backward(const T* x, const T* gy, T* gx, int b, ThreadPool* pool) {
    gemm_tn(wgrad.data(), gy, x, b, out_, in_, pool);
    for (int k = 0; k < out_; ++k) {
      double acc = 0.0;
      for (int i = 0; i < b; ++i) acc += double(gy[std::size_t(i) * out_ + k]);
      bgrad[std::size_t(k)] += T(acc);
    }
    if (gx) {
      std::fill(gx, gx + std::size_t(b) * in_, T(0));
      gemm_nn(gx, gy, weight.data(), b, out_, in_, pool);
    }
  }

  int in_features() const { return in_; }
  int out_features() const { return out_; }

  std::vector<T> weight, bias, wgrad, bgrad;

 private:
  std::string name_;
  int in_, out_;
  std::vector<T> wt_;
};

}  // namespace hinova::nn
