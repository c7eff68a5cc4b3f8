// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/nn/linalg.hpp"
#include "hinova/rng.hpp"

namespace hinova::nn {

template <class T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

/// Largest representable value strictly below 1; hidden states are clamped to
/// (-largest, largest) so they stay in the open interval (-1, 1) even when the
/// product of two near-1 factors rounds up to 1.
template <class T>
inline T hidden_clamp_bound() {
  return std::nextafter(T(1), T(0));
}

/// View over packed LSTM parameters. Gate order throughout is i, f, g, o:
/// w_x is [4H][in_dim], w_h is [4H][H], biases are [4H]. The per-gate
/// matrices of the usual formulation are the H-row blocks in that order.
template <class T>
struct LstmParams {
  int in_dim = 0;
  int hidden = 0;
  const T* w_x = nullptr;
  const T* w_h = nullptr;
  const T* b_x = nullptr;
  const T* b_h = nullptr;
};

/// One recurrence step for a single item:
///   i = sigmoid(W_ii x + b_ii + W_hi h + b_hi)     (f, o alike)
///   g = tanh   (W_ig x + b_ig + W_hg h + b_hg)
///   c = f * c_prev + i * g
///   h = o * tanh(c), clamped into the open interval (-1, 1)
/// gates_out, if given, receives the 4H post-activation gate values.
template <class T>
inline void lstm_step(const LstmParams<T>& p, const T* x, const T* h_prev, const T* c_prev,
                      T* h_out, T* c_out, T* gates_out = nullptr) {
  const int H = p.hidden;
  const int in = p.in_dim;
  const T bound = hidden_clamp_bound<T>();
  std::vector<T> z(std::size_t(4) * H);
  for (int j = 0; j < 4 * H; ++j) {
    T acc = p.b_x[j] + p.b_h[j];
    const T* wx = p.w_x + std::size_t(j) * in;
    for (int t = 0; t < in; ++t) acc += x[t] * wx[t];
    const T* wh = p.w_h + std::size_t(j) * H;
    for (int u = 0; u < H; ++u) acc += h_prev[u] * wh[u];
    z[std::size_t(j)] = acc;
  }
  for (int u = 0; u < H; ++u) {
    const T gi = sigmoid(z[std::size_t(u)]);
    const T gf = sigmoid(z[std::size_t(H + u)]);
    const T gg = std::tanh(z[std::size_t(2 * H + u)]);
    const T go = sigmoid(z[std::size_t(3 * H + u)]);
    const T c = gf * c_prev[u] + gi * gg;
    T h = go * std::tanh(c);
    h = std::min(bound, std::max(-bound, h));
    c_out[u] = c;
    h_out[u] = h;
    if (gates_out) {
      gates_out[u] = gi;
      gates_out[H + u] = gf;
      gates_out[2 * H + u] = gg;
      gates_out[3 * H + u] = go;
    }
  }
}

/// Batched LSTM over a time-major sequence [T][B][in_dim] with zero initial
/// state. Keeps the full hidden trace plus per-step gate and cell caches for
/// truncation-free backpropagation through time.
template <class T>
class LstmLayer {
 public:
  LstmLayer(std::string name, int in_dim, int hidden)
      : name_(std::move(name)), in_(in_dim), hid_(hidden) {
    require(in_dim >= 1 && hidden >= 1, name_ + ": bad shape");
    w_x.assign(std::size_t(4) * hid_ * in_, T(0));
    w_h.assign(std::size_t(4) * hid_ * hid_, T(0));
    b_x.assign(std::size_t(4) * hid_, T(0));
    b_h.assign(std::size_t(4) * hid_, T(0));
    wxg.assign(w_x.size(), T(0));
    whg.assign(w_h.size(), T(0));
    bxg.assign(b_x.size(), T(0));
    bhg.assign(b_h.size(), T(0));
    wxt_.resize(w_x.size());
    wht_.resize(w_h.size());
  }

  int hidden() const { return hid_; }
  int in_dim() const { return in_; }

  /// Uniform fan-in init; forget-gate input bias starts at +1 so early
  /// training does not flush the cell state.
  void init(Rng& rng) {
    const double bx = 1.0 / std::sqrt(double(in_));
    const double bh = 1.0 / std::sqrt(double(hid_));
    for (auto& v : w_x) v = T(rng.uniform(-bx, bx));
    for (auto& v : w_h) v = T(rng.uniform(-bh, bh));
    std::fill(b_x.begin(), b_x.end(), T(0));
    std::fill(b_h.begin(), b_h.end(), T(0));
    for (int u = 0; u < hid_; ++u) b_x[std::size_t(hid_ + u)] = T(1);
  }

  void zero_grads() {
    std::fill(wxg.begin(), wxg.end(), T(0));
    std::fill(whg.begin(), whg.end(), T(0));
    std::fill(bxg.begin(), bxg.end(), T(0));
    std::fill(bhg.begin(), bhg.end(), T(0));
  }

  template <class F>
  void visit_params(F&& fn) {
    fn(name_ + ".w_x", w_x.data(), wxg.data(), w_x.size());
    fn(name_ + ".w_h", w_h.data(), whg.data(), w_h.size());
    fn(name_ + ".b_x", b_x.data(), bxg.data(), b_x.size());
    fn(name_ + ".b_h", b_h.data(), bhg.data(), b_h.size());
  }

  LstmParams<T> params() const {
    return {in_, hid_, w_x.data(), w_h.data(), b_x.data(), b_h.data()};
  }

  /// xseq: [t_steps][b][in_dim]. After the call the hidden trace for the
  /// whole sequence is available through hidden_step().
  void forward(const T* xseq, int t_steps, int b, ThreadPool* pool) {
    require(t_steps >= 1 && b >= 1, name_ + ": empty forward");
    t_steps_ = t_steps;
    b_ = b;
    const std::size_t bh = std::size_t(b) * hid_;
    const std::size_t b4 = std::size_t(b) * 4 * hid_;
    gates_.resize(std::size_t(t_steps) * b4);
    c_.resize(std::size_t(t_steps) * bh);
    tanh_c_.resize(std::size_t(t_steps) * bh);
    h_.resize(std::size_t(t_steps) * bh);
    transpose(wxt_.data(), w_x.data(), 4 * hid_, in_);
    transpose(wht_.data(), w_h.data(), 4 * hid_, hid_);
    // One small pre-activation buffer reused across steps; it stays cache
    // resident, which beats hoisting the input projection out of the loop.
    z_.resize(b4);
    const T bound = hidden_clamp_bound<T>();
    for (int t = 0; t < t_steps; ++t) {
      // z = b_x + b_h + x_t W_x^T + h_{t-1} W_h^T
      for (int i = 0; i < b; ++i) {
        T* zr = z_.data() + std::size_t(i) * 4 * hid_;
        for (int j = 0; j < 4 * hid_; ++j) zr[j] = b_x[std::size_t(j)] + b_h[std::size_t(j)];
      }
      gemm_nn(z_.data(), xseq + std::size_t(t) * b * in_, wxt_.data(), b, in_, 4 * hid_, pool);
      if (t > 0)
        gemm_nn(z_.data(), h_.data() + std::size_t(t - 1) * bh, wht_.data(), b, hid_, 4 * hid_,
                pool);
      const T* c_prev = (t > 0) ? c_.data() + std::size_t(t - 1) * bh : nullptr;
      T* gt = gates_.data() + std::size_t(t) * b4;
      T* ct = c_.data() + std::size_t(t) * bh;
      T* tc = tanh_c_.data() + std::size_t(t) * bh;
      T* ht = h_.data() + std::size_t(t) * bh;
      for (int i = 0; i < b; ++i) {
        const T* zr = z_.data() + std::size_t(i) * 4 * hid_;
        T* g = gt + std::size_t(i) * 4 * hid_;
        for (int u = 0; u < hid_; ++u) {
          const T gi = sigmoid(zr[u]);
          const T gf = sigmoid(zr[hid_ + u]);
          const T gg = std::tanh(zr[2 * hid_ + u]);
          const T go = sigmoid(zr[3 * hid_ + u]);
          g[u] = gi;
          g[hid_ + u] = gf;
          g[2 * hid_ + u] = gg;
          g[3 * hid_ + u] = go;
          const T cp = c_prev ? c_prev[std::size_t(i) * hid_ + u] : T(0);
          const T c = gf * cp + gi * gg;
          const T th = std::tanh(c);
          T h = go * th;
          h = std::min(bound, std::max(-bound, h));
          ct[std::size_t(i) * hid_ + u] = c;
          tc[std::size_t(i) * hid_ + u] = th;
          ht[std::size_t(i) * hid_ + u] = h;
        }
      }
    }
  }

  int t_steps() const { return t_steps_; }

  /// Hidden states h_t for all items of the last forward call: [b][hidden].
  const T* hidden_step(int t) const {
    require(t >= 0 && t < t_steps_, name_ + ": hidden_step out of range");
    return h_.data() + std::size_t(t) * b_ * hid_;
  }

  /// dh_last: gradient on h_{T-1}, [b][hidden]. dxseq receives [T][b][in].
  void backward(const T* xseq, const T* dh_last, T* dxseq, ThreadPool* pool) {
    require(t_steps_ > 0, name_ + ": backward without forward");
    const int b = b_;
    const std::size_t bh = std::size_t(b) * hid_;
    const std::size_t b4 = std::size_t(b) * 4 * hid_;
    std::vector<T> dh(dh_last, dh_last + bh), dc(bh, T(0));
    std::vector<T> dh_next(bh), dz(b4);
    for (int t = t_steps_ - 1; t >= 0; --t) {
      const T* gt = gates_.data() + std::size_t(t) * b4;
      const T* tc = tanh_c_.data() + std::size_t(t) * bh;
      const T* c_prev = (t > 0) ? c_.data() + std::size_t(t - 1) * bh : nullptr;
      for (int i = 0; i < b; ++i) {
        const T* g = gt + std::size_t(i) * 4 * hid_;
        T* dzr = dz.data() + std::size_t(i) * 4 * hid_;
        for (int u = 0; u < hid_; ++u) {
          const std::size_t s = std::size_t(i) * hid_ + u;
          const T gi = g[u], gf = g[hid_ + u], gg = g[2 * hid_ + u], go = g[3 * hid_ + u];
          const T th = tc[s];
          const T dho = dh[s];
          const T dcv = dc[s] + dho * go * (T(1) - th * th);
          const T dgo = dho * th;
          const T dgi = dcv * gg;
          const T dgg = dcv * gi;
          const T cp = c_prev ? c_prev[s] : T(0);
          const T dgf = dcv * cp;
          dc[s] = dcv * gf;
          dzr[u] = dgi * gi * (T(1) - gi);
          dzr[hid_ + u] = dgf * gf * (T(1) - gf);
          dzr[2 * hid_ + u] = dgg * (T(1) - gg * gg);
          dzr[3 * hid_ + u] = dgo * go * (T(1) - go);
        }
      }
      const T* x_t = xseq + std::size_t(t) * b * in_;
      gemm_tn(wxg.data(), dz.data(), x_t, b, 4 * hid_, in_, pool);
      if (t > 0)
        gemm_tn(whg.data(), dz.data(), h_.data() + std::size_t(t - 1) * bh, b, 4 * hid_, hid_,
                pool);
      for (int j = 0; j < 4 * hid_; ++j) {
        double acc = 0.0;
        for (int i = 0; i < b; ++i) acc += double(dz[std::size_t(i) * 4 * hid_ + j]);
        bxg[std::size_t(j)] += T(acc);
        bhg[std::size_t(j)] += T(acc);
      }
      T* dx_t = dxseq + std::size_t(t) * b * in_;
      std::fill(dx_t, dx_t + std::size_t(b) * in_, T(0));
      gemm_nn(dx_t, dz.data(), w_x.data(), b, 4 * hid_, in_, pool);
      if (t > 0) {
        std::fill(dh_next.begin(), dh_next.end(), T(0));
        gemm_nn(dh_next.data(), dz.data(), w_h.data(), b, 4 * hid_, hid_, pool);
        std::swap(dh, dh_next);
      }
    }
  }

  std::vector<T> w_x, w_h, b_x, b_h;
  std::vector<T> wxg, whg, bxg, bhg;

 private:
  std::string name_;
  int in_, hid_;
  int t_steps_ = 0, b_ = 0;
  std::vector<T> gates_, c_, tanh_c_, h_, z_;
  std::vector<T> wxt_, wht_;
};

}  // namespace hinova::nn
