// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

#include "hinova/common.hpp"

namespace hinova {

namespace detail {
// FFTW plan creation is not thread safe; execution via the *_r2c/*_c2r
// "new array" interfaces on a per-object buffer is.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct FftwApi;

template <>
struct FftwApi<float> {
  using real = float;
  using cplx = fftwf_complex;
  using plan = fftwf_plan;
  static plan plan_r2c(int n, real* in, cplx* out) {
    return fftwf_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  static plan plan_c2r(int n, cplx* in, real* out) {
    return fftwf_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
  }
  static void destroy(plan p) { fftwf_destroy_plan(p); }
  static void exec_r2c(plan p, real* in, cplx* out) { fftwf_execute_dft_r2c(p, in, out); }
  static void exec_c2r(plan p, cplx* in, real* out) { fftwf_execute_dft_c2r(p, in, out); }
};

template <>
struct FftwApi<double> {
  using real = double;
  using cplx = fftw_complex;
  using plan = fftw_plan;
  static plan plan_r2c(int n, real* in, cplx* out) {
    return fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  static plan plan_c2r(int n, cplx* in, real* out) {
    return fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
  }
  static void destroy(plan p) { fftw_destroy_plan(p); }
  static void exec_r2c(plan p, real* in, cplx* out) { fftw_execute_dft_r2c(p, in, out); }
  static void exec_c2r(plan p, cplx* in, real* out) { fftw_execute_dft_c2r(p, in, out); }
};
}  // namespace detail

/// One-dimensional real FFT of fixed length n. Forward fills F = n/2+1
/// split-complex bins; inverse consumes the same layout. The inverse is
/// unnormalized (FFTW convention): ifft(fft(x)) == n * x.
///
/// Not thread safe per instance; create one per thread. Plan creation is
/// internally serialized.
template <class T>
class RealFft {
  using Api = detail::FftwApi<T>;

 public:
  explicit RealFft(int n) : n_(n), nf_(n / 2 + 1) {
    require(n >= 2, "RealFft: length must be >= 2");
    buf_real_.resize(static_cast<std::size_t>(n_));
    buf_cplx_.resize(static_cast<std::size_t>(nf_));
    std::lock_guard<std::mutex> lk(detail::fftw_plan_mutex());
    plan_fwd_ = Api::plan_r2c(n_, buf_real_.data(),
                              reinterpret_cast<typename Api::cplx*>(buf_cplx_.data()));
    plan_inv_ = Api::plan_c2r(n_, reinterpret_cast<typename Api::cplx*>(buf_cplx_.data()),
                              buf_real_.data());
    if (!plan_fwd_ || !plan_inv_) fail("RealFft: plan creation failed");
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  ~RealFft() {
    std::lock_guard<std::mutex> lk(detail::fftw_plan_mutex());
    Api::destroy(plan_fwd_);
    Api::destroy(plan_inv_);
  }

  int size() const { return n_; }
  int bins() const { return nf_; }

  /// re/im must hold bins() values each; in must hold size() values.
  void forward(const T* in, T* re, T* im) {
    std::copy(in, in + n_, buf_real_.data());
    Api::exec_r2c(plan_fwd_, buf_real_.data(),
                  reinterpret_cast<typename Api::cplx*>(buf_cplx_.data()));
    for (int i = 0; i < nf_; ++i) {
      re[i] = buf_cplx_[std::size_t(i)].real();
      im[i] = buf_cplx_[std::size_t(i)].imag();
    }
  }

  /// Unnormalized inverse; out receives size() reals.
  void inverse(const T* re, const T* im, T* out) {
    for (int i = 0; i < nf_; ++i) buf_cplx_[std::size_t(i)] = std::complex<T>(re[i], im[i]);
    Api::exec_c2r(plan_inv_, reinterpret_cast<typename Api::cplx*>(buf_cplx_.data()),
                  buf_real_.data());
    std::copy(buf_real_.data(), buf_real_.data() + n_, out);
  }

 private:
  int n_, nf_;
  std::vector<T> buf_real_;
  std::vector<std::complex<T>> buf_cplx_;
  typename Api::plan plan_fwd_{}, plan_inv_{};
};

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

/// acc += a * conj(b), elementwise over split-complex arrays of length n.
template <class T>
inline void cmac_conj(T* __restrict acc_re, T* __restrict acc_im, const T* __restrict a_re,
                      const T* __restrict a_im, const T* __restrict b_re,
                      const T* __restrict b_im, int n) {
  for (int i = 0; i < n; ++i) {
    acc_re[i] += a_re[i] * b_re[i] + a_im[i] * b_im[i];
    acc_im[i] += a_im[i] * b_re[i] - a_re[i] * b_im[i];
  }
}

/// acc += a * b, elementwise over split-complex arrays of length n.
template <class T>
inline void cmac(T* __restrict acc_re, T* __restrict acc_im, const T* __restrict a_re,
                 const T* __restrict a_im, const T* __restrict b_re, const T* __restrict b_im,
                 int n) {
  for (int i = 0; i < n; ++i) {
    acc_re[i] += a_re[i] * b_re[i] - a_im[i] * b_im[i];
    acc_im[i] += a_im[i] * b_re[i] + a_re[i] * b_im[i];
  }
}

/// Biased sample autocorrelation r[k] = (1/n) * sum_t x[t] x[t+k] for
/// k in [0, n_lags), computed with a zero-padded real FFT in O(n log n).
/// n_lags must satisfy 1 <= n_lags <= n.
inline std::vector<double> autocorrelate(const float* x, int n, int n_lags) {
  require(n >= 1, "autocorrelate: empty input");
  require(n_lags >= 1 && n_lags <= n, "autocorrelate: n_lags out of range");
  const int nfft = next_pow2(2 * n);
  RealFft<double> fft(nfft);
  std::vector<double> padded(static_cast<std::size_t>(nfft), 0.0);
  for (int i = 0; i < n; ++i) padded[std::size_t(i)] = double(x[i]);
  const int nf = fft.bins();
  std::vector<double> re(static_cast<std::size_t>(nf)), im(static_cast<std::size_t>(nf));
  fft.forward(padded.data(), re.data(), im.data());
  for (int i = 0; i < nf; ++i) {
    re[i] = re[i] * re[i] + im[i] * im[i];
    im[i] = 0.0;
  }
  std::vector<double> full(static_cast<std::size_t>(nfft));
  fft.inverse(re.data(), im.data(), full.data());
  std::vector<double> out(static_cast<std::size_t>(n_lags));
  const double scale = 1.0 / (double(nfft) * double(n));
  for (int k = 0; k < n_lags; ++k) out[std::size_t(k)] = full[std::size_t(k)] * scale;
  return out;
}

}  // namespace hinova
