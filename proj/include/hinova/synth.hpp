// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hinova/common.hpp"
#include "hinova/dataio.hpp"
#include "hinova/rng.hpp"

namespace hinova {

/// Per-device transmitter impairments. Parameters are sampled once per
/// device; every capture from that device reuses the same profile.
struct DeviceProfile {
  int device_id = -1;
  double iq_gain_db = 0.0;    // I/Q amplitude imbalance, dB (split +/-)
  double iq_phase_rad = 0.0;  // quadrature skew
  double dc_i = 0.0;          // LO leakage, I rail
  double dc_q = 0.0;          // LO leakage, Q rail
  double cfo_hz = 0.0;        // carrier frequency offset
  double pn_sigma = 0.0;      // phase noise random-walk step, rad/sample
  double pa_c3 = 0.0;         // cubic PA nonlinearity coefficient
  double snr_db = 15.0;       // AWGN level; non-finite disables noise
};

struct SynthConfig {
  int n_devices = 15;
  int captures_per_device = 1;
  double capture_seconds = 0.42;
  double sample_rate_hz = 1.0e6;
  // Scales every device-specific impairment range. 0 makes all devices
  // emit statistically identical signals; 1 is the nominal spread.
  double separability = 1.0;
  double snr_db = 15.0;
  std::uint64_t master_seed = 1;
};

namespace synth_detail {

constexpr int kSps = 4;             // samples per symbol
// Short-frame bursts spend a large share of airtime on the fixed preamble
// (LoRa-style framing); the frame-period autocorrelation peak scales with it.
constexpr int kSymsPerFrame = 256;  // 96 preamble + 160 payload
constexpr int kPreambleSyms = 96;
constexpr int kFrameLen = kSps * kSymsPerFrame;  // 1024 complex samples
constexpr int kRrcSpan = 8;                      // pulse length in symbols
constexpr double kRrcBeta = 0.35;

/// Root-raised-cosine taps, normalized so the shaped unit-power QPSK stream
/// has unit average power (sum of squared taps equals sps).
inline const std::vector<double>& rrc_taps() {
  static const std::vector<double> taps = [] {
    const int n = kRrcSpan * kSps + 1;
    std::vector<double> h(static_cast<std::size_t>(n));
    const double beta = kRrcBeta;
    for (int k = 0; k < n; ++k) {
      const double t = (k - (n - 1) / 2) / double(kSps);  // in symbols
      double v;
      if (t == 0.0) {
        v = 1.0 + beta * (4.0 / M_PI - 1.0);
      } else if (std::abs(std::abs(4.0 * beta * t) - 1.0) < 1e-12) {
        const double a = M_PI / (4.0 * beta);
        v = (beta / std::sqrt(2.0)) *
            ((1.0 + 2.0 / M_PI) * std::sin(a) + (1.0 - 2.0 / M_PI) * std::cos(a));
      } else {
        const double num = std::sin(M_PI * t * (1.0 - beta)) +
                           4.0 * beta * t * std::cos(M_PI * t * (1.0 + beta));
        const double den = M_PI * t * (1.0 - 16.0 * beta * beta * t * t);
        v = num / den;
      }
      h[static_cast<std::size_t>(k)] = v;
    }
    double e = 0.0;
    for (double v : h) e += v * v;
    const double scale = std::sqrt(double(kSps) / e);
    for (double& v : h) v *= scale;
    return h;
  }();
  return taps;
}

}  // namespace synth_detail

/// Samples one device's impairment profile. All device-varying parameters
/// scale linearly with cfg.separability; the draw order is fixed so the same
/// master seed yields proportional profiles across separability settings.
inline DeviceProfile make_device_profile(const SynthConfig& cfg, int device_id) {
  Rng rng(mix_seed(cfg.master_seed, 0x64657669ULL, std::uint64_t(device_id)));
  const double s = cfg.separability;
  DeviceProfile p;
  p.device_id = device_id;
  p.iq_gain_db = s * rng.uniform(-0.9, 0.9);
  p.iq_phase_rad = s * rng.uniform(-0.07, 0.07);
  p.dc_i = s * rng.uniform(-0.035, 0.035);
  p.dc_q = s * rng.uniform(-0.035, 0.035);
  // Crystal tolerance of tens of ppm at a ~1 GHz carrier puts residual CFO
  // in the tens-of-kHz range; it is the dominant fingerprint carrier.
  p.cfo_hz = s * rng.uniform(-20000.0, 20000.0);
  p.pn_sigma = s * rng.uniform(0.0005, 0.004);
  p.pa_c3 = s * rng.uniform(-0.18, 0.02);
  p.snr_db = cfg.snr_db;
  return p;
}

/// Generates clean QPSK baseband: whole frames of 1024 samples, each a fixed
/// balanced preamble plus a shuffled balanced payload, pulse-shaped
/// circularly per frame. Balanced symbol sets plus circular shaping give
/// every frame an exactly zero sample sum (up to float rounding), which
/// keeps the clean stream DC-free by construction.
inline std::vector<float> gen_baseband(int n_frames, Rng& rng) {
  using namespace synth_detail;
  require(n_frames > 0, "gen_baseband: need at least one frame");
  // Unit-energy QPSK constellation.
  const double u = 1.0 / std::sqrt(2.0);
  const double ci[4] = {u, u, -u, -u};
  const double cq[4] = {u, -u, u, -u};
  // Preamble: repeats of a balanced palindrome block.
  static const int preamble_pat[8] = {0, 1, 2, 3, 3, 2, 1, 0};

  std::vector<float> out(static_cast<std::size_t>(n_frames) * kFrameLen * 2);
  std::vector<int> payload(static_cast<std::size_t>(kSymsPerFrame - kPreambleSyms));
  std::vector<double> acc_i(static_cast<std::size_t>(kFrameLen));
  std::vector<double> acc_q(static_cast<std::size_t>(kFrameLen));
  const std::vector<double>& h = rrc_taps();
  const int half = int(h.size() - 1) / 2;

  for (int f = 0; f < n_frames; ++f) {
    // Equal copies of each constellation point, order shuffled per frame.
    for (int i = 0; i < int(payload.size()); ++i) payload[static_cast<std::size_t>(i)] = i % 4;
    rng.shuffle(payload);
    std::fill(acc_i.begin(), acc_i.end(), 0.0);
    std::fill(acc_q.begin(), acc_q.end(), 0.0);
    for (int s = 0; s < kSymsPerFrame; ++s) {
      const int sym = s < kPreambleSyms ? preamble_pat[s % 8]
                                        : payload[static_cast<std::size_t>(s - kPreambleSyms)];
      const double si = ci[sym], sq = cq[sym];
      const int pos = s * kSps;
      for (int k = 0; k < int(h.size()); ++k) {
        const int idx = ((pos + k - half) % kFrameLen + kFrameLen) % kFrameLen;
        acc_i[static_cast<std::size_t>(idx)] += h[static_cast<std::size_t>(k)] * si;
        acc_q[static_cast<std::size_t>(idx)] += h[static_cast<std::size_t>(k)] * sq;
      }
    }
    float* dst = out.data() + std::size_t(f) * kFrameLen * 2;
    for (int n = 0; n < kFrameLen; ++n) {
      dst[2 * n] = float(acc_i[static_cast<std::size_t>(n)]);
      dst[2 * n + 1] = float(acc_q[static_cast<std::size_t>(n)]);
    }
  }
  return out;
}

/// Applies the transmitter impairment chain in place, in this order:
/// cubic PA nonlinearity, I/Q imbalance, DC offset, CFO rotation, phase-noise
/// random walk, AWGN. All arithmetic runs in double per sample; the CFO phase
/// is computed directly from the sample index (no recurrence) so phase error
/// does not accumulate. rng drives only the stochastic stages (phase noise,
/// noise); a profile with pn_sigma == 0 and non-finite snr_db never draws.
inline void apply_impairments(std::vector<float>& iq, const DeviceProfile& p, double fs, Rng& rng) {
  require(iq.size() % 2 == 0, "apply_impairments: odd float count");
  require(fs > 0.0, "apply_impairments: bad sample rate");
  const std::size_t n = iq.size() / 2;
  const double gi = std::pow(10.0, p.iq_gain_db / 40.0);
  const double gq = std::pow(10.0, -p.iq_gain_db / 40.0);
  const double cph = std::cos(p.iq_phase_rad), sph = std::sin(p.iq_phase_rad);
  const double wcfo = 2.0 * M_PI * p.cfo_hz / fs;
  double phi = 0.0;
  double psum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double i = double(iq[2 * k]);
    double q = double(iq[2 * k + 1]);
    // PA: y = x * (1 + c3 |x|^2)
    const double mag2 = i * i + q * q;
    const double g = 1.0 + p.pa_c3 * mag2;
    i *= g;
    q *= g;
    // I/Q imbalance (gain split across rails, quadrature skew on Q)
    const double i2 = gi * i;
    const double q2 = gq * (q * cph + i * sph);
    // DC offset
    double i3 = i2 + p.dc_i;
    double q3 = q2 + p.dc_q;
    // CFO
    if (p.cfo_hz != 0.0) {
      const double th = wcfo * double(k);
      const double ct = std::cos(th), st = std::sin(th);
      const double ir = i3 * ct - q3 * st;
      const double qr = i3 * st + q3 * ct;
      i3 = ir;
      q3 = qr;
    }
    // Phase-noise random walk
    if (p.pn_sigma > 0.0) {
      phi += p.pn_sigma * rng.normal();
      const double cp = std::cos(phi), sp = std::sin(phi);
      const double ir = i3 * cp - q3 * sp;
      const double qr = i3 * sp + q3 * cp;
      i3 = ir;
      q3 = qr;
    }
    psum += i3 * i3 + q3 * q3;
    iq[2 * k] = float(i3);
    iq[2 * k + 1] = float(q3);
  }
  if (std::isfinite(p.snr_db)) {
    const double psig = psum / double(n);
    const double nvar = psig * std::pow(10.0, -p.snr_db / 10.0);
    const double nstd = std::sqrt(nvar / 2.0);
    for (std::size_t k = 0; k < n; ++k) {
      iq[2 * k] = float(double(iq[2 * k]) + nstd * rng.normal());
      iq[2 * k + 1] = float(double(iq[2 * k + 1]) + nstd * rng.normal());
    }
  }
}

/// Number of samples in a capture: capture_seconds worth, rounded down to
/// whole frames.
inline std::size_t capture_sample_count(const SynthConfig& cfg) {
  const double want = cfg.sample_rate_hz * cfg.capture_seconds;
  require(want >= synth_detail::kFrameLen, "capture too short for one frame");
  const std::size_t frames = std::size_t(want) / synth_detail::kFrameLen;
  return frames * synth_detail::kFrameLen;
}

/// Synthesizes one capture for a device. A capture's randomness (payload
/// shuffles, phase noise, AWGN) derives from (master_seed, device, capture),
/// so regeneration is bitwise reproducible.
inline Capture synthesize_capture(const SynthConfig& cfg, const DeviceProfile& profile,
                                  int capture_index) {
  const std::size_t n = capture_sample_count(cfg);
  const int frames = int(n / synth_detail::kFrameLen);
  Rng rng(mix_seed(cfg.master_seed, 0x63617074ULL, std::uint64_t(profile.device_id),
                   std::uint64_t(capture_index)));
  Capture cap;
  cap.device_id = profile.device_id;
  cap.sample_rate_hz = cfg.sample_rate_hz;
  cap.samples = gen_baseband(frames, rng);
  apply_impairments(cap.samples, profile, cfg.sample_rate_hz, rng);
  return cap;
}

inline std::string profile_digest(const DeviceProfile& p) {
  std::string s = std::to_string(p.device_id) + "," + fmt_double(p.iq_gain_db) + "," +
                  fmt_double(p.iq_phase_rad) + "," + fmt_double(p.dc_i) + "," + fmt_double(p.dc_q) +
                  "," + fmt_double(p.cfo_hz) + "," + fmt_double(p.pn_sigma) + "," +
                  fmt_double(p.pa_c3) + "," + fmt_double(p.snr_db);
  return hex64(fnv1a64(s.data(), s.size()));
}

/// Generates the full dataset under out_dir and writes manifest.txt there.
inline std::vector<ManifestEntry> synthesize_dataset(const SynthConfig& cfg,
                                                     const std::string& out_dir) {
  require(cfg.n_devices > 0, "synthesize_dataset: need devices");
  require(cfg.captures_per_device > 0, "synthesize_dataset: need captures");
  std::filesystem::create_directories(out_dir);
  std::vector<ManifestEntry> entries;
  for (int d = 0; d < cfg.n_devices; ++d) {
    const DeviceProfile prof = make_device_profile(cfg, d);
    for (int c = 0; c < cfg.captures_per_device; ++c) {
      Capture cap = synthesize_capture(cfg, prof, c);
      const std::string path =
          (std::filesystem::path(out_dir) / ("dev" + std::to_string(d) + "_cap" + std::to_string(c) + ".iq"))
              .string();
      CaptureMeta meta;
      meta.source = "synthetic-qpsk";
      meta.generator_seed = cfg.master_seed;
      meta.impairment_digest = profile_digest(prof);
      write_capture(path, cap, meta);
      entries.push_back(ManifestEntry{d, path});
    }
  }
  write_manifest((std::filesystem::path(out_dir) / "manifest.txt").string(), entries, out_dir);
  return entries;
}

}  // namespace hinova
