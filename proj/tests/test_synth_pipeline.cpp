// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hinova/dataio.hpp"
#include "hinova/preprocess.hpp"
#include "hinova/reference.hpp"
#include "hinova/synth.hpp"

using namespace hinova;

namespace {

std::string temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() / (std::string("hinova_test_") + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

DeviceProfile clean_profile() {
  DeviceProfile p;
  p.device_id = 0;
  p.snr_db = std::numeric_limits<double>::infinity();  // noise off
  return p;
}

}  // namespace

TEST_CASE("rrc taps are symmetric with energy sps") {
  const auto& h = synth_detail::rrc_taps();
  REQUIRE(h.size() == 33);
  double e = 0.0;
  for (double v : h) e += v * v;
  REQUIRE(e == Catch::Approx(4.0).epsilon(1e-12));
  for (std::size_t k = 0; k < h.size(); ++k)
    REQUIRE(h[k] == Catch::Approx(h[h.size() - 1 - k]).margin(1e-15));
  // Peak at center.
  for (std::size_t k = 0; k < h.size(); ++k) REQUIRE(std::abs(h[k]) <= std::abs(h[16]) + 1e-15);
}

TEST_CASE("baseband frames have zero mean and unit power") {
  Rng rng(77);
  const int frames = 40;
  auto x = gen_baseband(frames, rng);
  REQUIRE(x.size() == std::size_t(frames) * 1024 * 2);
  double pow_sum = 0.0;
  for (int f = 0; f < frames; ++f) {
    double si = 0.0, sq = 0.0;
    for (int n = 0; n < 1024; ++n) {
      const double i = x[std::size_t(f) * 2048 + 2 * std::size_t(n)];
      const double q = x[std::size_t(f) * 2048 + 2 * std::size_t(n) + 1];
      si += i;
      sq += q;
      pow_sum += i * i + q * q;
    }
    // Balanced symbol sets + circular shaping: frame mean is zero up to
    // float rounding of the stored samples.
    REQUIRE(std::abs(si / 1024.0) < 1e-6);
    REQUIRE(std::abs(sq / 1024.0) < 1e-6);
  }
  const double avg_power = pow_sum / (double(frames) * 1024.0);
  REQUIRE(avg_power == Catch::Approx(1.0).epsilon(0.15));
}

TEST_CASE("dc offset shifts the capture mean by exactly the profile value") {
  Rng rng(3);
  auto x = gen_baseband(20, rng);
  DeviceProfile p = clean_profile();
  p.dc_i = 0.01;
  p.dc_q = -0.02;
  Rng imp(5);
  apply_impairments(x, p, 1.0e6, imp);
  double si = 0.0, sq = 0.0;
  const std::size_t n = x.size() / 2;
  for (std::size_t k = 0; k < n; ++k) {
    si += x[2 * k];
    sq += x[2 * k + 1];
  }
  REQUIRE(std::abs(si / double(n) - 0.01) < 1e-6);
  REQUIRE(std::abs(sq / double(n) + 0.02) < 1e-6);
}

TEST_CASE("cfo advances phase by 2*pi*f/fs per sample") {
  // Constant-envelope input isolates the rotation.
  const int n = 4096;
  std::vector<float> x(std::size_t(n) * 2);
  for (int k = 0; k < n; ++k) {
    x[2 * std::size_t(k)] = 1.0f;
    x[2 * std::size_t(k) + 1] = 0.0f;
  }
  DeviceProfile p = clean_profile();
  p.cfo_hz = 1234.5;
  const double fs = 1.0e6;
  Rng imp(5);
  apply_impairments(x, p, fs, imp);
  // Mean per-sample advance, unwrapped via conjugate products.
  double total = 0.0;
  for (int k = 0; k + 1 < n; ++k) {
    const double i0 = x[2 * std::size_t(k)], q0 = x[2 * std::size_t(k) + 1];
    const double i1 = x[2 * std::size_t(k) + 2], q1 = x[2 * std::size_t(k) + 3];
    total += std::atan2(q1 * i0 - i1 * q0, i1 * i0 + q1 * q0);
  }
  const double step = total / double(n - 1);
  const double expect = 2.0 * M_PI * p.cfo_hz / fs;
  REQUIRE(std::abs(step - expect) < 1e-6);
  // Amplitude is preserved by a pure rotation.
  for (int k = 0; k < n; ++k) {
    const double m = std::hypot(double(x[2 * std::size_t(k)]), double(x[2 * std::size_t(k) + 1]));
    REQUIRE(m == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("iq gain imbalance scales rails exactly") {
  Rng rng(11);
  auto x = gen_baseband(2, rng);
  auto ref = x;
  DeviceProfile p = clean_profile();
  p.iq_gain_db = 0.9;
  Rng imp(5);
  apply_impairments(x, p, 1.0e6, imp);
  const double gi = std::pow(10.0, 0.9 / 40.0);
  const double gq = std::pow(10.0, -0.9 / 40.0);
  for (std::size_t k = 0; k < x.size() / 2; ++k) {
    REQUIRE(x[2 * k] == float(gi * double(ref[2 * k])));
    REQUIRE(x[2 * k + 1] == float(gq * double(ref[2 * k + 1])));
  }
}

TEST_CASE("cubic pa applies gain 1 + c3 at unit amplitude") {
  const int n = 256;
  std::vector<float> x(std::size_t(n) * 2);
  for (int k = 0; k < n; ++k) {
    x[2 * std::size_t(k)] = 0.6f;
    x[2 * std::size_t(k) + 1] = 0.8f;  // |x|^2 = 1
  }
  DeviceProfile p = clean_profile();
  p.pa_c3 = -0.1;
  Rng imp(5);
  apply_impairments(x, p, 1.0e6, imp);
  const double mag2 = double(0.6f) * double(0.6f) + double(0.8f) * double(0.8f);
  const double g = 1.0 - 0.1 * mag2;
  for (int k = 0; k < n; ++k) {
    REQUIRE(x[2 * std::size_t(k)] == float(g * double(0.6f)));
    REQUIRE(x[2 * std::size_t(k) + 1] == float(g * double(0.8f)));
  }
}

TEST_CASE("awgn lands within half a dB of the requested snr") {
  Rng rng(21);
  auto clean = gen_baseband(200, rng);
  auto noisy = clean;
  DeviceProfile p = clean_profile();
  p.snr_db = 10.0;
  Rng imp(5);
  apply_impairments(noisy, p, 1.0e6, imp);
  double psig = 0.0, pnoise = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    psig += double(clean[k]) * double(clean[k]);
    const double d = double(noisy[k]) - double(clean[k]);
    pnoise += d * d;
  }
  const double snr_db = 10.0 * std::log10(psig / pnoise);
  REQUIRE(std::abs(snr_db - 10.0) < 0.5);
}

TEST_CASE("capture synthesis is bitwise deterministic") {
  SynthConfig cfg;
  cfg.capture_seconds = 0.02;
  cfg.master_seed = 99;
  const DeviceProfile prof = make_device_profile(cfg, 3);
  const Capture a = synthesize_capture(cfg, prof, 1);
  const Capture b = synthesize_capture(cfg, prof, 1);
  REQUIRE(a.samples == b.samples);
  // A different capture index yields different payloads and noise.
  const Capture c = synthesize_capture(cfg, prof, 2);
  REQUIRE(a.samples != c.samples);
}

TEST_CASE("capture length is whole frames") {
  SynthConfig cfg;  // 0.42 s at 1 MS/s
  REQUIRE(capture_sample_count(cfg) == 419840);  // 410 frames
  REQUIRE(capture_sample_count(cfg) % 2048 == 0);
}

TEST_CASE("device profiles are distinct and scale with separability") {
  SynthConfig cfg;
  cfg.master_seed = 12345;
  std::vector<DeviceProfile> profs;
  for (int d = 0; d < 15; ++d) profs.push_back(make_device_profile(cfg, d));
  int distinct_pairs = 0;
  for (int a = 0; a < 15; ++a)
    for (int b = a + 1; b < 15; ++b) {
      const bool differ = profs[std::size_t(a)].cfo_hz != profs[std::size_t(b)].cfo_hz ||
                          profs[std::size_t(a)].iq_gain_db != profs[std::size_t(b)].iq_gain_db;
      if (differ) ++distinct_pairs;
    }
  REQUIRE(distinct_pairs == 105);

  SynthConfig half = cfg;
  half.separability = 0.5;
  SynthConfig zero = cfg;
  zero.separability = 0.0;
  for (int d = 0; d < 15; ++d) {
    const DeviceProfile p1 = profs[std::size_t(d)];
    const DeviceProfile ph = make_device_profile(half, d);
    const DeviceProfile pz = make_device_profile(zero, d);
    REQUIRE(ph.iq_gain_db == 0.5 * p1.iq_gain_db);
    REQUIRE(ph.cfo_hz == 0.5 * p1.cfo_hz);
    REQUIRE(ph.pa_c3 == 0.5 * p1.pa_c3);
    REQUIRE(pz.iq_gain_db == 0.0);
    REQUIRE(pz.iq_phase_rad == 0.0);
    REQUIRE(pz.dc_i == 0.0);
    REQUIRE(pz.dc_q == 0.0);
    REQUIRE(pz.cfo_hz == 0.0);
    REQUIRE(pz.pn_sigma == 0.0);
    REQUIRE(pz.pa_c3 == 0.0);
    REQUIRE(pz.snr_db == cfg.snr_db);
  }
}

TEST_CASE("capture files round-trip bitwise with validated sidecars") {
  const std::string dir = temp_dir("dataio");
  Capture cap;
  cap.device_id = 7;
  cap.sample_rate_hz = 2.5e6;
  Rng rng(1);
  cap.samples = gen_baseband(3, rng);
  CaptureMeta meta;
  meta.source = "unit";
  meta.generator_seed = 42;
  meta.impairment_digest = "00ff";
  const std::string path = dir + "/a.iq";
  write_capture(path, cap, meta);

  CaptureMeta got_meta;
  const Capture got = read_capture(path, &got_meta);
  REQUIRE(got.device_id == 7);
  REQUIRE(got.sample_rate_hz == 2.5e6);
  REQUIRE(got.samples == cap.samples);
  REQUIRE(got_meta.source == "unit");
  REQUIRE(got_meta.generator_seed == 42);
  REQUIRE(got_meta.impairment_digest == "00ff");

  SECTION("payload length mismatch is rejected") {
    std::ofstream os(path, std::ios::binary | std::ios::app);
    os.write("xxxx", 4);
    os.close();
    REQUIRE_THROWS_AS(read_capture(path), Error);
  }
  SECTION("missing sidecar is rejected") {
    std::filesystem::remove(path + ".meta");
    REQUIRE_THROWS_AS(read_capture(path), Error);
  }
}

TEST_CASE("manifest round-trips device ids and resolves relative paths") {
  const std::string dir = temp_dir("manifest");
  SynthConfig cfg;
  cfg.n_devices = 3;
  cfg.captures_per_device = 2;
  cfg.capture_seconds = 0.004;
  const auto entries = synthesize_dataset(cfg, dir);
  REQUIRE(entries.size() == 6);
  const auto back = read_manifest(dir + "/manifest.txt");
  REQUIRE(back.size() == entries.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    REQUIRE(back[i].device_id == entries[i].device_id);
    const Capture cap = read_capture(back[i].path);
    REQUIRE(cap.device_id == back[i].device_id);
  }
}

TEST_CASE("reusable autocorrelator matches the direct reference") {
  Rng rng(5);
  const int n = 64;
  std::vector<float> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = float(rng.normal());
  Autocorrelator ac(n);
  std::vector<double> fast(static_cast<std::size_t>(n));
  ac.transform(x.data(), n, fast.data());
  const auto direct = reference::autocorr_direct(x.data(), n, n);
  for (int k = 0; k < n; ++k)
    REQUIRE(fast[std::size_t(k)] == Catch::Approx(direct[std::size_t(k)]).margin(1e-12 * direct[0]));
  // Biased autocorrelation is bounded by its zero lag.
  for (int k = 0; k < n; ++k) REQUIRE(std::abs(fast[std::size_t(k)]) <= fast[0] + 1e-12);
  // Repeat use of the same engine gives identical results.
  std::vector<double> again(static_cast<std::size_t>(n));
  ac.transform(x.data(), n, again.data());
  REQUIRE(again == fast);
}

TEST_CASE("featurize normalizes each row to unit zero lag") {
  Rng rng(6);
  const int len = 128;
  std::vector<float> iq(std::size_t(len) * 2);
  for (auto& v : iq) v = float(0.5 * rng.normal());
  Autocorrelator ac(len);
  std::vector<float> feat(std::size_t(2) * len);
  featurize_slice(iq.data(), len, true, ac, feat.data());
  REQUIRE(feat[0] == 1.0f);
  REQUIRE(feat[std::size_t(len)] == 1.0f);
  for (std::size_t i = 0; i < feat.size(); ++i) {
    REQUIRE(std::isfinite(feat[i]));
    REQUIRE(std::abs(feat[i]) <= 1.0f + 1e-6f);
  }
  // Unnormalized path matches the direct reference per row.
  std::vector<float> raw(std::size_t(2) * len);
  featurize_slice(iq.data(), len, false, ac, raw.data());
  std::vector<float> chan(static_cast<std::size_t>(len));
  for (int t = 0; t < len; ++t) chan[std::size_t(t)] = iq[2 * std::size_t(t)];
  const auto direct = reference::autocorr_direct(chan.data(), len, len);
  for (int k = 0; k < len; ++k)
    REQUIRE(double(raw[std::size_t(k)]) == Catch::Approx(direct[std::size_t(k)]).margin(1e-6 * direct[0]));
}

TEST_CASE("featurize rejects zero-energy slices") {
  const int len = 32;
  std::vector<float> iq(std::size_t(len) * 2, 0.0f);
  Autocorrelator ac(len);
  std::vector<float> feat(std::size_t(2) * len);
  REQUIRE_THROWS_WITH(featurize_slice(iq.data(), len, true, ac, feat.data()),
                      Catch::Matchers::ContainsSubstring("zero-energy"));
}

TEST_CASE("slice dataset construction indexes captures and is thread count invariant") {
  const std::string dir = temp_dir("slices");
  SynthConfig cfg;
  cfg.n_devices = 3;
  cfg.captures_per_device = 2;
  cfg.capture_seconds = 0.0092;  // 8 frames -> 4 whole slices of 2048
  const auto entries = synthesize_dataset(cfg, dir);
  const SliceDataset ds = build_slice_dataset(entries, 2048, true, nullptr);
  REQUIRE(ds.n() == 6 * 4);
  REQUIRE(ds.slice_len == 2048);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    REQUIRE(ds.device_ids[i] == entries[std::size_t(ds.capture_ids[i])].device_id);
    REQUIRE(ds.slice_in_capture[i] == int(i % 4));
  }
  ThreadPool pool(3);
  const SliceDataset par = build_slice_dataset(entries, 2048, true, &pool);
  REQUIRE(par.features == ds.features);
  REQUIRE(par.device_ids == ds.device_ids);
}

TEST_CASE("feature cache round-trips bitwise and validates its payload") {
  const std::string dir = temp_dir("hnf");
  SynthConfig cfg;
  cfg.n_devices = 2;
  cfg.captures_per_device = 1;
  cfg.capture_seconds = 0.0045;
  const auto entries = synthesize_dataset(cfg, dir);
  const SliceDataset ds = build_slice_dataset(entries, 2048, true, nullptr);
  const std::string path = dir + "/cache.hnf";
  save_slice_dataset(path, ds);
  const SliceDataset got = load_slice_dataset(path);
  REQUIRE(got.slice_len == ds.slice_len);
  REQUIRE(got.normalized == ds.normalized);
  REQUIRE(got.features == ds.features);
  REQUIRE(got.device_ids == ds.device_ids);
  REQUIRE(got.capture_ids == ds.capture_ids);
  REQUIRE(got.slice_in_capture == ds.slice_in_capture);

  SECTION("trailing bytes are rejected") {
    std::ofstream os(path, std::ios::binary | std::ios::app);
    os.write("z", 1);
    os.close();
    REQUIRE_THROWS_WITH(load_slice_dataset(path), Catch::Matchers::ContainsSubstring("trailing"));
  }
  SECTION("bad magic is rejected") {
    write_text_file(path, "HNX 9\n");
    REQUIRE_THROWS_WITH(load_slice_dataset(path), Catch::Matchers::ContainsSubstring("magic"));
  }
}
