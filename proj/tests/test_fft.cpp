// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "hinova/fft.hpp"
#include "hinova/reference.hpp"
#include "hinova/rng.hpp"

using namespace hinova;

TEST_CASE("real FFT matches the naive DFT") {
  Rng rng(101);
  for (int n : {8, 64, 256, 4096}) {
    RealFft<double> fft(n);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    std::vector<double> re(std::size_t(fft.bins())), im(std::size_t(fft.bins()));
    fft.forward(x.data(), re.data(), im.data());
    std::vector<double> rre(static_cast<std::size_t>(n)), rim(static_cast<std::size_t>(n));
    reference::dft_naive(x.data(), n, rre.data(), rim.data());
    for (int k = 0; k < fft.bins(); ++k) {
      REQUIRE_THAT(re[std::size_t(k)], Catch::Matchers::WithinAbs(rre[std::size_t(k)], 1e-8 * n));
      REQUIRE_THAT(im[std::size_t(k)], Catch::Matchers::WithinAbs(rim[std::size_t(k)], 1e-8 * n));
    }
  }
}

TEST_CASE("inverse transform reconstructs input times n") {
  Rng rng(102);
  const int n = 512;
  RealFft<float> fft(n);
  std::vector<float> x(static_cast<std::size_t>(n)), back(static_cast<std::size_t>(n));
  for (auto& v : x) v = float(rng.uniform(-2.0, 2.0));
  std::vector<float> re(std::size_t(fft.bins())), im(std::size_t(fft.bins()));
  fft.forward(x.data(), re.data(), im.data());
  fft.inverse(re.data(), im.data(), back.data());
  for (int i = 0; i < n; ++i)
    REQUIRE_THAT(back[std::size_t(i)] / float(n), Catch::Matchers::WithinAbs(x[std::size_t(i)], 1e-4));
}

TEST_CASE("fft autocorrelation equals direct summation") {
  Rng rng(103);
  SECTION("random lengths and lag counts") {
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 16 + int(rng.below(500));
      const int n_lags = 1 + int(rng.below(std::uint64_t(n)));
      std::vector<float> x(static_cast<std::size_t>(n));
      for (auto& v : x) v = float(rng.normal());
      const auto fast = autocorrelate(x.data(), n, n_lags);
      const auto slow = reference::autocorr_direct(x.data(), n, n_lags);
      REQUIRE(fast.size() == slow.size());
      const double scale = std::max(1e-12, std::abs(slow[0]));
      for (std::size_t k = 0; k < fast.size(); ++k)
        REQUIRE(std::abs(fast[k] - slow[k]) / scale < 1e-7);
    }
  }
  SECTION("production slice shape") {
    std::vector<float> x(2048);
    for (auto& v : x) v = float(rng.normal());
    const auto fast = autocorrelate(x.data(), 2048, 2048);
    const auto slow = reference::autocorr_direct(x.data(), 2048, 2048);
    const double scale = std::abs(slow[0]);
    for (std::size_t k = 0; k < fast.size(); ++k)
      REQUIRE(std::abs(fast[k] - slow[k]) / scale < 1e-7);
  }
}

TEST_CASE("autocorrelation of a pure tone oscillates at the tone period") {
  // r[k] of cos(2 pi f t) is proportional to cos(2 pi f k) for small k.
  const int n = 2048;
  const double f = 1.0 / 64.0;  // period 64 samples
  std::vector<float> x(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) x[std::size_t(t)] = float(std::cos(6.283185307179586 * f * t));
  const auto r = autocorrelate(x.data(), n, 256);
  REQUIRE(r[0] > 0.0);
  // Peak near one period, trough near half a period.
  REQUIRE(r[64] > 0.8 * r[0]);
  REQUIRE(r[32] < 0.1 * r[0]);
}

TEST_CASE("autocorrelate validates arguments") {
  std::vector<float> x(16, 1.0f);
  REQUIRE_THROWS_AS(autocorrelate(x.data(), 16, 0), Error);
  REQUIRE_THROWS_AS(autocorrelate(x.data(), 16, 17), Error);
}
