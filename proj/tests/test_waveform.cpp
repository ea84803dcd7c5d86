#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

#include "circrx/waveform.hpp"

using namespace circrx;
using Catch::Approx;

namespace {

// single-bin DFT amplitude at f (integer number of cycles assumed)
double bin_amp(const iq_waveform& w, double f) {
  cplx acc{0.0, 0.0};
  const size_t n = w.samples.size();
  for (size_t i = 0; i < n; ++i)
    acc += w.samples[i] *
           std::exp(cplx(0.0, -2.0 * kPi * f * double(i) / w.fs));
  return std::abs(acc) / double(n);
}

}  // namespace

TEST_CASE("two tone generator", "[waveform]") {
  const auto w = two_tone(-1e6, 1e6, 1.0, 16e6, 16384);
  double peak = 0.0;
  for (const auto& s : w.samples) peak = std::max(peak, std::abs(s));
  CHECK(peak == Approx(2.0).margin(1e-3));
  CHECK(bin_amp(w, -1e6) == Approx(1.0).epsilon(1e-9));
  CHECK(bin_amp(w, 1e6) == Approx(1.0).epsilon(1e-9));
  CHECK(bin_amp(w, 3e6) < 1e-9);
  CHECK_THROWS_AS(two_tone(9e6, 1e6, 1.0, 16e6, 64), std::invalid_argument);
}

TEST_CASE("cubic channel produces in-band intermods only", "[waveform]") {
  const auto x = two_tone(-1e6, 1e6, 1.0, 16e6, 16384);
  channel_model ch;
  ch.terms = {{3, 0, cplx(0.1, 0.0)}};
  const auto y = apply_channel(x, ch);
  // complex-baseband cubic of a unit two-tone: fundamentals at 3*h3, IM3
  // lines at 1*h3 each (the 3/4 factor belongs to the real-passband form)
  CHECK(bin_amp(y, -1e6) == Approx(0.3).epsilon(1e-6));
  CHECK(bin_amp(y, 1e6) == Approx(0.3).epsilon(1e-6));
  CHECK(bin_amp(y, -3e6) == Approx(0.1).epsilon(1e-6));
  CHECK(bin_amp(y, 3e6) == Approx(0.1).epsilon(1e-6));
  // nothing outside the odd-order line set
  CHECK(bin_amp(y, 2e6) < 1e-9);
  CHECK(bin_amp(y, 5e6) < 1e-9);

  // amplitude scaling follows amp^3
  const auto x2 = two_tone(-1e6, 1e6, 0.5, 16e6, 16384);
  const auto y2 = apply_channel(x2, ch);
  CHECK(bin_amp(y2, 3e6) == Approx(0.1 * 0.125).epsilon(1e-6));
}

TEST_CASE("srrc taps", "[waveform]") {
  const int sps = 16;
  const auto h = srrc_taps(0.22, 8, sps);
  CHECK(h.size() == size_t(8 * sps + 1));
  double e = 0.0;
  for (double v : h) e += v * v;
  CHECK(e == Approx(1.0).margin(1e-9));

  // matched pair is Nyquist: the full raised cosine has (near) zero ISI.
  // Residual ISI comes from truncation and shrinks with span: ~1.6e-2 at
  // span 8, ~4e-5 at span 64 (beta = 0.22).
  auto worst_isi = [&](int span) {
    const auto g = srrc_taps(0.22, span, sps);
    std::vector<double> rc(2 * g.size() - 1, 0.0);
    for (size_t i = 0; i < g.size(); ++i)
      for (size_t j = 0; j < g.size(); ++j) rc[i + j] += g[i] * g[j];
    const size_t mid = g.size() - 1;
    double worst = 0.0;
    for (size_t k = 1; k * sps <= mid; ++k) {
      worst = std::max(worst, std::abs(rc[mid + k * sps] / rc[mid]));
      worst = std::max(worst, std::abs(rc[mid - k * sps] / rc[mid]));
    }
    return worst;
  };
  CHECK(worst_isi(8) < 0.02);
  CHECK(worst_isi(64) < 1e-3);

  // the beta singularity points are handled
  const auto h1 = srrc_taps(1.0, 8, 4);
  for (double v : h1) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(srrc_taps(0.0, 8, 16), std::invalid_argument);
  CHECK_THROWS_AS(srrc_taps(1.5, 8, 16), std::invalid_argument);
}

TEST_CASE("multicarrier source", "[waveform]") {
  ofdm_like_config cfg;
  const auto w = ofdm_like(cfg);
  // output carries the known preamble up front plus the payload
  CHECK(w.samples.size() == cfg.length + cfg.sync_len);
  CHECK(w.power() == Approx(1.0).margin(1e-3));

  // deterministic for a fixed seed
  const auto w2 = ofdm_like(cfg);
  REQUIRE(w2.samples.size() == w.samples.size());
  bool same = true;
  for (size_t i = 0; i < w.samples.size(); ++i)
    same = same && w.samples[i] == w2.samples[i];
  CHECK(same);

  // occupied band 1..5 MHz; DC notch at least 30 dB down
  const auto spec = psd(w);
  double inband = 0.0;
  int n_in = 0;
  double notch = -1e9;
  for (size_t i = 0; i < spec.freq_hz.size(); ++i) {
    const double f = spec.freq_hz[i];
    if (f > 1.3e6 && f < 4.7e6) {
      inband += spec.psd_db[i];
      ++n_in;
    }
    if (std::abs(f) < 0.6e6) notch = std::max(notch, spec.psd_db[i]);
  }
  inband /= n_in;
  CHECK(inband - notch >= 30.0);

  ofdm_like_config bad = cfg;
  bad.first_center = 0.3e6;
  CHECK_THROWS_AS(ofdm_like(bad), std::invalid_argument);
}

TEST_CASE("channel identity and delay", "[waveform]") {
  ofdm_like_config cfg;
  cfg.length = 4000;
  const auto x = ofdm_like(cfg);

  channel_model ident;
  ident.terms = {{1, 0, cplx(1.0, 0.0)}};
  const auto y = apply_channel(x, ident);
  double d = 0.0;
  for (size_t i = 0; i < x.samples.size(); ++i)
    d = std::max(d, std::abs(y.samples[i] - x.samples[i]));
  CHECK(d < 1e-15);

  channel_model delayed;
  delayed.terms = {{1, 25, cplx(1.0, 0.0)}};
  const auto yd = apply_channel(x, delayed);
  double dd = 0.0;
  for (size_t i = 25; i < x.samples.size(); ++i)
    dd = std::max(dd, std::abs(yd.samples[i] - x.samples[i - 25]));
  CHECK(dd < 1e-15);

  channel_model bad;
  bad.terms = {{0, 0, cplx(1.0, 0.0)}};
  CHECK_THROWS_AS(apply_channel(x, bad), std::invalid_argument);
}

TEST_CASE("synchronizer", "[waveform]") {
  ofdm_like_config cfg;
  cfg.length = 12000;
  cfg.sync_len = 1500;
  const auto x = ofdm_like(cfg);
  iq_waveform pre;
  pre.fs = x.fs;
  pre.samples.assign(x.samples.begin(), x.samples.begin() + cfg.sync_len);

  // delay by 137 samples
  iq_waveform rx;
  rx.fs = x.fs;
  rx.samples.assign(137, cplx{0.0, 0.0});
  rx.samples.insert(rx.samples.end(), x.samples.begin(), x.samples.end());
  CHECK(sync(rx, pre) == 137);

  // still finds it at 20 dB SNR
  channel_model noisy;
  noisy.terms = {{1, 0, cplx(1.0, 0.0)}};
  noisy.noise_density_dbm_hz = -10.0 * std::log10(rx.fs) - 20.0;
  const auto rxn = apply_channel(rx, noisy, 99);
  CHECK(sync(rxn, pre) == 137);

  // pure noise: no credible peak
  iq_waveform junk;
  junk.fs = x.fs;
  junk.samples.assign(8000, cplx{0.0, 0.0});
  channel_model only_noise;
  only_noise.noise_density_dbm_hz = -10.0 * std::log10(junk.fs);
  const auto jn = apply_channel(junk, only_noise, 5);
  CHECK_THROWS_AS(sync(jn, pre), std::runtime_error);

  CHECK_THROWS_AS(sync(pre, rx), std::invalid_argument);
}

TEST_CASE("welch psd", "[waveform]") {
  // unit-power white noise: flat density at -10 log10(fs)
  iq_waveform w;
  w.fs = 160e6;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  w.samples.resize(65536);
  for (auto& s : w.samples) s = cplx(g(rng), g(rng));
  const auto r = psd(w, 1024);
  const double expect = -10.0 * std::log10(w.fs);
  double mean = 0.0;
  for (double v : r.psd_db) mean += v;
  mean /= double(r.psd_db.size());
  CHECK(mean == Approx(expect).margin(0.5));

  // Parseval: integrated density equals waveform power
  CHECK(10.0 * std::log10(r.total_power / w.power()) == Approx(0.0).margin(0.1));

  // a tone concentrates in one bin
  const auto t = two_tone(20e6, 20e6, 0.5, 160e6, 65536);
  const auto rt = psd(t, 1024);
  size_t best = 0;
  for (size_t i = 1; i < rt.psd_db.size(); ++i)
    if (rt.psd_db[i] > rt.psd_db[best]) best = i;
  CHECK(rt.freq_hz[best] == Approx(20e6).margin(160e6 / 1024.0));

  CHECK_THROWS_AS(psd(w, 1000), std::invalid_argument);
}

TEST_CASE("iq file round trip", "[waveform]") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "circrx_wave_test";
  fs::create_directories(dir);
  const std::string path = (dir / "sig.iq").string();

  ofdm_like_config cfg;
  cfg.length = 3000;
  const auto x = ofdm_like(cfg);
  save_iq(path, x, 42);
  const auto y = load_iq(path);
  REQUIRE(y.samples.size() == x.samples.size());
  CHECK(y.fs == x.fs);
  bool same = true;
  for (size_t i = 0; i < x.samples.size(); ++i)
    same = same && x.samples[i] == y.samples[i];
  CHECK(same);

  CHECK_THROWS_AS(load_iq((dir / "missing.iq").string()), std::runtime_error);
  fs::remove_all(dir);
}
