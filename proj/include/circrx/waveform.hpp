#pragma once
// Baseband signal plumbing: two-tone and shaped multicarrier generators,
// SRRC pulse shaping, a memory-polynomial leakage channel, correlation
// sync, and Welch PSD estimation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "circrx/netcore.hpp"

namespace circrx {

struct iq_waveform {
  std::vector<cplx> samples;
  double fs = 160e6;

  double power() const {
    if (samples.empty()) throw std::invalid_argument("empty waveform");
    double p = 0.0;
    for (const auto& s : samples) p += std::norm(s);
    return p / double(samples.size());
  }
};

namespace detail {

// in-place radix-2 FFT; n must be a power of two
inline void fft(std::vector<cplx>& a, bool inverse = false) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / double(len);
    const cplx wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cplx w{1.0, 0.0};
      for (size_t k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= double(n);
}

}  // namespace detail

inline iq_waveform two_tone(double f1, double f2, double amp, double fs,
                            size_t n) {
  if (std::abs(f1) >= fs / 2.0 || std::abs(f2) >= fs / 2.0)
    throw std::invalid_argument("tone frequency aliases");
  if (n == 0) throw std::invalid_argument("n must be > 0");
  iq_waveform w;
  w.fs = fs;
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double t = double(i) / fs;
    w.samples[i] = amp * (std::exp(cplx(0.0, 2.0 * kPi * f1 * t)) +
                          std::exp(cplx(0.0, 2.0 * kPi * f2 * t)));
  }
  return w;
}

// Unit-energy square-root raised-cosine taps; length span*sps + 1.
inline std::vector<double> srrc_taps(double beta, int span_symbols,
                                     int samples_per_symbol) {
  if (beta <= 0.0 || beta > 1.0) throw std::invalid_argument("beta in (0, 1]");
  if (span_symbols < 1 || samples_per_symbol < 1)
    throw std::invalid_argument("bad srrc geometry");
  const int sps = samples_per_symbol;
  const int half = span_symbols * sps / 2;
  std::vector<double> h(2 * half + 1);
  for (int i = -half; i <= half; ++i) {
    const double t = double(i) / sps;  // in symbol periods
    double v;
    if (std::abs(t) < 1e-12) {
      v = 1.0 - beta + 4.0 * beta / kPi;
    } else if (std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-9) {
      v = beta / std::sqrt(2.0) *
          ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) +
           (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
    } else {
      const double num = std::sin(kPi * t * (1.0 - beta)) +
                         4.0 * beta * t * std::cos(kPi * t * (1.0 + beta));
      const double den = kPi * t * (1.0 - 16.0 * beta * beta * t * t);
      v = num / den;
    }
    h[i + half] = v;
  }
  double e = 0.0;
  for (double x : h) e += x * x;
  const double s = 1.0 / std::sqrt(e);
  for (double& x : h) x *= s;
  return h;
}

struct ofdm_like_config {
  double fs = 160e6;
  int n_subcarriers = 10;
  double subcarrier_bw = 0.4e6;
  double total_bw = 5e6;
  double first_center = 1.2e6;  // DC..1 MHz notch respected
  double srrc_beta = 0.22;
  int srrc_span = 8;  // symbols
  size_t length = 50000;
  size_t sync_len = 2000;
  std::uint64_t seed = 1;

  void validate() const {
    if (fs <= 0.0 || subcarrier_bw <= 0.0 || n_subcarriers < 1 || length == 0)
      throw std::invalid_argument("bad multicarrier config");
    const double top = first_center + (n_subcarriers - 1) * subcarrier_bw +
                       subcarrier_bw / 2.0 * (1.0 + srrc_beta);
    if (top > total_bw + subcarrier_bw)  // generous skirt allowance
      throw std::invalid_argument("subcarriers exceed total bandwidth");
    if (first_center - subcarrier_bw / 2.0 * (1.0 + srrc_beta) < 0.9e6)
      throw std::invalid_argument("notch violated");
  }
};

// 10 independent QPSK streams, SRRC-shaped at 0.4 MBd, frequency-shifted to
// 1.2..4.8 MHz centers. Unit average power; first sync_len samples act as
// the known preamble. Deterministic per seed.
inline iq_waveform ofdm_like(const ofdm_like_config& cfg) {
  cfg.validate();
  const size_t n = cfg.length + cfg.sync_len;
  const int sps = int(std::round(cfg.fs / cfg.subcarrier_bw));
  const auto h = srrc_taps(cfg.srrc_beta, cfg.srrc_span, sps);
  const int half = int(h.size() / 2);
  const size_t n_sym = (n + h.size()) / sps + 2;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> bits(0, 3);
  const double r2 = std::sqrt(0.5);

  iq_waveform w;
  w.fs = cfg.fs;
  w.samples.assign(n, cplx{0.0, 0.0});
  std::vector<cplx> shaped(n, cplx{0.0, 0.0});
  for (int m = 0; m < cfg.n_subcarriers; ++m) {
    std::fill(shaped.begin(), shaped.end(), cplx{0.0, 0.0});
    for (size_t k = 0; k < n_sym; ++k) {
      const int b = bits(rng);
      const cplx sym(r2 * (b & 1 ? 1.0 : -1.0), r2 * (b & 2 ? 1.0 : -1.0));
      const long start = long(k) * sps - half;
      for (size_t i = 0; i < h.size(); ++i) {
        const long idx = start + long(i);
        if (idx >= 0 && idx < long(n)) shaped[idx] += sym * h[i];
      }
    }
    const double fc = cfg.first_center + m * cfg.subcarrier_bw;
    for (size_t i = 0; i < n; ++i)
      w.samples[i] +=
          shaped[i] * std::exp(cplx(0.0, 2.0 * kPi * fc * double(i) / cfg.fs));
  }
  const double p = w.power();
  const double s = 1.0 / std::sqrt(p);
  for (auto& x : w.samples) x *= s;
  return w;
}

// --- synthetic leakage channel ------------------------------------------

struct channel_model {
  struct term {
    int order = 1;  // p >= 1; contributes x(n-d)|x(n-d)|^(p-1)
    int delay = 0;
    cplx coeff{1.0, 0.0};
  };
  std::vector<term> terms;
  double noise_density_dbm_hz = -1e9;  // effectively off by default
  double full_scale_dbm = 0.0;         // calibration: unit power <-> this dBm
};

inline iq_waveform apply_channel(const iq_waveform& x, const channel_model& ch,
                                 std::uint64_t seed = 1) {
  for (const auto& t : ch.terms)
    if (t.order < 1 || t.delay < 0)
      throw std::invalid_argument("bad channel term");
  iq_waveform y;
  y.fs = x.fs;
  y.samples.assign(x.samples.size(), cplx{0.0, 0.0});
  for (const auto& t : ch.terms) {
    for (size_t i = t.delay; i < x.samples.size(); ++i) {
      const cplx v = x.samples[i - t.delay];
      const double mag = std::abs(v);
      y.samples[i] += t.coeff * v * std::pow(mag, t.order - 1);
    }
  }
  if (ch.noise_density_dbm_hz > -300.0) {
    const double p_noise =
        std::pow(10.0, (ch.noise_density_dbm_hz - ch.full_scale_dbm) / 10.0) *
        x.fs;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, std::sqrt(p_noise / 2.0));
    for (auto& s : y.samples) s += cplx(g(rng), g(rng));
  }
  return y;
}

// argmax of the normalized cross-correlation; throws "sync failed" when the
// peak is less than 3 dB above the best competitor.
inline size_t sync(const iq_waveform& rx, const iq_waveform& preamble) {
  const size_t np = preamble.samples.size();
  if (np == 0 || np >= rx.samples.size())
    throw std::invalid_argument("preamble must be shorter than rx");
  const size_t n_off = rx.samples.size() - np + 1;
  std::vector<double> corr(n_off);
  double pe = 0.0;
  for (const auto& s : preamble.samples) pe += std::norm(s);
  for (size_t off = 0; off < n_off; ++off) {
    cplx acc{0.0, 0.0};
    double re = 0.0;
    for (size_t i = 0; i < np; ++i) {
      acc += rx.samples[off + i] * std::conj(preamble.samples[i]);
      re += std::norm(rx.samples[off + i]);
    }
    corr[off] = re > 0.0 ? std::norm(acc) / (re * pe) : 0.0;
  }
  size_t best = 0;
  for (size_t i = 1; i < n_off; ++i)
    if (corr[i] > corr[best]) best = i;
  double runner = 0.0;
  for (size_t i = 0; i < n_off; ++i) {
    if (i + np / 4 >= best && best + np / 4 >= i) continue;  // guard zone
    runner = std::max(runner, corr[i]);
  }
  if (runner > 0.0 && corr[best] < 2.0 * runner)  // < 3 dB margin
    throw std::runtime_error("sync failed");
  if (corr[best] <= 0.0) throw std::runtime_error("sync failed");
  return best;
}

// --- Welch PSD ------------------------------------------------------------

struct psd_result {
  std::vector<double> freq_hz;  // ascending, -fs/2 .. fs/2
  std::vector<double> psd_db;   // dB rel. full scale, per Hz
  double total_power = 0.0;     // integral of the density
};

inline psd_result psd(const iq_waveform& x, size_t nfft = 4096,
                      int segments = 0) {
  if (nfft == 0 || (nfft & (nfft - 1)) != 0)
    throw std::invalid_argument("nfft must be a power of two");
  if (nfft > x.samples.size())
    throw std::invalid_argument("nfft exceeds waveform length");
  const size_t hop = nfft / 2;
  size_t max_segs = (x.samples.size() - nfft) / hop + 1;
  const size_t nseg = segments > 0 ? std::min<size_t>(segments, max_segs) : max_segs;

  std::vector<double> win(nfft);
  double u = 0.0;
  for (size_t i = 0; i < nfft; ++i) {
    win[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * double(i) / double(nfft));
    u += win[i] * win[i];
  }

  std::vector<double> acc(nfft, 0.0);
  std::vector<cplx> buf(nfft);
  for (size_t s = 0; s < nseg; ++s) {
    const size_t off = s * hop;
    for (size_t i = 0; i < nfft; ++i) buf[i] = x.samples[off + i] * win[i];
    detail::fft(buf);
    for (size_t i = 0; i < nfft; ++i) acc[i] += std::norm(buf[i]);
  }
  const double scale = 1.0 / (double(nseg) * u * x.fs);

  psd_result r;
  r.freq_hz.resize(nfft);
  r.psd_db.resize(nfft);
  const double df = x.fs / double(nfft);
  for (size_t i = 0; i < nfft; ++i) {
    const size_t k = (i + nfft / 2) % nfft;  // fftshift
    const double f = (double(i) - double(nfft / 2)) * df;
    const double d = acc[k] * scale;
    r.freq_hz[i] = f;
    r.psd_db[i] = 10.0 * std::log10(std::max(d, 1e-300));
    r.total_power += d * df;
  }
  return r;
}

// --- IQ file IO -------------------------------------------------------------
// Interleaved little-endian float64 (I, Q) pairs plus a JSON sidecar.

inline void save_iq(const std::string& path, const iq_waveform& w,
                    std::uint64_t seed = 0, double full_scale_dbm = 0.0) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  for (const auto& s : w.samples) {
    const double re = s.real(), im = s.imag();
    f.write(reinterpret_cast<const char*>(&re), sizeof(double));
    f.write(reinterpret_cast<const char*>(&im), sizeof(double));
  }
  nlohmann::json side{{"fs_hz", w.fs},
                      {"full_scale_dbm", full_scale_dbm},
                      {"seed", seed}};
  std::ofstream sf(path + ".json");
  sf << side.dump(2) << "\n";
}

inline iq_waveform load_iq(const std::string& path) {
  std::ifstream sf(path + ".json");
  if (!sf) throw std::runtime_error("missing sidecar for " + path);
  nlohmann::json side;
  sf >> side;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  iq_waveform w;
  w.fs = side.at("fs_hz").get<double>();
  double re, im;
  while (f.read(reinterpret_cast<char*>(&re), sizeof(double)) &&
         f.read(reinterpret_cast<char*>(&im), sizeof(double)))
    w.samples.emplace_back(re, im);
  if (w.samples.empty()) throw std::runtime_error("empty iq file " + path);
  return w;
}

}  // namespace circrx
