#pragma once
// Digital self-interference cancellation: memory-polynomial basis, ridge
// least-squares training on a leading segment, cancellation, and metrics.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "circrx/waveform.hpp"

namespace circrx {

struct sic_model {
  int delay_spread = 45;
  std::vector<int> order_set{1, 2, 3, 4, 5, 6, 7};
  Eigen::VectorXcd coeffs;  // order-major: [order][delay]
  double fs = 160e6;

  int n_columns() const { return int(order_set.size()) * delay_spread; }
};

struct sic_metrics {
  double sic_main_db = 0.0;
  double sic_im3_db = 0.0;
  double residual_floor_db = 0.0;  // median out-of-band residual density
  size_t training_len = 0;
};

// Regression matrix: one column per (order p, delay d) with entries
// x(n-d)|x(n-d)|^(p-1). Rows cover the full record (zero-padded history).
inline Eigen::MatrixXcd build_basis(const iq_waveform& x, int delay_spread,
                                    const std::vector<int>& order_set) {
  if (delay_spread < 1 || order_set.empty())
    throw std::invalid_argument("bad basis geometry");
  for (int p : order_set)
    if (p < 1) throw std::invalid_argument("orders must be >= 1");
  const long n = long(x.samples.size());
  if (n <= delay_spread)
    throw std::invalid_argument("waveform shorter than delay spread");
  Eigen::MatrixXcd m(n, long(order_set.size()) * delay_spread);
  long col = 0;
  for (int p : order_set)
    for (int d = 0; d < delay_spread; ++d, ++col)
      for (long i = 0; i < n; ++i) {
        const cplx v = i >= d ? x.samples[i - d] : cplx{0.0, 0.0};
        m(i, col) = p == 1 ? v : v * std::pow(std::abs(v), p - 1);
      }
  return m;
}

// 2-norm condition estimate of (a subset of rows of) the regression matrix;
// large values flag collinear columns (e.g. constant-modulus inputs make
// orders p and p+2 proportional) and motivate the ridge term in train().
inline double basis_condition(const Eigen::MatrixXcd& basis, long max_rows = 4000) {
  const long rows = std::min<long>(basis.rows(), max_rows);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(basis.topRows(rows));
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / (s(s.size() - 1));
}

struct train_options {
  // Scaled by the mean column energy. The default sits at the bias/variance
  // knee for the demo-scale problem: much larger shrinks the weak high-order
  // columns and leaves a skirt-shaped residual, much smaller lets the
  // near-collinear order pairs amplify the noise.
  double ridge = 1e-10;
  double cond_warn_threshold = 1e10;
};

// Ridge-regularized least squares over the first training_len rows.
// Deterministic (ColPivHouseholderQR on the augmented system).
inline sic_model train(const iq_waveform& y, const Eigen::MatrixXcd& basis,
                       long training_len, int delay_spread,
                       const std::vector<int>& order_set,
                       const train_options& opt = {}) {
  const long cols = basis.cols();
  if (training_len < 4 * cols)
    throw std::invalid_argument("training_len must be >= 4x column count");
  if (training_len > basis.rows() || long(y.samples.size()) != basis.rows())
    throw std::invalid_argument("dimension mismatch");

  Eigen::MatrixXcd a = basis.topRows(training_len);
  Eigen::VectorXcd b(training_len);
  for (long i = 0; i < training_len; ++i) b(i) = y.samples[i];

  const double col_energy = a.squaredNorm() / double(cols);
  const double lambda = opt.ridge * col_energy;

  // augmented system [A; sqrt(lambda) I] keeps the solve a single QR
  Eigen::MatrixXcd aug(training_len + cols, cols);
  aug.topRows(training_len) = a;
  aug.bottomRows(cols) =
      std::sqrt(lambda) * Eigen::MatrixXcd::Identity(cols, cols);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(training_len + cols);
  rhs.head(training_len) = b;

  sic_model model;
  model.delay_spread = delay_spread;
  model.order_set = order_set;
  model.fs = y.fs;
  model.coeffs = aug.colPivHouseholderQr().solve(rhs);
  return model;
}

inline iq_waveform cancel(const iq_waveform& y, const Eigen::MatrixXcd& basis,
                          const sic_model& model) {
  if (basis.cols() != model.coeffs.size() ||
      basis.rows() != long(y.samples.size()))
    throw std::invalid_argument("dimension mismatch");
  const Eigen::VectorXcd est = basis * model.coeffs;
  iq_waveform r;
  r.fs = y.fs;
  r.samples.resize(y.samples.size());
  for (long i = 0; i < long(y.samples.size()); ++i)
    r.samples[i] = y.samples[i] - est(i);
  return r;
}

struct tone_plan {
  std::vector<double> main_hz;  // fundamental bins
  std::vector<double> im3_hz;   // third-order product bins
  double band_hi_hz = 0.0;      // out-of-band floor measured above this
};

namespace detail {

inline double bin_power(const iq_waveform& x, double f) {
  if (std::abs(f) >= x.fs / 2.0)
    throw std::invalid_argument("bin outside Nyquist");
  cplx acc{0.0, 0.0};
  const size_t n = x.samples.size();
  for (size_t i = 0; i < n; ++i)
    acc += x.samples[i] * std::exp(cplx(0.0, -2.0 * kPi * f * double(i) / x.fs));
  return std::norm(acc / double(n));
}

}  // namespace detail

inline sic_metrics metrics(const iq_waveform& before, const iq_waveform& after,
                           const tone_plan& plan, size_t training_len = 0) {
  if (plan.main_hz.empty()) throw std::invalid_argument("empty tone plan");
  auto band_power = [&](const iq_waveform& w, const std::vector<double>& bins) {
    double p = 0.0;
    for (double f : bins) p += detail::bin_power(w, f);
    return p;
  };
  sic_metrics m;
  m.training_len = training_len;
  const double pm_b = band_power(before, plan.main_hz);
  const double pm_a = band_power(after, plan.main_hz);
  m.sic_main_db = db10(pm_b / std::max(pm_a, 1e-300));
  if (!plan.im3_hz.empty()) {
    const double pi_b = band_power(before, plan.im3_hz);
    const double pi_a = band_power(after, plan.im3_hz);
    m.sic_im3_db = db10(pi_b / std::max(pi_a, 1e-300));
  }
  // residual floor: median PSD density above band_hi_hz
  if (plan.band_hi_hz > 0.0 && after.samples.size() >= 1024) {
    const auto r = psd(after, 1024);
    std::vector<double> oob;
    for (size_t i = 0; i < r.freq_hz.size(); ++i)
      if (std::abs(r.freq_hz[i]) > plan.band_hi_hz) oob.push_back(r.psd_db[i]);
    if (!oob.empty()) {
      std::nth_element(oob.begin(), oob.begin() + oob.size() / 2, oob.end());
      m.residual_floor_db = oob[oob.size() / 2];
    }
  }
  return m;
}

// --- model persistence -----------------------------------------------------

inline void save_model(const std::string& path, const sic_model& m) {
  nlohmann::json j;
  j["delay_spread"] = m.delay_spread;
  j["order_set"] = m.order_set;
  j["fs_hz"] = m.fs;
  auto& c = j["coeffs"] = nlohmann::json::array();
  for (long i = 0; i < m.coeffs.size(); ++i)
    c.push_back({m.coeffs(i).real(), m.coeffs(i).imag()});
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << j.dump(2) << "\n";
}

inline sic_model load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  f >> j;
  sic_model m;
  m.delay_spread = j.at("delay_spread").get<int>();
  m.order_set = j.at("order_set").get<std::vector<int>>();
  m.fs = j.at("fs_hz").get<double>();
  const auto& c = j.at("coeffs");
  m.coeffs.resize(c.size());
  for (size_t i = 0; i < c.size(); ++i)
    m.coeffs(i) = cplx(c[i][0].get<double>(), c[i][1].get<double>());
  if (m.coeffs.size() != m.n_columns())
    throw std::runtime_error("coefficient count mismatch in " + path);
  return m;
}

}  // namespace circrx
