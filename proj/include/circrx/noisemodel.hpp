#pragma once
// Noise circulation analysis of the circulator-receiver: noise voltages at
// the gyrator node and the resulting noise factor, as functions of the
// balance-network reflection coefficient.

#include <optional>
#include <vector>

#include "circrx/circmodel.hpp"

namespace circrx {

inline constexpr double kBoltzmann = 1.380649e-23;
inline constexpr double kT0 = 290.0;

// Reflection coefficient of the balance network; open -> 1.
inline cplx gamma_of(std::optional<cplx> zbal, double z0) {
  if (!zbal) return 1.0;
  if (std::abs(*zbal + z0) < 1e-300)
    throw std::domain_error("gamma undefined for Zbal = -Z0");
  return (*zbal - z0) / (*zbal + z0);
}

struct noise_breakdown {
  // V^2/Hz at the gyrator node, one entry per source.
  double ant, sw_left, sw_right, bal;
  // Dimensionless transfer coefficients multiplying each 4kTR source.
  double coef_ant, coef_sw_left, coef_sw_right, coef_bal;
  cplx gamma_bal;
  double temperature;

  double total() const { return ant + sw_left + sw_right + bal; }
};

// The four noise transfer terms at the gyrator node, assuming equal switch
// resistance on both sides. Requires Zant = Z0 (mismatched-antenna noise is
// out of scope and rejected rather than answered wrongly).
inline noise_breakdown noise_at_gyrator(const circulator_params& p,
                                        double temperature = kT0) {
  if (p.rsw < 0.0) throw std::invalid_argument("rsw must be >= 0");
  if (std::abs(p.zant - cplx(p.z0, 0.0)) > 1e-9)
    throw std::invalid_argument("noise analysis requires Zant = Z0");
  const cplx gamma = gamma_of(p.zbal, p.z0);
  const double r = p.rsw / p.z0;
  const double cp = std::norm(1.0 + gamma / (1.0 + r)) / 4.0;
  const double cm = std::norm(1.0 - gamma / (1.0 + r)) / 4.0;
  const double cb = std::norm(1.0 - gamma) / 4.0;

  noise_breakdown nb{};
  nb.gamma_bal = gamma;
  nb.temperature = temperature;
  nb.coef_ant = cp;
  nb.coef_sw_left = cm;
  nb.coef_sw_right = cp;
  nb.coef_bal = cb;
  const double kt4 = 4.0 * kBoltzmann * temperature;
  nb.ant = kt4 * p.z0 * cp;
  nb.sw_left = kt4 * p.rsw * cm;
  nb.sw_right = kt4 * p.rsw * cp;
  // Only the resistive part of the balance network thermalizes.
  nb.bal = kt4 * (p.zbal ? std::max(0.0, p.zbal->real()) : 0.0) * cb;
  return nb;
}

struct noise_factor_result {
  double f;       // noise factor, >= 1
  double nf_db;   // 10 log10(F)
  double term_ant, term_sw_left, term_sw_right, term_bal;  // 4 addends of F
};

// Noise factor of the circulator-receiver with the balance network engaged.
inline noise_factor_result noise_factor(const circulator_params& p) {
  if (std::abs(p.zant - cplx(p.z0, 0.0)) > 1e-9)
    throw std::invalid_argument("noise analysis requires Zant = Z0");
  const cplx gamma = gamma_of(p.zbal, p.z0);
  const double r = p.rsw / p.z0;
  const cplx den = 1.0 + r + gamma;
  noise_factor_result out{};
  out.term_ant = 1.0;
  out.term_sw_left = r * std::norm((1.0 + r - gamma) / den);
  out.term_sw_right = r;
  const double re_zbal = p.zbal ? std::max(0.0, p.zbal->real()) : 0.0;
  out.term_bal = re_zbal / p.z0 * std::norm((1.0 + r) * (1.0 - gamma) / den);
  out.f = out.term_ant + out.term_sw_left + out.term_sw_right + out.term_bal;
  out.nf_db = db10(out.f);
  return out;
}

struct nf_curve_row {
  double zbal;
  double coef_ant, coef_sw_left, coef_sw_right, coef_bal;
  double nf_db;
};

// NTF coefficients and NF over a grid of positive-real balance impedances.
inline std::vector<nf_curve_row> nf_vs_zbal_curve(
    const circulator_params& base, std::span<const double> zbal_grid) {
  std::vector<nf_curve_row> rows;
  rows.reserve(zbal_grid.size());
  for (double zb : zbal_grid) {
    if (zb < 0.0) throw std::invalid_argument("Zbal grid must be >= 0");
    circulator_params p = base;
    p.zbal = cplx(zb, 0.0);
    const auto nb = noise_at_gyrator(p);
    const auto nf = noise_factor(p);
    rows.push_back({zb, nb.coef_ant, nb.coef_sw_left, nb.coef_sw_right,
                    nb.coef_bal, nf.nf_db});
  }
  return rows;
}

}  // namespace circrx
