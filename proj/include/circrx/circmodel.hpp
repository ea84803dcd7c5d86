#pragma once
// Center-frequency closed-form model of the commutation-based
// circulator-receiver, plus a frequency-swept variant built from cascaded
// two-ports.
//
// Topology (all lines quarter-wave at f0, impedance Z0):
//
//   TX o--[λ/4]--o ANT o--[λ/4]--o RXnode
//    |                               |
//   [λ/4]                          Rsw
//    |                               |
//   BAL o--Rsw--o V1  =gyr=  V2 o----+
//    |
//   Zbal (optional, shunt; "open" = absent)
//
// The gyrator element is the N->inf idealization of the phase-shifted
// N-path filter (forward -90 deg). Node voltage conventions follow the
// closed forms for TX and ANT excitation; "dB below Vtx" is referenced to
// the TX port voltage v_in/2 throughout.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "circrx/netcore.hpp"

namespace circrx {

struct circulator_params {
  double z0 = 50.0;
  double rsw = 3.5;
  cplx zant{50.0, 0.0};
  std::optional<cplx> zbal{};      // nullopt = open (no balance network)
  double f0 = 750e6;
  double parasitic_cap_bal = 0.0;  // shunt C at the BAL node, farads

  bool valid() const {
    if (z0 <= 0.0 || rsw < 0.0 || zant.real() <= 0.0 || f0 <= 0.0) return false;
    if (zbal && zbal->real() < 0.0) return false;
    return true;
  }
};

struct node_voltages {
  cplx v_ant, v_bal, v_rx, v1, v2;
};

// Z0/Zbal with the open-circuit balance handled as the limit 0, including a
// parasitic shunt capacitance evaluated at f0.
inline cplx z0_over_zbal(const circulator_params& p) {
  cplx y{0.0, 0.0};
  if (p.zbal) y += 1.0 / *p.zbal;
  if (p.parasitic_cap_bal > 0.0)
    y += cplx(0.0, 2.0 * kPi * p.f0 * p.parasitic_cap_bal);
  return p.z0 * y;
}

// Node voltages for a TX-port excitation v_in_tx (source EMF behind Z0).
inline node_voltages tx_excitation(const circulator_params& p, cplx v_in_tx) {
  if (!p.valid()) throw std::invalid_argument("invalid circulator params");
  const cplx j(0.0, 1.0);
  const cplx zb = z0_over_zbal(p);
  const cplx k = p.z0 / p.rsw;  // infinite for rsw=0 handled below
  node_voltages n;
  if (p.rsw == 0.0) {
    // limits of the closed forms as Z0/Rsw -> inf
    const cplx g = 1.0 + p.z0 / p.zant;
    n.v_ant = -j * v_in_tx / g;
    n.v_bal = -j * v_in_tx * (p.z0 / p.zant - 1.0) / ((1.0 + zb) * g);
    n.v1 = n.v_bal;
    n.v2 = j * n.v1;
    n.v_rx = v_in_tx * (p.z0 / p.zant - 1.0) / ((1.0 + zb) * g);
    return n;
  }
  const cplx den0 = 2.0 + k * (1.0 + p.z0 / p.zant);
  const cplx den = (1.0 + zb) * den0;
  n.v_ant = -j * v_in_tx * k / den0;
  n.v_bal = -j * v_in_tx * (2.0 + k * (p.z0 / p.zant - 1.0)) / den;
  n.v1 = -j * v_in_tx * (1.0 - zb + k * (p.z0 / p.zant - 1.0)) / den;
  n.v2 = j * n.v1;
  n.v_rx = v_in_tx * (-2.0 * zb + k * (p.z0 / p.zant - 1.0)) / den;
  return n;
}

// Node voltages for an ANT-port excitation v_in_ant (source EMF behind Zant).
// The Vrx closed form is phased so that it is consistent with KCL given V1,
// V2 and Vbal and with the swept network solution at f0.
inline node_voltages ant_excitation(const circulator_params& p, cplx v_in_ant) {
  if (!p.valid()) throw std::invalid_argument("invalid circulator params");
  const cplx j(0.0, 1.0);
  const cplx zb = z0_over_zbal(p);
  const cplx za = p.z0 / p.zant;
  node_voltages n;
  if (p.rsw == 0.0) {
    const cplx g = 1.0 + za;
    n.v1 = -2.0 * v_in_ant * za / ((1.0 + zb) * g);
    n.v2 = j * n.v1;
    n.v_bal = n.v1;
    n.v_rx = j * (-2.0) * v_in_ant * za / ((1.0 + zb) * g);
    n.v_ant = v_in_ant * za / g;
    return n;
  }
  const cplx k = p.z0 / p.rsw;
  const cplx den0 = 2.0 + k * (1.0 + za);
  const cplx den = (1.0 + zb) * den0;
  n.v1 = -2.0 * v_in_ant * za * (k + 0.5 * (1.0 + zb)) / den;
  n.v2 = j * n.v1;
  n.v_bal = -2.0 * v_in_ant * za * k / den;
  n.v_rx = j * (-2.0) * v_in_ant * za * (k + (1.0 + zb)) / den;
  // KCL at the ANT node given the RX-side quantities.
  n.v_ant = v_in_ant * za * k / den0;
  return n;
}

// Balance impedance nulling the TX leakage at the gyrator.
inline cplx balance_condition(const circulator_params& p) {
  const cplx den = p.rsw * p.zant + p.z0 * (p.z0 - p.zant);
  if (std::abs(den) < 1e-12)
    throw std::domain_error("balance unreachable: open-circuit requirement");
  return p.z0 * p.rsw * p.zant / den;
}

// RX-port voltage gain 2/(1 + 50/Zrx); 2.0 in the high-impedance limit.
inline cplx rx_mismatch_gain(cplx zrx) { return 2.0 / (1.0 + 50.0 / zrx); }
inline double rx_mismatch_gain_highz() { return 2.0; }

enum class line_model { ideal, clc };

struct sweep_row {
  double f;
  double tx_to_bb_isolation_db;  // capped at 160 dB
  double ant_to_bb_gain_db;
  double tx_to_ant_loss_db;
  bool singular = false;
};

using isolation_report = std::vector<sweep_row>;

inline constexpr double kIsolationCapDb = 160.0;

namespace detail {

// Solves the full network at frequency f with the gyrator held at its f0
// value. Returns the six node voltages [T, A, B, R, V1, V2].
// Drive: source EMF v_tx behind Z0 at T and/or v_ant behind Zant at A.
inline Eigen::VectorXcd solve_network(const circulator_params& p, double f,
                                      line_model lm, double inductor_q,
                                      cplx v_tx, cplx v_ant) {
  const cplx j(0.0, 1.0);
  const double w0 = 2.0 * kPi * p.f0;
  // Lumped quarter-wave equivalent values.
  const double lsec = p.z0 / w0;
  const double csec = 1.0 / (p.z0 * w0);

  auto line = [&](double freq) -> abcd {
    if (lm == line_model::ideal)
      return tline_abcd(p.z0, kPi / 2.0 * freq / p.f0);
    return clc_pi_abcd(lsec, csec, freq, inductor_q);
  };
  const abcd ln = line(f);

  // MNA over 6 node voltages plus 2 gyrator branch currents.
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(8, 8);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(8);
  enum { T = 0, A = 1, B = 2, R = 3, V1 = 4, V2 = 5, I1 = 6, I2 = 7 };

  auto stamp_twoport = [&](int na, int nb, const abcd& e) {
    // Y-parameters; requires e.b != 0 (true for lines off resonance and the
    // clc model).
    const cplx y11 = e.d / e.b;
    const cplx y12 = -e.det() / e.b;
    const cplx y21 = -1.0 / e.b;
    const cplx y22 = e.a / e.b;
    m(na, na) += y11;
    m(na, nb) += y12;
    m(nb, na) += y21;
    m(nb, nb) += y22;
  };

  stamp_twoport(T, A, ln);
  stamp_twoport(A, R, ln);
  stamp_twoport(T, B, ln);

  m(T, T) += 1.0 / p.z0;
  rhs(T) += v_tx / p.z0;
  m(A, A) += 1.0 / p.zant;
  rhs(A) += v_ant / p.zant;
  cplx ybal{0.0, 0.0};
  if (p.zbal) ybal += 1.0 / *p.zbal;
  if (p.parasitic_cap_bal > 0.0)
    ybal += cplx(0.0, 2.0 * kPi * f * p.parasitic_cap_bal);
  m(B, B) += ybal;

  if (p.rsw > 0.0) {
    const double g = 1.0 / p.rsw;
    m(B, B) += g;   m(V1, V1) += g;  m(B, V1) -= g;  m(V1, B) -= g;
    m(V2, V2) += g; m(R, R) += g;    m(V2, R) -= g;  m(R, V2) -= g;
  } else {
    // Rsw = 0: merge by an ideal connection via large conductance.
    const double g = 1e12;
    m(B, B) += g;   m(V1, V1) += g;  m(B, V1) -= g;  m(V1, B) -= g;
    m(V2, V2) += g; m(R, R) += g;    m(V2, R) -= g;  m(R, V2) -= g;
  }

  // Gyrator element fixed at its f0 value: V1 = -j V2, I1 = -j I2out.
  m(V1, I1) += 1.0;  // I1 leaves V1 into the element
  m(V2, I2) -= 1.0;  // I2 enters V2 from the element
  m(6, V1) = 1.0;
  m(6, V2) = j;      // V1 + j V2 = 0  (V1 = -j V2)
  m(7, I1) = 1.0;
  m(7, I2) = j;      // I1 = -j I2out

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
  if (!lu.isInvertible()) throw std::domain_error("singular network");
  return lu.solve(rhs);
}

}  // namespace detail

// Frequency sweep of the circulator network. At f = f0 with ideal lines the rows
// reproduce the closed forms. dB references: TX port voltage v_in/2.
inline isolation_report frequency_sweep(const circulator_params& p,
                                        line_model lm, double inductor_q,
                                        std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("empty frequency grid");
  isolation_report rep;
  rep.reserve(grid.size());
  for (double f : grid) {
    if (f <= 0.0 || f >= 2.0 * p.f0)
      throw std::invalid_argument("frequency outside (0, 2*f0)");
    sweep_row row{};
    row.f = f;
    try {
      const cplx vin = 2.0;
      const auto xt = detail::solve_network(p, f, lm, inductor_q, vin, 0.0);
      const auto xa = detail::solve_network(p, f, lm, inductor_q, 0.0, vin);
      const double vport = std::abs(vin) / 2.0;
      const double iso = -db20(std::abs(xt(4)) / vport);
      row.tx_to_bb_isolation_db = std::min(iso, kIsolationCapDb);
      row.ant_to_bb_gain_db = db20(std::abs(xa(4)) / vport);
      row.tx_to_ant_loss_db = -db20(std::abs(xt(1)) / vport);
    } catch (const std::domain_error&) {
      row.singular = true;
    }
    rep.push_back(row);
  }
  return rep;
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

}  // namespace circrx
