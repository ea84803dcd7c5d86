#pragma once
// Balance-network impedance models (discrete R/C banks and an LC ladder)
// plus the exhaustive code-lattice tuner that maximizes TX-to-BB isolation
// over a band, and the small CLC antenna-match helper.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "circrx/circmodel.hpp"
#include "circrx/netcore.hpp"
#include "circrx/noisemodel.hpp"

namespace circrx {

// Parallel conductance/capacitance banks. Code 0 on both = open circuit.
// Default LSBs span 25 ohm..open on the R bank and 0..2 pF on the C bank.
struct rc_bank {
  int r_code = 0;  // 6 bits
  int c_code = 0;  // 5 bits
  double g_unit = 1.0 / (25.0 * 63.0);  // S per R-bank LSB
  double c_unit = 2e-12 / 31.0;         // F per C-bank LSB

  void validate() const {
    if (r_code < 0 || r_code > 63) throw std::invalid_argument("r_code out of range");
    if (c_code < 0 || c_code > 31) throw std::invalid_argument("c_code out of range");
    if (g_unit <= 0.0 || c_unit <= 0.0)
      throw std::invalid_argument("bank unit values must be > 0");
  }
};

// Bank impedance at f; nullopt means open (both codes zero).
inline std::optional<cplx> bank_impedance(const rc_bank& bank, double f) {
  bank.validate();
  if (f <= 0.0) throw std::invalid_argument("f must be > 0");
  if (bank.r_code == 0 && bank.c_code == 0) return std::nullopt;
  const cplx y(bank.r_code * bank.g_unit,
               2.0 * kPi * f * bank.c_code * bank.c_unit);
  return 1.0 / y;
}

// LC ladder one-port: per stage a tunable shunt capacitor at the node
// followed by a fixed series inductor (lossy, quality factor q); the last
// inductor returns to ground. Element values are placeholders that resonate
// near 750 MHz and carry no authority.
struct lc_ladder {
  struct stage {
    double l;
    double c;
  };
  std::vector<stage> stages{{6e-9, 4e-12}, {6e-9, 4e-12}};
  double q = 20.0;

  void validate() const {
    if (stages.empty()) throw std::invalid_argument("ladder needs >= 1 stage");
    if (q <= 0.0) throw std::invalid_argument("inductor q must be > 0");
    for (const auto& s : stages)
      if (s.l <= 0.0 || s.c < 0.0)
        throw std::invalid_argument("ladder element values must be > 0");
  }
};

inline cplx ladder_impedance(const lc_ladder& lad, double f) {
  lad.validate();
  if (f <= 0.0) throw std::invalid_argument("f must be > 0");
  const double w = 2.0 * kPi * f;
  cplx z{0.0, 0.0};  // ground beyond the last inductor
  for (auto it = lad.stages.rbegin(); it != lad.stages.rend(); ++it) {
    z += cplx(w * it->l / lad.q, w * it->l);
    if (it->c > 0.0) {
      const cplx zc = 1.0 / cplx(0.0, w * it->c);
      z = (zc * z) / (zc + z);
    }
  }
  return z;
}

// --- CLC antenna matching helper --------------------------------------

struct clc_elements {
  double c1;  // load-side shunt
  double l;   // series
  double c2;  // source-side shunt
};

inline cplx clc_match(const clc_elements& el, cplx zload, double f) {
  if (el.c1 <= 0.0 || el.l <= 0.0 || el.c2 <= 0.0)
    throw std::invalid_argument("element values must be > 0");
  if (f <= 0.0) throw std::invalid_argument("f must be > 0");
  const double w = 2.0 * kPi * f;
  auto par_c = [&](cplx z, double c) {
    const cplx y = 1.0 / z + cplx(0.0, w * c);
    return 1.0 / y;
  };
  cplx z = par_c(zload, el.c1);
  z += cplx(0.0, w * el.l);
  return par_c(z, el.c2);
}

inline double vswr(cplx z, double z0 = 50.0) {
  const double g = std::abs((z - z0) / (z + z0));
  if (g >= 1.0) return std::numeric_limits<double>::infinity();
  return (1.0 + g) / (1.0 - g);
}

// Designs a symmetric CLC (c1 = c2) that maps a 50-ohm load to the target
// VSWR (purely real, z0 * vswr) at f. 2-D Newton with numeric Jacobian.
inline clc_elements clc_match_design(double target_vswr, double f,
                                     double z0 = 50.0) {
  if (target_vswr <= 1.0) throw std::invalid_argument("target vswr must be > 1");
  const double z_goal = z0 * target_vswr;
  auto res = [&](double cc, double ll) {
    const cplx z = clc_match({cc, ll, cc}, cplx(z0, 0.0), f);
    return Eigen::Vector2d(z.real() - z_goal, z.imag());
  };
  // coarse log-grid seed; undamped steps can overshoot into the bounds
  double c = 1e-12, l = 2e-9, best = res(c, l).norm();
  for (int ic = 0; ic <= 40; ++ic)
    for (int il = 0; il <= 40; ++il) {
      const double cc = 5e-14 * std::pow(1e3, ic / 40.0);
      const double ll = 1e-10 * std::pow(1e3, il / 40.0);
      const double n = res(cc, ll).norm();
      if (n < best) { best = n; c = cc; l = ll; }
    }
  for (int it = 0; it < 100; ++it) {
    const Eigen::Vector2d r = res(c, l);
    if (r.norm() < 1e-9) break;
    const double dc = c * 1e-6, dl = l * 1e-6;
    Eigen::Matrix2d jac;
    jac.col(0) = (res(c + dc, l) - r) / dc;
    jac.col(1) = (res(c, l + dl) - r) / dl;
    const Eigen::Vector2d step = jac.fullPivLu().solve(r);
    double t = 1.0;
    for (int bt = 0; bt < 30; ++bt, t *= 0.5) {
      const double cn = std::max(c - t * step(0), 1e-16);
      const double ln = std::max(l - t * step(1), 1e-13);
      if (res(cn, ln).norm() < r.norm()) { c = cn; l = ln; break; }
    }
  }
  if (res(c, l).norm() > 1e-6)
    throw std::runtime_error("clc design did not converge");
  return {c, l, c};
}

// --- Exhaustive bank tuner ---------------------------------------------

struct tune_band {
  double f_center = 750e6;
  double bw = 20e6;
  int n_points = 11;
};

struct tuner_result {
  int r_code = 0;
  int c_code = 0;
  cplx zbal_at_f0{0.0, 0.0};  // meaningless when open (codes 0,0)
  bool open = true;
  double avg_isolation_db = 0.0;
  double gain_penalty_db = 0.0;  // ANT-BB gain loss vs. the open baseline
  double nf_penalty_db = 0.0;    // NF delta vs. the open baseline
};

namespace detail {

// NF evaluated with the antenna forced to z0 (the noise model is defined
// for a matched antenna; the tuner may run with a slightly mismatched one).
inline double nf_db_at(const circulator_params& p, std::optional<cplx> zbal) {
  circulator_params q = p;
  q.zant = p.z0;
  q.zbal = zbal;
  q.parasitic_cap_bal = 0.0;  // the bank is expected to absorb parasitics
  return noise_factor(q).nf_db;
}

}  // namespace detail

// Exhaustive search over the 6-bit x 5-bit code lattice maximizing mean
// TX-to-BB isolation over the band. Ties: smaller NF penalty, then lower
// (r, c) code pair.
inline tuner_result tune(const rc_bank& bank_model, const tune_band& band,
                         const circulator_params& base,
                         line_model lm = line_model::clc,
                         double inductor_q = 20.0) {
  bank_model.validate();
  if (band.n_points < 1 || band.bw < 0.0)
    throw std::invalid_argument("bad band spec");
  const auto grid = linspace(band.f_center - band.bw / 2.0,
                             band.f_center + band.bw / 2.0, band.n_points);
  for (double f : grid)
    if (f <= 0.0 || f >= 2.0 * base.f0)
      throw std::invalid_argument("band outside sweep validity");

  struct cand {
    double iso;
    double nf;
    int r, c;
  };
  auto eval = [&](int rc, int cc) {
    rc_bank b = bank_model;
    b.r_code = rc;
    b.c_code = cc;
    circulator_params p = base;
    p.zbal = bank_impedance(b, band.f_center);
    double acc = 0.0;
    const auto rep = frequency_sweep(p, lm, inductor_q, grid);
    for (const auto& row : rep)
      acc += row.singular ? 0.0 : row.tx_to_bb_isolation_db;
    return cand{acc / double(grid.size()), detail::nf_db_at(base, p.zbal), rc, cc};
  };

  cand best = eval(0, 0);
  const cand baseline = best;
  for (int rc = 0; rc < 64; ++rc)
    for (int cc = 0; cc < 32; ++cc) {
      if (rc == 0 && cc == 0) continue;
      const cand c = eval(rc, cc);
      const bool better =
          c.iso > best.iso + 1e-12 ||
          (std::abs(c.iso - best.iso) <= 1e-12 &&
           (c.nf < best.nf - 1e-12 ||
            (std::abs(c.nf - best.nf) <= 1e-12 &&
             std::make_pair(c.r, c.c) < std::make_pair(best.r, best.c))));
      if (better) best = c;
    }

  tuner_result out;
  out.r_code = best.r;
  out.c_code = best.c;
  rc_bank bb = bank_model;
  bb.r_code = best.r;
  bb.c_code = best.c;
  const auto zb = bank_impedance(bb, band.f_center);
  out.open = !zb.has_value();
  if (zb) out.zbal_at_f0 = *zb;
  out.avg_isolation_db = best.iso;
  out.nf_penalty_db = best.nf - baseline.nf;

  auto gain_at = [&](std::optional<cplx> zbal) {
    circulator_params p = base;
    p.zbal = zbal;
    const std::array<double, 1> g{band.f_center};
    return frequency_sweep(p, lm, inductor_q, g)[0].ant_to_bb_gain_db;
  };
  out.gain_penalty_db = gain_at(std::nullopt) - gain_at(zb);
  return out;
}

}  // namespace circrx
