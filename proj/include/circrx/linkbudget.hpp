#pragma once
// Full-duplex link-budget arithmetic: noise floor, required SIC, margin
// stack-up, and free-space range inversion.

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "circrx/netcore.hpp"

namespace circrx {

struct link_config {
  double ptx_dbm = 8.0;
  double bw_hz = 20e6;
  double nf_db = 8.0;
  double snr_req_db = 15.0;
  double ant_gain_dbi = 2.5;  // per side
  double impl_loss_db = 5.0;
  double fading_margin_db = 10.0;
  double residual_si_penalty_db = 5.0;
  double freq_hz = 750e6;
  double extra_bb_sic_db = 20.0;  // cited additional BB-domain capability
  double path_loss_exponent = 2.0;

  void validate() const {
    if (bw_hz <= 0.0 || freq_hz <= 0.0 || path_loss_exponent <= 0.0)
      throw std::invalid_argument("bad link config");
  }
};

struct link_report {
  double noise_floor_dbm = 0.0;
  double required_sic_db = 0.0;
  double budget_db = 0.0;
  double range_m = 0.0;
  bool budget_negative = false;
};

inline double noise_floor(double bw_hz, double nf_db) {
  if (bw_hz <= 0.0) throw std::invalid_argument("bw must be > 0");
  return -174.0 + 10.0 * std::log10(bw_hz) + nf_db;
}

inline double required_sic(double ptx_dbm, double floor_dbm) {
  return ptx_dbm - floor_dbm;
}

inline link_report link_range(const link_config& cfg) {
  cfg.validate();
  link_report r;
  r.noise_floor_dbm = noise_floor(cfg.bw_hz, cfg.nf_db);
  r.required_sic_db = required_sic(cfg.ptx_dbm, r.noise_floor_dbm);
  r.budget_db = cfg.ptx_dbm + 2.0 * cfg.ant_gain_dbi -
                (r.noise_floor_dbm + cfg.impl_loss_db + cfg.snr_req_db) -
                cfg.residual_si_penalty_db - cfg.fading_margin_db;
  // path loss n*10*log10(4*pi*d*f/c) = budget (free space when n = 2)
  const double c = 299792458.0;
  const double d =
      std::pow(10.0, r.budget_db / (10.0 * cfg.path_loss_exponent)) * c /
      (4.0 * kPi * cfg.freq_hz);
  r.range_m = d;
  r.budget_negative = r.budget_db < 0.0;
  return r;
}

inline nlohmann::json link_report_json(const link_report& r) {
  return {{"noise_floor_dbm", r.noise_floor_dbm},
          {"required_sic_db", r.required_sic_db},
          {"budget_db", r.budget_db},
          {"range_m", r.range_m},
          {"budget_negative", r.budget_negative}};
}

inline std::string link_report_text(const link_report& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "noise floor     " << std::setw(10) << r.noise_floor_dbm << " dBm\n"
     << "required SIC    " << std::setw(10) << r.required_sic_db << " dB\n"
     << "link budget     " << std::setw(10) << r.budget_db << " dB\n"
     << "range           " << std::setw(10) << r.range_m << " m\n";
  if (r.budget_negative) os << "warning: negative budget, range < 1 m\n";
  return os.str();
}

}  // namespace circrx
