// circrx: command-line front end for the circulator-receiver model.
// Subcommands: sweep, balance, noise, lptv, demo, link.
// Exit codes: 0 success, 2 config error, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "circrx/balnet.hpp"
#include "circrx/circmodel.hpp"
#include "circrx/linkbudget.hpp"
#include "circrx/lptv.hpp"
#include "circrx/noisemodel.hpp"
#include "circrx/sic.hpp"
#include "circrx/waveform.hpp"

namespace {

using nlohmann::json;
using namespace circrx;

constexpr const char* kToolVersion = "0.1.0";

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw config_error("cannot open config file: " + path);
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded()) throw config_error("malformed JSON in " + path);
  if (!j.is_object()) throw config_error("config root must be an object");
  return j;
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& prefix = "") {
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k))
      throw config_error("unknown config key: " + prefix + k);
}

double num_or(const json& j, const char* k, double dflt) {
  if (!j.contains(k)) return dflt;
  if (!j.at(k).is_number()) throw config_error(std::string(k) + ": expected number");
  return j.at(k).get<double>();
}

int int_or(const json& j, const char* k, int dflt) {
  if (!j.contains(k)) return dflt;
  if (!j.at(k).is_number_integer()) throw config_error(std::string(k) + ": expected integer");
  return j.at(k).get<int>();
}

bool bool_or(const json& j, const char* k, bool dflt) {
  if (!j.contains(k)) return dflt;
  if (!j.at(k).is_boolean()) throw config_error(std::string(k) + ": expected bool");
  return j.at(k).get<bool>();
}

std::string str_or(const json& j, const char* k, const std::string& dflt) {
  if (!j.contains(k)) return dflt;
  if (!j.at(k).is_string()) throw config_error(std::string(k) + ": expected string");
  return j.at(k).get<std::string>();
}

// number or [re, im]
cplx cplx_at(const json& v, const std::string& key) {
  if (v.is_number()) return cplx(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return cplx(v[0].get<double>(), v[1].get<double>());
  throw config_error(key + ": expected number or [re, im]");
}

// "open", number, or [re, im]
std::optional<cplx> zbal_at(const json& j, const char* k,
                            std::optional<cplx> dflt) {
  if (!j.contains(k)) return dflt;
  const auto& v = j.at(k);
  if (v.is_string()) {
    if (v.get<std::string>() == "open") return std::nullopt;
    throw config_error(std::string(k) + ": expected \"open\" or a number");
  }
  return cplx_at(v, k);
}

line_model line_model_at(const json& j, const char* k, line_model dflt) {
  const std::string s = str_or(j, k, dflt == line_model::ideal ? "ideal" : "clc");
  if (s == "ideal") return line_model::ideal;
  if (s == "clc") return line_model::clc;
  throw config_error(std::string(k) + ": expected \"ideal\" or \"clc\"");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << body;
}

void write_json(const std::filesystem::path& p, const json& j) {
  write_text(p, j.dump(2) + "\n");
}

struct run_context {
  std::filesystem::path out;
  std::string format = "csv";
  std::uint64_t seed = 1;
  bool seed_given = false;

  void prepare() const { std::filesystem::create_directories(out); }
  void manifest(const json& resolved) const {
    write_json(out / "manifest.json", json{{"resolved_config", resolved},
                                           {"seed", seed},
                                           {"tool_version", kToolVersion}});
  }
};

json cplx_json(cplx v) { return json{{"re", v.real()}, {"im", v.imag()}}; }

json zbal_json(const std::optional<cplx>& z) {
  if (!z) return "open";
  if (z->imag() == 0.0) return z->real();
  return json::array({z->real(), z->imag()});
}

// --- sweep -----------------------------------------------------------------

circulator_params circ_params_from(const json& cfg) {
  circulator_params p;
  p.z0 = num_or(cfg, "z0", 50.0);
  p.rsw = num_or(cfg, "rsw", 3.5);
  p.f0 = num_or(cfg, "f0_hz", 750e6);
  if (cfg.contains("zant")) p.zant = cplx_at(cfg.at("zant"), "zant");
  p.zbal = zbal_at(cfg, "zbal", std::nullopt);
  p.parasitic_cap_bal = num_or(cfg, "parasitic_cap_bal_f", 0.0);
  if (!p.valid()) throw config_error("invalid circulator parameters");
  return p;
}

json circ_params_json(const circulator_params& p) {
  return json{{"z0", p.z0},
              {"rsw", p.rsw},
              {"f0_hz", p.f0},
              {"zant", json::array({p.zant.real(), p.zant.imag()})},
              {"zbal", zbal_json(p.zbal)},
              {"parasitic_cap_bal_f", p.parasitic_cap_bal}};
}

int cmd_sweep(const json& cfg, const run_context& ctx) {
  check_keys(cfg, {"f_start_hz", "f_stop_hz", "n_points", "z0", "rsw", "f0_hz",
                   "zant", "zbal", "parasitic_cap_bal_f", "line_model",
                   "inductor_q", "touchstone"});
  const auto p = circ_params_from(cfg);
  const double f_start = num_or(cfg, "f_start_hz", 740e6);
  const double f_stop = num_or(cfg, "f_stop_hz", 760e6);
  const int n_points = int_or(cfg, "n_points", 201);
  const auto lm = line_model_at(cfg, "line_model", line_model::ideal);
  const double q = num_or(cfg, "inductor_q", 20.0);
  const bool touchstone = bool_or(cfg, "touchstone", true);
  if (n_points < 1 || f_start <= 0.0 || f_stop < f_start)
    throw config_error("bad frequency grid");

  const auto grid = linspace(f_start, f_stop, n_points);
  const auto rep = frequency_sweep(p, lm, q, grid);

  ctx.prepare();
  if (ctx.format == "json") {
    json rows = json::array();
    for (const auto& r : rep)
      rows.push_back({{"freq_hz", r.f},
                      {"tx_to_bb_isolation_db", r.tx_to_bb_isolation_db},
                      {"ant_to_bb_gain_db", r.ant_to_bb_gain_db},
                      {"tx_to_ant_loss_db", r.tx_to_ant_loss_db},
                      {"singular", r.singular}});
    write_json(ctx.out / "sweep.json", rows);
  } else {
    std::string body =
        "freq_hz,tx_to_bb_isolation_db,ant_to_bb_gain_db,tx_to_ant_loss_db\n";
    for (const auto& r : rep)
      body += fmt(r.f) + "," + fmt(r.tx_to_bb_isolation_db) + "," +
              fmt(r.ant_to_bb_gain_db) + "," + fmt(r.tx_to_ant_loss_db) + "\n";
    write_text(ctx.out / "sweep.csv", body);
  }

  if (touchstone) {
    // TX/ANT 2-port with both ports referenced to 50 ohm loads; BAL and the
    // BB side stay internal terminations.
    circulator_params ps = p;
    ps.zant = cplx(50.0, 0.0);
    std::string body = "! circrx TX/ANT two-port\n# HZ S RI R 50\n";
    for (double f : grid) {
      const auto xt = detail::solve_network(ps, f, lm, q, 2.0, 0.0);
      const auto xa = detail::solve_network(ps, f, lm, q, 0.0, 2.0);
      const cplx s11 = xt(0) - 1.0, s21 = xt(1);
      const cplx s12 = xa(0), s22 = xa(1) - 1.0;
      body += fmt(f) + " " + fmt(s11.real()) + " " + fmt(s11.imag()) + " " +
              fmt(s21.real()) + " " + fmt(s21.imag()) + " " + fmt(s12.real()) +
              " " + fmt(s12.imag()) + " " + fmt(s22.real()) + " " +
              fmt(s22.imag()) + "\n";
    }
    write_text(ctx.out / "sweep.s2p", body);
  }

  json resolved = circ_params_json(p);
  resolved["f_start_hz"] = f_start;
  resolved["f_stop_hz"] = f_stop;
  resolved["n_points"] = n_points;
  resolved["line_model"] = lm == line_model::ideal ? "ideal" : "clc";
  resolved["inductor_q"] = q;
  resolved["touchstone"] = touchstone;
  ctx.manifest(resolved);
  return 0;
}

// --- balance ----------------------------------------------------------------

int cmd_balance(const json& cfg, const run_context& ctx) {
  check_keys(cfg, {"z0", "rsw", "f0_hz", "zant", "parasitic_cap_bal_f",
                   "line_model", "inductor_q", "bank", "band"});
  auto base = circ_params_from(cfg);
  const auto lm = line_model_at(cfg, "line_model", line_model::clc);
  const double q = num_or(cfg, "inductor_q", 20.0);

  rc_bank bank;
  if (cfg.contains("bank")) {
    const auto& b = cfg.at("bank");
    check_keys(b, {"g_unit", "c_unit"}, "bank.");
    bank.g_unit = num_or(b, "g_unit", bank.g_unit);
    bank.c_unit = num_or(b, "c_unit", bank.c_unit);
  }
  tune_band band;
  if (cfg.contains("band")) {
    const auto& b = cfg.at("band");
    check_keys(b, {"f_center_hz", "bw_hz", "n_points"}, "band.");
    band.f_center = num_or(b, "f_center_hz", band.f_center);
    band.bw = num_or(b, "bw_hz", band.bw);
    band.n_points = int_or(b, "n_points", band.n_points);
  }

  const auto res = tune(bank, band, base, lm, q);

  ctx.prepare();
  write_json(ctx.out / "tuner.json",
             json{{"codes", {{"r", res.r_code}, {"c", res.c_code}}},
                  {"open", res.open},
                  {"zbal_at_f0", cplx_json(res.zbal_at_f0)},
                  {"avg_isolation_db", res.avg_isolation_db},
                  {"gain_penalty_db", res.gain_penalty_db},
                  {"nf_penalty_db", res.nf_penalty_db}});

  json resolved = circ_params_json(base);
  resolved["line_model"] = lm == line_model::ideal ? "ideal" : "clc";
  resolved["inductor_q"] = q;
  resolved["bank"] = {{"g_unit", bank.g_unit}, {"c_unit", bank.c_unit}};
  resolved["band"] = {{"f_center_hz", band.f_center},
                      {"bw_hz", band.bw},
                      {"n_points", band.n_points}};
  ctx.manifest(resolved);
  return 0;
}

// --- noise --------------------------------------------------------------

int cmd_noise(const json& cfg, const run_context& ctx) {
  check_keys(cfg, {"z0", "rsw", "f0_hz", "zbal_start", "zbal_stop", "n_points"});
  circulator_params base;
  base.z0 = num_or(cfg, "z0", 50.0);
  base.rsw = num_or(cfg, "rsw", 3.5);
  base.f0 = num_or(cfg, "f0_hz", 750e6);
  base.zant = base.z0;
  const double z_start = num_or(cfg, "zbal_start", 10.0);
  const double z_stop = num_or(cfg, "zbal_stop", 200.0);
  const int n_points = int_or(cfg, "n_points", 39);
  if (z_start <= 0.0 || z_stop < z_start || n_points < 1)
    throw config_error("bad zbal grid");

  const auto grid = linspace(z_start, z_stop, n_points);
  const auto rows = nf_vs_zbal_curve(base, grid);
  circulator_params open_p = base, bal_p = base;
  bal_p.zbal = cplx(base.z0, 0.0);
  const double nf_open = noise_factor(open_p).nf_db;
  const double nf_bal = noise_factor(bal_p).nf_db;

  ctx.prepare();
  if (ctx.format == "json") {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"zbal_ohm", r.zbal}, {"nf_db", r.nf_db}});
    write_json(ctx.out / "noise.json",
               json{{"rows", arr}, {"nf_open_db", nf_open},
                    {"nf_matched_db", nf_bal}});
  } else {
    std::string body =
        "zbal_ohm,coef_ant,coef_sw_left,coef_sw_right,coef_bal,nf_db\n";
    for (const auto& r : rows)
      body += fmt(r.zbal) + "," + fmt(r.coef_ant) + "," + fmt(r.coef_sw_left) +
              "," + fmt(r.coef_sw_right) + "," + fmt(r.coef_bal) + "," +
              fmt(r.nf_db) + "\n";
    write_text(ctx.out / "noise.csv", body);
    write_json(ctx.out / "noise_summary.json",
               json{{"nf_open_db", nf_open}, {"nf_matched_db", nf_bal}});
  }

  ctx.manifest(json{{"z0", base.z0},
                    {"rsw", base.rsw},
                    {"f0_hz", base.f0},
                    {"zbal_start", z_start},
                    {"zbal_stop", z_stop},
                    {"n_points", n_points}});
  return 0;
}

// --- lptv ---------------------------------------------------------------

int cmd_lptv(const json& cfg, const run_context& ctx) {
  check_keys(cfg, {"mode", "oracle", "n_paths", "drive", "amplitude",
                   "freq_hz", "f_lo_hz", "z_bal", "z_rx", "bal_cap_f",
                   "substeps_per_slot", "max_periods", "dump_waveform"});
  const std::string mode = str_or(cfg, "mode", "mixer");

  if (mode == "mixer") {
    const bool with_oracle = bool_or(cfg, "oracle", false);
    json resolved{{"mode", "mixer"}, {"oracle", with_oracle}};
    struct row {
      int n;
      double closed, oracle;
    };
    std::vector<row> rows;
    for (int n : {2, 4, 8}) {
      row r{n, db20(mixer_conversion_ratio(n, 1.0 / n)), 0.0};
      if (with_oracle) r.oracle = db20(mixer_conversion_sim(n));
      rows.push_back(r);
    }
    ctx.prepare();
    std::string body = with_oracle ? "n_paths,closed_form_db,oracle_db\n"
                                   : "n_paths,closed_form_db\n";
    for (const auto& r : rows) {
      body += std::to_string(r.n) + "," + fmt(r.closed);
      if (with_oracle) body += "," + fmt(r.oracle);
      body += "\n";
    }
    write_text(ctx.out / "mixer.csv", body);
    ctx.manifest(resolved);
    return 0;
  }
  if (mode != "sim") throw config_error("mode: expected \"mixer\" or \"sim\"");

  npath_config nc;
  nc.n_paths = int_or(cfg, "n_paths", 8);
  nc.duty = 1.0 / nc.n_paths;
  nc.f_lo = num_or(cfg, "f_lo_hz", 750e6);
  nc.bal_cap = num_or(cfg, "bal_cap_f", 0.0);
  nc.substeps_per_slot = int_or(cfg, "substeps_per_slot", 16);
  nc.max_periods = int_or(cfg, "max_periods", 2000);
  if (const auto z = zbal_at(cfg, "z_bal", std::nullopt)) nc.z_bal = z->real();
  if (const auto z = zbal_at(cfg, "z_rx", std::nullopt)) nc.z_rx = z->real();

  excitation exc;
  const std::string drive = str_or(cfg, "drive", "tx");
  if (drive == "tx") exc.port = drive_port::tx;
  else if (drive == "ant") exc.port = drive_port::ant;
  else if (drive == "rx") exc.port = drive_port::rx;
  else throw config_error("drive: expected tx, ant, or rx");
  exc.amplitude = num_or(cfg, "amplitude", 2.0);
  exc.freq = num_or(cfg, "freq_hz", nc.f_lo);
  const bool dump = bool_or(cfg, "dump_waveform", true);

  const auto res = simulate(nc, exc);

  ctx.prepare();
  json ph{{"steady", res.steady},
          {"periods_run", res.periods_run},
          {"charge_imbalance", res.charge_imbalance},
          {"power_delivered_w", res.power_delivered},
          {"power_available_w", res.power_available},
          {"v_tx", cplx_json(res.v_tx)},
          {"v_ant", cplx_json(res.v_ant)},
          {"v_bal", cplx_json(res.v_bal)},
          {"v_rx", cplx_json(res.v_rx)},
          {"v1", cplx_json(res.v1)},
          {"v2", cplx_json(res.v2)},
          {"bb_recombined", cplx_json(res.bb_recombined)}};
  json bb = json::array();
  for (const auto& b : res.bb_phasors) bb.push_back(cplx_json(b));
  ph["bb_phasors"] = bb;
  write_json(ctx.out / "phasors.json", ph);

  if (dump) {
    // time-major, node name ascending (std::map iteration order)
    std::string body = "t_s,node,value_v\n";
    for (size_t i = 0; i < res.t.size(); ++i)
      for (const auto& [name, vals] : res.waves)
        body += fmt(res.t[i]) + "," + name + "," + fmt(vals[i]) + "\n";
    write_text(ctx.out / "waveform.csv", body);
  }

  ctx.manifest(json{{"mode", "sim"},
                    {"n_paths", nc.n_paths},
                    {"drive", drive},
                    {"amplitude", exc.amplitude},
                    {"freq_hz", exc.freq},
                    {"f_lo_hz", nc.f_lo},
                    {"z_bal", nc.z_bal ? json(*nc.z_bal) : json("open")},
                    {"z_rx", nc.z_rx ? json(*nc.z_rx) : json("open")},
                    {"bal_cap_f", nc.bal_cap},
                    {"substeps_per_slot", nc.substeps_per_slot},
                    {"max_periods", nc.max_periods},
                    {"dump_waveform", dump}});
  return 0;
}

// --- demo ---------------------------------------------------------------

int cmd_demo(const json& cfg, const run_context& ctx) {
  check_keys(cfg, {"fs_hz", "length", "sync_len", "seed", "si_to_floor_db",
                   "desired_offset_hz", "desired_rel_si_db", "delay_spread",
                   "order_set", "training_len", "channel_terms"});
  ofdm_like_config wcfg;
  wcfg.fs = num_or(cfg, "fs_hz", 160e6);
  wcfg.length = size_t(num_or(cfg, "length", 50000));
  wcfg.sync_len = size_t(num_or(cfg, "sync_len", 2000));
  wcfg.seed = ctx.seed_given ? ctx.seed
                             : std::uint64_t(num_or(cfg, "seed", 1.0));
  const double si_to_floor = num_or(cfg, "si_to_floor_db", 70.0);
  const double tone_off = num_or(cfg, "desired_offset_hz", 2e6);
  const double tone_rel = num_or(cfg, "desired_rel_si_db", -55.0);
  const int delay_spread = int_or(cfg, "delay_spread", 45);
  std::vector<int> order_set{1, 2, 3, 4, 5, 6, 7};
  if (cfg.contains("order_set")) {
    if (!cfg.at("order_set").is_array()) throw config_error("order_set: expected array");
    order_set = cfg.at("order_set").get<std::vector<int>>();
  }
  const long training_len = long(num_or(cfg, "training_len", 12800.0));

  channel_model ch;
  if (cfg.contains("channel_terms")) {
    if (!cfg.at("channel_terms").is_array())
      throw config_error("channel_terms: expected array of [order, delay, re, im]");
    for (const auto& t : cfg.at("channel_terms")) {
      if (!t.is_array() || t.size() != 4)
        throw config_error("channel_terms: expected array of [order, delay, re, im]");
      ch.terms.push_back({t[0].get<int>(), t[1].get<int>(),
                          cplx(t[2].get<double>(), t[3].get<double>())});
    }
  } else {
    // default leakage: a few linear echoes plus mild odd-order nonlinearity,
    // all inside the cancellation basis span
    ch.terms = {{1, 0, {1.0, 0.0}},
                {1, 3, {0.22, -0.11}},
                {1, 11, {-0.05, 0.02}},
                {3, 1, {0.012, 0.006}},
                {5, 2, {0.002, -0.001}}};
  }
  for (const auto& t : ch.terms)
    if (t.delay >= delay_spread ||
        std::find(order_set.begin(), order_set.end(), t.order) == order_set.end())
      throw config_error("channel term outside the cancellation basis span");

  // TX waveform and noiseless SI
  const auto tx = ofdm_like(wcfg);
  const auto si_clean = apply_channel(tx, ch);
  const double si_pow = si_clean.power();

  // inject the noise floor at si_to_floor below the SI power
  const double p_floor = si_pow * std::pow(10.0, -si_to_floor / 10.0);
  ch.noise_density_dbm_hz = 10.0 * std::log10(p_floor / wcfg.fs);
  auto rx = apply_channel(tx, ch, wcfg.seed + 1);

  // weak desired tone, tone_rel below the SI power
  const double tone_amp = std::sqrt(si_pow * std::pow(10.0, tone_rel / 10.0));
  for (size_t i = 0; i < rx.samples.size(); ++i)
    rx.samples[i] += tone_amp * std::exp(cplx(0.0, 2.0 * kPi * tone_off *
                                                       double(i) / wcfg.fs));

  // align on the known preamble
  iq_waveform preamble;
  preamble.fs = tx.fs;
  preamble.samples.assign(tx.samples.begin(),
                          tx.samples.begin() + long(wcfg.sync_len));
  const size_t sync_off = sync(rx, preamble);

  // train on the leading segment and cancel over the full record
  const auto basis = build_basis(tx, delay_spread, order_set);
  const auto model = train(rx, basis, training_len, delay_spread, order_set);
  const auto after = cancel(rx, basis, model);

  // SI bins for the cancellation metric; subcarriers colliding with the
  // desired tone are excluded so the (uncancellable) tone does not count
  // against the SI residual.
  tone_plan plan;
  for (int m = 0; m < wcfg.n_subcarriers; ++m) {
    const double fc = wcfg.first_center + m * wcfg.subcarrier_bw;
    if (std::abs(fc - tone_off) > 0.25e6) plan.main_hz.push_back(fc);
  }
  plan.band_hi_hz = 6e6;
  const auto m = metrics(rx, after, plan, size_t(training_len));

  // tone SNR against the local in-band floor, PSD resolution bandwidth
  auto tone_snr = [&](const iq_waveform& w) {
    const auto r = psd(w, 4096);
    const double df = w.fs / 4096.0;
    double peak = -1e300;
    std::vector<double> local;
    for (size_t i = 0; i < r.freq_hz.size(); ++i) {
      const double d = r.freq_hz[i] - tone_off;
      if (std::abs(d) <= 2.5 * df) peak = std::max(peak, r.psd_db[i]);
      else if (std::abs(d) <= 0.5e6) local.push_back(r.psd_db[i]);
    }
    std::nth_element(local.begin(), local.begin() + local.size() / 2, local.end());
    return peak - local[local.size() / 2];
  };
  const double snr_before = tone_snr(rx);
  const double snr_after = tone_snr(after);
  const double injected_floor_db = 10.0 * std::log10(p_floor / wcfg.fs);

  ctx.prepare();
  auto dump_psd = [&](const iq_waveform& w, const char* name) {
    const auto r = psd(w, 4096);
    std::string body = "freq_hz,psd_db\n";
    for (size_t i = 0; i < r.freq_hz.size(); ++i)
      body += fmt(r.freq_hz[i]) + "," + fmt(r.psd_db[i]) + "\n";
    write_text(ctx.out / name, body);
  };
  dump_psd(rx, "psd_before.csv");
  dump_psd(after, "psd_after.csv");

  auto dump_time = [&](const iq_waveform& w, const char* name) {
    std::string body = "t_s,i,q\n";
    const size_t n = std::min<size_t>(2048, w.samples.size());
    for (size_t i = 0; i < n; ++i)
      body += fmt(double(i) / w.fs) + "," + fmt(w.samples[i].real()) + "," +
              fmt(w.samples[i].imag()) + "\n";
    write_text(ctx.out / name, body);
  };
  dump_time(rx, "time_before.csv");
  dump_time(after, "time_after.csv");
  save_model((ctx.out / "sic_model.json").string(), model);

  const bool recovered = snr_after >= 10.0;
  write_json(ctx.out / "sic_metrics.json",
             json{{"digital_sic_db", m.sic_main_db},
                  {"residual_floor_db", m.residual_floor_db},
                  {"injected_floor_db", injected_floor_db},
                  {"si_power_db", 10.0 * std::log10(si_pow)},
                  {"tone_snr_before_db", snr_before},
                  {"tone_snr_after_db", snr_after},
                  {"desired_recovered", recovered},
                  {"training_len", training_len},
                  {"sync_offset", sync_off}});

  json terms = json::array();
  for (const auto& t : ch.terms)
    terms.push_back(json::array(
        {t.order, t.delay, t.coeff.real(), t.coeff.imag()}));
  ctx.manifest(json{{"fs_hz", wcfg.fs},
                    {"length", wcfg.length},
                    {"sync_len", wcfg.sync_len},
                    {"seed", wcfg.seed},
                    {"si_to_floor_db", si_to_floor},
                    {"desired_offset_hz", tone_off},
                    {"desired_rel_si_db", tone_rel},
                    {"delay_spread", delay_spread},
                    {"order_set", order_set},
                    {"training_len", training_len},
                    {"channel_terms", terms}});
  return 0;
}

// --- link ---------------------------------------------------------------

int cmd_link(const json& cfg, const run_context& ctx) {
  check_keys(cfg, {"ptx_dbm", "bw_hz", "nf_db", "snr_req_db", "ant_gain_dbi",
                   "impl_loss_db", "fading_margin_db", "residual_si_penalty_db",
                   "freq_hz", "extra_bb_sic_db", "path_loss_exponent"});
  link_config lc;
  lc.ptx_dbm = num_or(cfg, "ptx_dbm", lc.ptx_dbm);
  lc.bw_hz = num_or(cfg, "bw_hz", lc.bw_hz);
  lc.nf_db = num_or(cfg, "nf_db", lc.nf_db);
  lc.snr_req_db = num_or(cfg, "snr_req_db", lc.snr_req_db);
  lc.ant_gain_dbi = num_or(cfg, "ant_gain_dbi", lc.ant_gain_dbi);
  lc.impl_loss_db = num_or(cfg, "impl_loss_db", lc.impl_loss_db);
  lc.fading_margin_db = num_or(cfg, "fading_margin_db", lc.fading_margin_db);
  lc.residual_si_penalty_db =
      num_or(cfg, "residual_si_penalty_db", lc.residual_si_penalty_db);
  lc.freq_hz = num_or(cfg, "freq_hz", lc.freq_hz);
  lc.extra_bb_sic_db = num_or(cfg, "extra_bb_sic_db", lc.extra_bb_sic_db);
  lc.path_loss_exponent =
      num_or(cfg, "path_loss_exponent", lc.path_loss_exponent);

  const auto rep = link_range(lc);
  ctx.prepare();
  write_json(ctx.out / "link.json", link_report_json(rep));
  write_text(ctx.out / "link.txt", link_report_text(rep));
  ctx.manifest(json{{"ptx_dbm", lc.ptx_dbm},
                    {"bw_hz", lc.bw_hz},
                    {"nf_db", lc.nf_db},
                    {"snr_req_db", lc.snr_req_db},
                    {"ant_gain_dbi", lc.ant_gain_dbi},
                    {"impl_loss_db", lc.impl_loss_db},
                    {"fading_margin_db", lc.fading_margin_db},
                    {"residual_si_penalty_db", lc.residual_si_penalty_db},
                    {"freq_hz", lc.freq_hz},
                    {"extra_bb_sic_db", lc.extra_bb_sic_db},
                    {"path_loss_exponent", lc.path_loss_exponent}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"circulator-receiver model runner"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", format = "csv";
  std::uint64_t seed = 1;
  bool seed_given = false;
  app.add_option("--config", config_path, "JSON parameter file")
      ->each([](const std::string&) {});
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", seed, "RNG seed")
      ->each([&](const std::string&) { seed_given = true; });

  auto* sweep = app.add_subcommand("sweep", "frequency sweep of the network");
  auto* balance = app.add_subcommand("balance", "exhaustive bank tuner");
  auto* noise = app.add_subcommand("noise", "NF vs balance impedance");
  auto* lptv = app.add_subcommand("lptv", "switched-capacitor time-domain oracle");
  auto* demo = app.add_subcommand("demo", "end-to-end full-duplex demo");
  auto* link = app.add_subcommand("link", "full-duplex link budget");
  for (auto* s : {sweep, balance, noise, lptv, demo, link}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const json cfg = load_config(config_path);
    run_context ctx{out_dir, format, seed, seed_given};
    if (sweep->parsed()) return cmd_sweep(cfg, ctx);
    if (balance->parsed()) return cmd_balance(cfg, ctx);
    if (noise->parsed()) return cmd_noise(cfg, ctx);
    if (lptv->parsed()) return cmd_lptv(cfg, ctx);
    if (demo->parsed()) return cmd_demo(cfg, ctx);
    if (link->parsed()) return cmd_link(cfg, ctx);
    return 2;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
