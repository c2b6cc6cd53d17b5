#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpfl/config.hpp"
#include "dpfl/decomposition.hpp"
#include "dpfl/metrics.hpp"
#include "dpfl/theory.hpp"
#include "dpfl/trainer.hpp"

namespace dpfl {

// All floating-point output uses 9 significant digits; enough to round-trip
// the acceptance tolerances.
inline std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

inline constexpr const char* kRunCsvHeader =
    "t,train_loss,max_gamma,max_abs_phi,max_phi_bar,min_phi_under,recon_residual,test_error";

inline std::string run_csv_text(const std::vector<TimePoint>& series) {
  std::ostringstream out;
  out << kRunCsvHeader << "\n";
  for (const auto& tp : series) {
    out << tp.t << ',' << fmt9(tp.train_loss) << ',' << fmt9(tp.max_gamma) << ','
        << fmt9(tp.max_abs_phi) << ',' << fmt9(tp.max_phi_bar) << ',' << fmt9(tp.min_phi_under)
        << ',' << fmt9(tp.recon_residual) << ',';
    if (tp.test_error) out << fmt9(*tp.test_error);
    out << "\n";
  }
  return out.str();
}

struct RunCsvRow {
  double t, train_loss, max_gamma, max_abs_phi, max_phi_bar, min_phi_under, recon_residual;
  std::optional<double> test_error;
};

inline std::vector<RunCsvRow> parse_run_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("run csv: empty file");
  if (detail::trim(line) != kRunCsvHeader) {
    // name the first missing column for the error message
    auto want = detail::split(kRunCsvHeader, ',');
    auto got = detail::split(detail::trim(line), ',');
    for (const auto& col : want)
      if (std::find(got.begin(), got.end(), col) == got.end())
        throw std::runtime_error("run csv: missing column '" + col + "'");
    throw std::runtime_error("run csv: unexpected header");
  }
  std::vector<RunCsvRow> rows;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    auto f = detail::split(line, ',');
    if (f.size() != 8) throw std::runtime_error("run csv: expected 8 fields per row");
    RunCsvRow r{};
    r.t = std::stod(f[0]);
    r.train_loss = std::stod(f[1]);
    r.max_gamma = std::stod(f[2]);
    r.max_abs_phi = std::stod(f[3]);
    r.max_phi_bar = std::stod(f[4]);
    r.min_phi_under = std::stod(f[5]);
    r.recon_residual = std::stod(f[6]);
    if (!f[7].empty()) r.test_error = std::stod(f[7]);
    rows.push_back(r);
  }
  return rows;
}

// Manifest carries the resolved config (signal_norm + sigma_xi, never bare
// snr) plus derived quantities; feeding it back to `run` reproduces the run.
inline nlohmann::json manifest_json(const ExperimentConfig& cfg, std::uint64_t seed, double delta2,
                                    double sigma_z, const RegimeVerdict& rv, double t1_sig,
                                    const T1Noise& t1_noi, double tp, double max_xi_norm) {
  const ConditionReport cond = condition_report(cfg.d, cfg.n, cfg.m, cfg.q, cfg.eta, cfg.sigma0,
                                                *cfg.signal_norm,
                                                cfg.sigma_xi * std::sqrt(double(cfg.d)),
                                                cfg.epsilon);
  nlohmann::json j;
  j["config"] = {{"d", cfg.d},
                 {"n", cfg.n},
                 {"m", cfg.m},
                 {"q", cfg.q},
                 {"signal_norm", *cfg.signal_norm},
                 {"sigma_xi", cfg.sigma_xi},
                 {"sigma0", cfg.sigma0},
                 {"eta", cfg.eta},
                 {"T", cfg.T},
                 {"record_every", cfg.record_every},
                 {"epsilon", cfg.epsilon},
                 {"delta", cfg.delta},
                 {"noise_mode", to_string(cfg.noise_mode)},
                 {"C", cfg.sensitivity_constant()},
                 {"C1", cfg.C1},
                 {"regime_c", cfg.regime_c},
                 {"kappa", cfg.kappa},
                 {"n_mc", cfg.n_mc},
                 {"seeds", std::vector<std::uint64_t>{seed}},
                 {"out_dir", cfg.out_dir}};
  j["derived"] = {{"snr", *cfg.snr},
                  {"delta2", delta2},
                  {"sigma_z", sigma_z},
                  {"max_xi_norm", max_xi_norm},
                  {"regime", to_string(rv.verdict)},
                  {"signal_score", rv.signal_score},
                  {"noise_score", rv.noise_score},
                  {"t1_signal", t1_sig},
                  {"t1_noise", t1_noi.as_printed},
                  {"t1_noise_xi_norm_variant", t1_noi.xi_norm_variant},
                  {"tp_star", tp}};
  for (const auto& it : cond.items)
    j["conditions"].push_back(
        {{"check", it.name}, {"pass", it.pass}, {"value", it.value}, {"limit", it.limit}});
  return j;
}

inline ExperimentConfig config_from_manifest(const nlohmann::json& j) {
  const auto& c = j.at("config");
  ExperimentConfig cfg;
  cfg.d = c.at("d");
  cfg.n = c.at("n");
  cfg.m = c.at("m");
  cfg.q = c.at("q");
  cfg.signal_norm = c.at("signal_norm").get<double>();
  cfg.sigma_xi = c.at("sigma_xi");
  cfg.sigma0 = c.at("sigma0");
  cfg.eta = c.at("eta");
  cfg.T = c.at("T");
  cfg.record_every = c.at("record_every");
  cfg.epsilon = c.at("epsilon");
  cfg.delta = c.at("delta");
  cfg.noise_mode = noise_mode_from_string(c.at("noise_mode"));
  cfg.C = c.at("C").get<double>();
  cfg.C1 = c.at("C1");
  cfg.regime_c = c.at("regime_c");
  cfg.kappa = c.at("kappa");
  cfg.n_mc = c.at("n_mc");
  cfg.seeds = c.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.out_dir = c.at("out_dir");
  cfg.resolve();
  return cfg;
}

// Accepts either a flat key-value file or a manifest JSON.
inline ExperimentConfig load_config(const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{')
    return config_from_manifest(nlohmann::json::parse(text));
  return parse_config_text(text);
}

inline void write_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

// Coefficient snapshot: t,j,r,i,gamma,phi_bar,phi_under (i empty on gamma rows).
inline std::string coefficient_csv_text(const CoefficientTable& tb) {
  std::ostringstream out;
  out << "t,j,r,i,gamma,phi_bar,phi_under\n";
  for (int k = 0; k < 2 * tb.m; ++k) {
    const int j = tb.bank_sign(k);
    const int r = (k < tb.m) ? k : k - tb.m;
    out << tb.t << ',' << j << ',' << r << ",," << fmt9(tb.gamma[k]) << ",,\n";
    for (int i = 0; i < tb.n; ++i)
      out << tb.t << ',' << j << ',' << r << ',' << i << ",," << fmt9(tb.pb(k, i)) << ','
          << fmt9(tb.pu(k, i)) << "\n";
  }
  return out.str();
}

// Weights snapshot: j,r,entries...
inline std::string weights_csv_text(const Weights& w) {
  std::ostringstream out;
  out << "j,r,entries...\n";
  for (int k = 0; k < w.bank_count(); ++k) {
    out << w.bank_sign(k) << ',' << (k < w.m ? k : k - w.m);
    for (double x : w.filter(k)) out << ',' << fmt9(x);
    out << "\n";
  }
  return out.str();
}

// Dataset export for oracle replay: i,y,patch1_0..,patch2_0..
inline std::string dataset_csv_text(const Dataset& ds) {
  std::ostringstream out;
  out << "i,y";
  const int d = ds.points.empty() ? 0 : static_cast<int>(ds.points[0].patch1.size());
  for (int c = 0; c < d; ++c) out << ",patch1_" << c;
  for (int c = 0; c < d; ++c) out << ",patch2_" << c;
  out << "\n";
  for (std::size_t i = 0; i < ds.points.size(); ++i) {
    out << i << ',' << ds.points[i].label;
    for (double x : ds.points[i].patch1) out << ',' << fmt9(x);
    for (double x : ds.points[i].patch2) out << ',' << fmt9(x);
    out << "\n";
  }
  return out.str();
}

}  // namespace dpfl
