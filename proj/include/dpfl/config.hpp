#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpfl/data.hpp"
#include "dpfl/privacy.hpp"

namespace dpfl {

// Flat key-value experiment configuration. Unknown keys are rejected so a
// typo in a grid file fails loudly instead of silently running defaults.
struct ExperimentConfig {
  int d = 1000;
  int n = 100;
  int m = 10;
  int q = 3;
  std::optional<double> snr;          // exactly one of snr / signal_norm
  std::optional<double> signal_norm;
  double sigma_xi = 0.0;              // 0 means "derive from signal_norm and snr"
  double sigma0 = 0.001;
  double eta = 0.01;
  int T = 500;
  int record_every = 10;
  double epsilon = 1.0;
  double delta = 1e-5;
  NoiseMode noise_mode = NoiseMode::Shared;
  std::optional<double> C;            // sensitivity constant; default 4 log(T)
  double C1 = 1.0;
  double regime_c = 1.0;
  double kappa = 0.1;
  int n_mc = 10000;
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "out";

  bool signal_norm_fixed = false;  // which of {snr, signal_norm} the user pinned

  double sensitivity_constant() const { return C ? *C : 4.0 * std::log(static_cast<double>(T)); }

  // Fills whichever of {snr, signal_norm, sigma_xi} was left derived.
  void resolve() {
    if (snr.has_value() == signal_norm.has_value())
      throw std::invalid_argument("config: exactly one of {snr, signal_norm} must be given");
    signal_norm_fixed = signal_norm.has_value();
    if (!(sigma_xi > 0)) throw std::invalid_argument("config: sigma_xi must be > 0");
    if (signal_norm_fixed) {
      snr = *signal_norm / (sigma_xi * std::sqrt(static_cast<double>(d)));
    } else {
      signal_norm = solve_signal_norm(*snr, sigma_xi, d);
    }
    validate();
  }

  // Same experiment at a different SNR. Keeps whichever quantity the base
  // config pinned: fixed signal_norm re-derives sigma_xi, fixed sigma_xi
  // re-derives signal_norm.
  ExperimentConfig with_snr(double new_snr) const {
    ExperimentConfig c = *this;
    c.snr = new_snr;
    if (signal_norm_fixed) {
      c.sigma_xi = *signal_norm / (new_snr * std::sqrt(static_cast<double>(d)));
    } else {
      c.signal_norm = solve_signal_norm(new_snr, sigma_xi, d);
    }
    c.validate();
    return c;
  }

  void validate() const {
    auto need = [](bool cond, const std::string& msg) {
      if (!cond) throw std::invalid_argument("config: " + msg);
    };
    need(d >= 2, "d must be >= 2");
    need(n >= 1, "n must be >= 1");
    need(m >= 1, "m must be >= 1");
    need(q >= 3, "q must be an integer >= 3");
    need(sigma_xi >= 0, "sigma_xi must be >= 0");
    need(signal_norm && *signal_norm > 0, "signal_norm must be positive");
    need(sigma0 >= 0, "sigma0 must be >= 0");
    need(eta > 0, "eta must be positive");
    need(T >= 0, "T must be >= 0");
    need(record_every >= 1 && (T == 0 || record_every <= T), "need 1 <= record_every <= T");
    if (noise_mode != NoiseMode::None) {
      need(epsilon > 0, "epsilon must be positive");
      need(delta > 0 && delta < 1, "delta must be in (0,1)");
    }
    need(!C || *C > 0, "C must be positive");
    need(C1 > 0, "C1 must be positive");
    need(regime_c > 0, "c threshold must be positive");
    need(kappa > 0, "kappa must be positive");
    need(n_mc >= 1, "n_mc must be >= 1");
    need(!seeds.empty(), "seeds must be nonempty");
  }

  SignalSpec spec() const {
    SignalSpec s;
    s.d = d;
    s.signal_norm = *signal_norm;
    s.noise_std = sigma_xi;
    return s;
  }

  PrivacyParams privacy() const { return {epsilon, delta, noise_mode}; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::invalid_argument("config key '" + key + "': cannot parse number from '" + v + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  if (x != std::floor(x)) throw std::invalid_argument("config key '" + key + "': expected integer");
  return static_cast<int>(x);
}

}  // namespace detail

// key = value lines; '#' starts a comment.
inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key == "d") cfg.d = detail::parse_int(key, val);
    else if (key == "n") cfg.n = detail::parse_int(key, val);
    else if (key == "m") cfg.m = detail::parse_int(key, val);
    else if (key == "q") cfg.q = detail::parse_int(key, val);
    else if (key == "snr") cfg.snr = detail::parse_double(key, val);
    else if (key == "signal_norm") cfg.signal_norm = detail::parse_double(key, val);
    else if (key == "sigma_xi") cfg.sigma_xi = detail::parse_double(key, val);
    else if (key == "sigma0") cfg.sigma0 = detail::parse_double(key, val);
    else if (key == "eta") cfg.eta = detail::parse_double(key, val);
    else if (key == "T") cfg.T = detail::parse_int(key, val);
    else if (key == "record_every") cfg.record_every = detail::parse_int(key, val);
    else if (key == "epsilon") cfg.epsilon = detail::parse_double(key, val);
    else if (key == "delta") cfg.delta = detail::parse_double(key, val);
    else if (key == "noise_mode") cfg.noise_mode = noise_mode_from_string(val);
    else if (key == "C") cfg.C = detail::parse_double(key, val);
    else if (key == "C1") cfg.C1 = detail::parse_double(key, val);
    else if (key == "regime_c") cfg.regime_c = detail::parse_double(key, val);
    else if (key == "kappa") cfg.kappa = detail::parse_double(key, val);
    else if (key == "n_mc") cfg.n_mc = detail::parse_int(key, val);
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& tok : detail::split(val, ','))
        if (!tok.empty()) cfg.seeds.push_back(static_cast<std::uint64_t>(std::stoull(tok)));
      if (cfg.seeds.empty()) throw std::invalid_argument("config key 'seeds': empty list");
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
    }
  }
  cfg.resolve();
  return cfg;
}

// Grid file for sweeps and phase maps: snr/epsilon lists plus seed count.
struct GridSpec {
  std::vector<double> snr;
  std::vector<double> epsilon;
  int n_seeds = 10;
  std::uint64_t master_seed = 1;

  void validate() const {
    if (snr.empty() || epsilon.empty())
      throw std::invalid_argument("grid: snr and epsilon lists must be nonempty");
    if (n_seeds < 1) throw std::invalid_argument("grid: n_seeds must be >= 1");
  }
};

inline GridSpec parse_grid_text(const std::string& text) {
  GridSpec g;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("grid line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key == "snr" || key == "epsilon") {
      auto& dst = (key == "snr") ? g.snr : g.epsilon;
      dst.clear();
      for (const auto& tok : detail::split(val, ','))
        if (!tok.empty()) dst.push_back(detail::parse_double(key, tok));
    } else if (key == "n_seeds") {
      g.n_seeds = detail::parse_int(key, val);
    } else if (key == "master_seed") {
      g.master_seed = static_cast<std::uint64_t>(std::stoull(val));
    } else {
      throw std::invalid_argument("grid line " + std::to_string(lineno) + ": unknown key '" + key +
                                  "'");
    }
  }
  g.validate();
  return g;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline GridSpec load_grid(const std::string& path) { return parse_grid_text(read_file(path)); }

}  // namespace dpfl
