#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpfl {

enum class Regime { Signal, Noise, Indeterminate, Both };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::Signal: return "Signal";
    case Regime::Noise: return "Noise";
    case Regime::Indeterminate: return "Indeterminate";
    case Regime::Both: return "Both";
  }
  return "?";
}

struct RegimeVerdict {
  double signal_score = 0.0;  // min{SNR n eps, SNR^q n}
  double noise_score = 0.0;   // min{eps/SNR, SNR^-q / n}
  double threshold = 1.0;
  Regime verdict = Regime::Indeterminate;
};

// Classifies a parameter point by the two composite conditions. Both scores
// clearing the threshold is reported as such: it flags inconsistent
// parameters to the user rather than silently picking a side.
inline RegimeVerdict regime(double snr, double n, double epsilon, int q, double c = 1.0) {
  if (!(snr > 0) || !(n > 0) || !(epsilon > 0) || !(c > 0) || q < 1)
    throw std::invalid_argument("regime: arguments must be positive");
  RegimeVerdict rv;
  rv.threshold = c;
  const double snr_q = std::pow(snr, q);
  rv.signal_score = std::min(snr * n * epsilon, snr_q * n);
  rv.noise_score = std::min(epsilon / snr, 1.0 / (snr_q * n));
  const bool sig = rv.signal_score >= c;
  const bool noi = rv.noise_score >= c;
  rv.verdict = sig ? (noi ? Regime::Both : Regime::Signal)
                   : (noi ? Regime::Noise : Regime::Indeterminate);
  return rv;
}

// First-stage horizon for signal learning:
//   T1 = log(16/(sigma0 ||v||)) 4^{q-1} m / (C1 eta q sigma0^{q-2} ||v||^q).
inline double t1_signal(double sigma0, double vnorm, double eta, int q, int m, double C1 = 1.0) {
  if (!(sigma0 > 0) || !(vnorm > 0) || !(eta > 0) || !(C1 > 0) || q < 3 || m < 1)
    throw std::invalid_argument("t1_signal: arguments out of domain");
  if (!(sigma0 * vnorm < 16.0))
    throw std::domain_error("t1_signal: requires sigma0 ||v|| < 16 (log would be nonpositive)");
  const double num = std::log(16.0 / (sigma0 * vnorm)) * std::pow(4.0, q - 1) * m;
  const double den = C1 * eta * q * std::pow(sigma0, q - 2) * std::pow(vnorm, q);
  return num / den;
}

struct T1Noise {
  double as_printed = 0.0;      // denominator uses (sigma_xi^2 sqrt(d))^q
  double xi_norm_variant = 0.0; // denominator uses ||xi||^q ~ (sigma_xi sqrt(d))^q
};

// First-stage horizon for noise memorization. The published denominator
// (sigma_xi^2 sqrt(d))^q and the ||xi||^q form its derivation works with
// disagree dimensionally; both are computed and reported side by side.
inline T1Noise t1_noise(double sigma0, double sigma_xi, int d, double eta, int q, int m, int n,
                        double C = 1.0) {
  if (!(sigma0 > 0) || !(sigma_xi > 0) || d < 2 || !(eta > 0) || !(C > 0) || q < 3 || m < 1 ||
      n < 1)
    throw std::invalid_argument("t1_noise: arguments out of domain");
  const double sd = sigma_xi * std::sqrt(static_cast<double>(d));
  if (!(sigma0 * sd < 1.0))
    throw std::domain_error("t1_noise: requires sigma0 sigma_xi sqrt(d) < 1");
  const double num = C * std::log(1.0 / (sigma0 * sd)) * m * n;
  const double den_common = std::pow(0.15, q - 2) * eta * q * std::pow(sigma0, q - 2);
  T1Noise out;
  out.as_printed = num / (den_common * std::pow(sigma_xi * sigma_xi * std::sqrt(double(d)), q));
  out.xi_norm_variant = num / (den_common * std::pow(sd, q));
  return out;
}

// Maximum permissible private horizon:
//   T_p* = min{ T*, eta^-1 C m n eps sigma0 mu^-1 (||v|| + ||xi||)^-1 },
// mu = max{1, ||v||, ||xi||}. ||xi|| is a caller-supplied proxy (we pass
// max_i ||xi_i|| where a dataset exists).
inline double tp_star(double eta, int m, int n, double epsilon, double sigma0, double vnorm,
                      double xi_norm, double T_star, double C) {
  if (!(eta > 0) || m < 1 || n < 1 || !(epsilon > 0) || !(sigma0 > 0) || !(vnorm > 0) ||
      !(xi_norm > 0) || !(T_star > 0) || !(C > 0))
    throw std::invalid_argument("tp_star: arguments must be positive");
  const double mu = std::max({1.0, vnorm, xi_norm});
  const double cap = C * m * n * epsilon * sigma0 / (eta * mu * (vnorm + xi_norm));
  return std::min(T_star, cap);
}

struct ConditionItem {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string relation;  // ">=" or "<="
};

struct ConditionReport {
  std::vector<ConditionItem> items;
  bool all_pass() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }
};

// Advisory checks of the learning-setup conditions with all hidden constants
// set to `big_o_constant` (default 1). Never gates a run; margins are data.
inline ConditionReport condition_report(int d, int n, int m, int q, double eta, double sigma0,
                                        double vnorm, double xi_norm, double epsilon,
                                        double big_o_constant = 1.0) {
  ConditionReport rep;
  const double co = big_o_constant;
  auto add = [&](std::string name, double value, double limit, bool lower_bound) {
    ConditionItem it;
    it.name = std::move(name);
    it.value = value;
    it.limit = limit;
    it.relation = lower_bound ? ">=" : "<=";
    it.pass = lower_bound ? (value >= limit) : (value <= limit);
    rep.items.push_back(it);
  };

  const double me = std::max(2.0, 4.0 / (q - 2.0));
  const double ne = std::max(4.0, (2.0 * q - 2.0) / (q - 2.0));
  add("d growth: d >= C m^{2 v 4/(q-2)} n^{4 v (2q-2)/(q-2)}", d,
      co * std::pow(m, me) * std::pow(n, ne), true);
  const double logd = std::log(static_cast<double>(d));
  add("sample floor: n >= C log(d)", n, co * logd, true);
  add("width floor: m >= C log(d)", m, co * logd, true);
  add("step ceiling: eta <= C min{||v||^-2, ||xi||^-2}", eta,
      co * std::min(1.0 / (vnorm * vnorm), 1.0 / (xi_norm * xi_norm)), false);
  add("init floor: sigma0 >= C (n eps)^{-1/q} ||v||^-1", sigma0,
      co * std::pow(n * epsilon, -1.0 / q) / vnorm, true);
  const double up = co * std::min({std::pow(epsilon, -1.0 / q) / xi_norm,
                                   std::pow(static_cast<double>(n), -1.0 / (2.0 * q)) / vnorm,
                                   std::pow(n * epsilon, (-1.0 - q) / q) / xi_norm});
  add("init ceiling: sigma0 <= C min{eps^{-1/q}||xi||^-1, n^{-1/2q}||v||^-1, (n eps)^{-(q+1)/q}||xi||^-1}",
      sigma0, up, false);
  return rep;
}

}  // namespace dpfl
