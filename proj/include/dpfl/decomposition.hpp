#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpfl/cnn.hpp"
#include "dpfl/data.hpp"
#include "dpfl/linalg.hpp"
#include "dpfl/privacy.hpp"
#include "dpfl/vec.hpp"

namespace dpfl {

// Ledger of the unique filter decomposition
//   w_k(t) = w_k(0) + j Gamma_k v/||v||^2 + sum_i Phi_{k,i} xi_i/||xi_i||^2 - eta Z_k(t).
// gamma tracks signal learning; phi_bar (>= 0, supported on y_i = j) and
// phi_under (<= 0, supported on y_i = -j) track data-noise memorization.
// Filter index k follows the Weights layout: k < m is the +1 bank.
struct CoefficientTable {
  int m = 0;
  int n = 0;
  int t = 0;
  std::vector<double> gamma;      // 2m
  std::vector<double> phi_bar;    // 2m x n
  std::vector<double> phi_under;  // 2m x n

  double& pb(int k, int i) { return phi_bar[static_cast<std::size_t>(k) * n + i]; }
  double pb(int k, int i) const { return phi_bar[static_cast<std::size_t>(k) * n + i]; }
  double& pu(int k, int i) { return phi_under[static_cast<std::size_t>(k) * n + i]; }
  double pu(int k, int i) const { return phi_under[static_cast<std::size_t>(k) * n + i]; }
  int bank_sign(int k) const { return k < m ? 1 : -1; }
};

inline CoefficientTable init_table(int m, int n) {
  CoefficientTable tb;
  tb.m = m;
  tb.n = n;
  tb.gamma.assign(static_cast<std::size_t>(2 * m), 0.0);
  tb.phi_bar.assign(static_cast<std::size_t>(2 * m) * n, 0.0);
  tb.phi_under.assign(static_cast<std::size_t>(2 * m) * n, 0.0);
  return tb;
}

// One recursion step:
//   gamma_k     += -(eta/nm) sum_i l'_i s'(y_i <w_k,v>) ||v||^2
//   phi_bar_ki  += -(eta/nm) l'_i s'(<w_k,xi_i>) ||xi_i||^2   if y_i = j
//   phi_under_ki += (eta/nm) l'_i s'(<w_k,xi_i>) ||xi_i||^2   if y_i = -j
// `cache` must hold the pre-activations the optimizer step used at this
// iteration; sharing them is what makes the reconstruction exact.
inline void update_table(CoefficientTable& tb, const BatchCache& cache, const SignalSpec& spec,
                         const Dataset& ds, double eta) {
  const int m = tb.m, n = tb.n;
  if (cache.m != m || cache.n != n) throw std::invalid_argument("update_table: shape mismatch");
  const double v2 = spec.signal_norm * spec.signal_norm;
  const double scale = eta / (static_cast<double>(n) * m);
  std::vector<double> xi2(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) xi2[i] = norm2_sq(ds.points[i].patch2);
  for (int k = 0; k < 2 * m; ++k) {
    const int j = tb.bank_sign(k);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const int y = ds.points[i].label;
      acc += cache.lprime[i] * act_prime(y * cache.sig[k], cache.q);
      const double spn = act_prime(cache.s_noise(k, i), cache.q);
      if (spn != 0.0) {
        const double inc = -scale * cache.lprime[i] * spn * xi2[i];
        if (y == j)
          tb.pb(k, i) += inc;
        else
          tb.pu(k, i) -= inc;
      }
    }
    tb.gamma[k] += -scale * acc * v2;
  }
  ++tb.t;
}

// Rebuilds the iterate from initialization, table and noise ledger.
inline Weights reconstruct(const Weights& w0, const CoefficientTable& tb, const Dataset& ds,
                           const SignalSpec& spec, const NoiseLedger& ledger, double eta) {
  if (ledger.steps() != tb.t)
    throw std::invalid_argument("reconstruct: ledger step count " + std::to_string(ledger.steps()) +
                                " != table iteration " + std::to_string(tb.t));
  if (w0.m != tb.m || static_cast<int>(ds.size()) != tb.n)
    throw std::invalid_argument("reconstruct: shape mismatch");
  Weights w = w0;
  const auto v = spec.signal_vector();
  const double inv_v2 = 1.0 / (spec.signal_norm * spec.signal_norm);
  std::vector<double> xi2(static_cast<std::size_t>(tb.n));
  for (int i = 0; i < tb.n; ++i) xi2[i] = norm2_sq(ds.points[i].patch2);
  for (int k = 0; k < w.bank_count(); ++k) {
    auto wk = w.filter(k);
    axpy(w.bank_sign(k) * tb.gamma[k] * inv_v2, v, wk);
    for (int i = 0; i < tb.n; ++i) {
      const double phi = tb.pb(k, i) + tb.pu(k, i);
      if (phi != 0.0) axpy(phi / xi2[i], ds.points[i].patch2, wk);
    }
    axpy(-eta, ledger.channel(k), wk);
  }
  return w;
}

// Largest per-filter relative residual ||reconstruct - actual|| / (||actual|| + 1).
inline double reconstruction_residual(const Weights& w0, const Weights& w_t,
                                      const CoefficientTable& tb, const Dataset& ds,
                                      const SignalSpec& spec, const NoiseLedger& ledger,
                                      double eta) {
  const Weights rec = reconstruct(w0, tb, ds, spec, ledger, eta);
  double worst = 0.0;
  std::vector<double> diff(static_cast<std::size_t>(w_t.d));
  for (int k = 0; k < w_t.bank_count(); ++k) {
    auto a = rec.filter(k);
    auto b = w_t.filter(k);
    for (int c = 0; c < w_t.d; ++c) diff[c] = a[c] - b[c];
    worst = std::max(worst, norm2(diff) / (norm2(b) + 1.0));
  }
  return worst;
}

// Independent recovery of the table from raw weights: Gamma from the signal
// projection, Phi from the n x n Gram system over the noise patches. Used as
// a cross-check oracle against the recursive tracker.
//   G[i,i'] = <xi_i', xi_i>/||xi_i'||^2,  b[i] = <dw + eta Z - j Gamma v/||v||^2, xi_i>.
inline CoefficientTable direct_solve(const Weights& w0, const Weights& w_t, const Dataset& ds,
                                     const SignalSpec& spec, const NoiseLedger& ledger, double eta,
                                     double cond_limit = 1e12) {
  const int n = static_cast<int>(ds.size());
  const int m = w_t.m;
  if (n > w_t.d - 1)
    throw std::invalid_argument("direct_solve: needs n <= d-1 for independent noise patches");
  CoefficientTable tb = init_table(m, n);
  tb.t = ledger.steps();

  std::vector<double> gram(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int ip = 0; ip < n; ++ip)
      gram[static_cast<std::size_t>(i) * n + ip] =
          dot(ds.points[ip].patch2, ds.points[i].patch2) / norm2_sq(ds.points[ip].patch2);
  const double cond = condition_number_1(gram, n);
  if (!(cond < cond_limit))
    throw std::runtime_error("direct_solve: Gram system condition " + std::to_string(cond) +
                             " exceeds limit " + std::to_string(cond_limit));
  LuFactors lu(gram, n);

  const auto v = spec.signal_vector();
  const double inv_v2 = 1.0 / (spec.signal_norm * spec.signal_norm);
  std::vector<double> u(static_cast<std::size_t>(w_t.d));
  std::vector<double> b(static_cast<std::size_t>(n));
  for (int k = 0; k < 2 * m; ++k) {
    const int j = tb.bank_sign(k);
    auto wt = w_t.filter(k);
    auto w0k = w0.filter(k);
    auto z = ledger.channel(k);
    for (int c = 0; c < w_t.d; ++c) u[c] = wt[c] - w0k[c] + eta * z[c];
    // <j Gamma v/||v||^2, v> = j Gamma, so Gamma = j <u, v>.
    tb.gamma[k] = j * dot(u, v);
    axpy(-j * tb.gamma[k] * inv_v2, v, u);
    for (int i = 0; i < n; ++i) b[i] = dot(u, ds.points[i].patch2);
    const auto phi = lu.solve(b);
    for (int i = 0; i < n; ++i) {
      if (phi[i] >= 0)
        tb.pb(k, i) = phi[i];
      else
        tb.pu(k, i) = phi[i];
    }
  }
  return tb;
}

struct CoefficientSummary {
  double max_gamma = 0.0;
  double max_abs_phi = 0.0;
  double max_phi_bar = 0.0;
  double min_phi_under = 0.0;
};

inline CoefficientSummary summary(const CoefficientTable& tb) {
  CoefficientSummary s;
  for (double g : tb.gamma) s.max_gamma = std::max(s.max_gamma, g);
  for (double p : tb.phi_bar) s.max_phi_bar = std::max(s.max_phi_bar, p);
  for (double p : tb.phi_under) s.min_phi_under = std::min(s.min_phi_under, p);
  s.max_abs_phi = std::max(s.max_phi_bar, -s.min_phi_under);
  return s;
}

struct BoxViolation {
  std::string which;  // "gamma", "phi_bar", "phi_under"
  int k = 0;
  int i = -1;
  double value = 0.0;
};

struct BoundsReport {
  double box = 0.0;  // 4 log(T_p*)
  std::vector<BoxViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Coefficient box [0, 4 log(T_p*)]; negative gamma or phi_bar would flag a
// sign bug, values past the box flag runaway dynamics. Reports, never throws.
inline BoundsReport bounds_check(const CoefficientTable& tb, double t_p_star) {
  if (!(t_p_star > 1)) throw std::invalid_argument("bounds_check: T_p* must be > 1");
  BoundsReport rep;
  rep.box = 4.0 * std::log(t_p_star);
  for (int k = 0; k < 2 * tb.m; ++k) {
    if (tb.gamma[k] < 0 || tb.gamma[k] > rep.box)
      rep.violations.push_back({"gamma", k, -1, tb.gamma[k]});
    for (int i = 0; i < tb.n; ++i) {
      if (tb.pb(k, i) < 0 || tb.pb(k, i) > rep.box)
        rep.violations.push_back({"phi_bar", k, i, tb.pb(k, i)});
      if (tb.pu(k, i) > 0 || tb.pu(k, i) < -rep.box)
        rep.violations.push_back({"phi_under", k, i, tb.pu(k, i)});
    }
  }
  return rep;
}

// Exact (toleranceless) monotonicity between consecutive snapshots: gamma and
// phi_bar may only grow, phi_under may only shrink. Returns a witness string
// for the first violation, empty when clean.
inline std::string table_monotone_violation(const CoefficientTable& prev,
                                            const CoefficientTable& next) {
  for (int k = 0; k < 2 * prev.m; ++k) {
    const int j = prev.bank_sign(k);
    const int r = (k < prev.m) ? k : k - prev.m;
    if (next.gamma[k] < prev.gamma[k])
      return "gamma decreased at (j=" + std::to_string(j) + ",r=" + std::to_string(r) +
             ",t=" + std::to_string(next.t) + ")";
    for (int i = 0; i < prev.n; ++i) {
      if (next.pb(k, i) < prev.pb(k, i))
        return "phi_bar decreased at (j=" + std::to_string(j) + ",r=" + std::to_string(r) +
               ",i=" + std::to_string(i) + ",t=" + std::to_string(next.t) + ")";
      if (next.pu(k, i) > prev.pu(k, i))
        return "phi_under increased at (j=" + std::to_string(j) + ",r=" + std::to_string(r) +
               ",i=" + std::to_string(i) + ",t=" + std::to_string(next.t) + ")";
    }
  }
  return "";
}

// Exact support structure: phi_bar lives on y_i = j, phi_under on y_i = -j.
inline std::string table_indicator_violation(const CoefficientTable& tb, const Dataset& ds) {
  for (int k = 0; k < 2 * tb.m; ++k) {
    const int j = tb.bank_sign(k);
    const int r = (k < tb.m) ? k : k - tb.m;
    for (int i = 0; i < tb.n; ++i) {
      if (ds.points[i].label != j && tb.pb(k, i) != 0.0)
        return "phi_bar nonzero off-support at (j=" + std::to_string(j) +
               ",r=" + std::to_string(r) + ",i=" + std::to_string(i) + ")";
      if (ds.points[i].label == j && tb.pu(k, i) != 0.0)
        return "phi_under nonzero off-support at (j=" + std::to_string(j) +
               ",r=" + std::to_string(r) + ",i=" + std::to_string(i) + ")";
    }
  }
  return "";
}

struct ProjectionMargin {
  std::string channel;  // "v" or "xi_<i>"
  double realized = 0.0;
  double bound = 0.0;
  bool ok() const { return realized <= bound; }
};

struct ProjectionReport {
  bool applicable = true;  // false in per-filter mode
  std::string note;
  std::vector<ProjectionMargin> margins;
  bool ok() const {
    return std::all_of(margins.begin(), margins.end(),
                       [](const ProjectionMargin& m) { return m.ok(); });
  }
};

// Realized accumulated-noise projections |eta <Z(t), v>| and |eta <Z(t), xi_i>|
// against the envelopes
//   eta C sqrt(tT) ||v||^2  log(d) (1 + 1/SNR) / (m n eps)
//   eta C sqrt(tT) ||xi_i||^2 log(d) (1 + SNR) / (m n eps).
// Only meaningful for the shared-noise channel.
inline ProjectionReport privacy_projection_check(const NoiseLedger& ledger, const SignalSpec& spec,
                                                 const Dataset& ds, double eta, int t, int T, int m,
                                                 int n, double epsilon, double C) {
  ProjectionReport rep;
  if (ledger.mode() == NoiseMode::PerFilter) {
    rep.applicable = false;
    rep.note = "per-filter noise: the shared-channel projection bound does not apply";
    return rep;
  }
  const auto v = spec.signal_vector();
  const double snr_val = snr(spec).value_or(std::numeric_limits<double>::infinity());
  const double logd = std::log(static_cast<double>(spec.d));
  const double base = eta * C * std::sqrt(static_cast<double>(t) * T) * logd /
                      (static_cast<double>(m) * n * epsilon);
  auto z = ledger.channel(0);
  ProjectionMargin mv;
  mv.channel = "v";
  mv.realized = std::abs(eta * dot(z, v));
  mv.bound = base * spec.signal_norm * spec.signal_norm * (1.0 + 1.0 / snr_val);
  rep.margins.push_back(mv);
  for (int i = 0; i < static_cast<int>(ds.size()); ++i) {
    ProjectionMargin mx;
    mx.channel = "xi_" + std::to_string(i);
    mx.realized = std::abs(eta * dot(z, ds.points[i].patch2));
    mx.bound = base * norm2_sq(ds.points[i].patch2) * (1.0 + snr_val);
    rep.margins.push_back(mx);
  }
  return rep;
}

}  // namespace dpfl
