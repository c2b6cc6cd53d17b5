#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dpfl/harness.hpp"

namespace dpfl {

struct CheckResult {
  std::string module;
  std::string name;
  bool pass = false;
  bool hard = true;  // hard failures drive the exit status
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (c.hard && !c.pass) return false;
    return true;
  }
};

namespace verify_detail {

// Straight-line reference gradient, no cache sharing; kept deliberately
// independent of grad_from_cache.
inline std::vector<double> ref_gradient(const Weights& w, const SignalSpec& spec,
                                        const Dataset& ds) {
  const int n = static_cast<int>(ds.size());
  const auto v = spec.signal_vector();
  std::vector<double> g(w.filters.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto& p = ds.points[i];
    double fp = 0.0, fm = 0.0;
    for (int r = 0; r < w.m; ++r) {
      fp += act(dot(w.filter(r), p.patch1), w.q) + act(dot(w.filter(r), p.patch2), w.q);
      fm += act(dot(w.filter(w.m + r), p.patch1), w.q) +
            act(dot(w.filter(w.m + r), p.patch2), w.q);
    }
    const double lp = loss_prime(p.label * (fp - fm) / w.m);
    for (int k = 0; k < w.bank_count(); ++k) {
      const int j = (k < w.m) ? 1 : -1;
      const double c1 = lp * p.label * j * act_prime(dot(w.filter(k), p.patch1), w.q) /
                        (static_cast<double>(n) * w.m);
      const double c2 = lp * p.label * j * act_prime(dot(w.filter(k), p.patch2), w.q) /
                        (static_cast<double>(n) * w.m);
      for (int c = 0; c < w.d; ++c) {
        g[static_cast<std::size_t>(k) * w.d + c] += c1 * p.patch1[c] + c2 * p.patch2[c];
      }
    }
  }
  return g;
}

inline SignalSpec small_spec(int d, double vnorm, double sigma_xi) {
  SignalSpec s;
  s.d = d;
  s.signal_norm = vnorm;
  s.noise_std = sigma_xi;
  return s;
}

}  // namespace verify_detail

// Small-scale invariant bundle behind the `verify` subcommand. Hard checks
// decide the exit status; Monte Carlo checks report pass fractions against
// their thresholds.
inline VerifyReport run_verify(bool quick = false) {
  VerifyReport rep;
  auto add = [&](const std::string& module, const std::string& name, bool pass,
                 const std::string& detail, bool hard = true) {
    rep.checks.push_back({module, name, pass, hard, detail});
  };

  // ---- data model ----
  {
    const SignalSpec spec = verify_detail::small_spec(200, 1.5, 0.3);
    RngStream rng(42);
    const int draws = quick ? 2000 : 10000;
    const auto v = spec.signal_vector();
    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
      auto xi = sample_noise(spec, rng);
      worst = std::max(worst, std::abs(dot(xi, v)) / (spec.signal_norm * norm2(xi)));
    }
    add("data-model", "noise orthogonal to signal", worst <= 1e-10,
        "max |<xi,v>|/(||v|| ||xi||) = " + fmt9(worst) + " (limit 1e-10)");
  }
  {
    const SignalSpec spec = verify_detail::small_spec(64, 1.0, 0.5);
    RngStream a(7), b(7);
    const Dataset d1 = sample_dataset(spec, 50, a);
    const Dataset d2 = sample_dataset(spec, 50, b);
    bool same = true;
    for (int i = 0; i < 50 && same; ++i)
      same = d1.points[i].label == d2.points[i].label && d1.points[i].patch2 == d2.points[i].patch2;
    add("data-model", "fixed seed reproduces datasets bit-identically", same,
        same ? "50 points identical" : "datasets differ");
  }
  {
    RngStream rng(11);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const double s = 0.05 + 3 * rng.uniform01();
      const double sx = 0.01 + rng.uniform01();
      const int d = 5 + static_cast<int>(rng.uniform01() * 500);
      SignalSpec spec = verify_detail::small_spec(d, solve_signal_norm(s, sx, d), sx);
      worst = std::max(worst, std::abs(*snr(spec) - s));
    }
    add("data-model", "snr / solve_signal_norm round-trip", worst <= 1e-12,
        "max |snr - target| = " + fmt9(worst));
  }
  {
    const SignalSpec spec = verify_detail::small_spec(1000, 1.0, 1.0);
    const int n_sets = quick ? 5 : 20;
    int clean = 0;
    std::string witness = "all norm windows clean";
    for (int s = 0; s < n_sets; ++s) {
      RngStream rng(100 + s);
      const Dataset ds = sample_dataset(spec, 100, rng);
      const auto crep = concentration_report(ds, spec, 0.01);
      if (crep.norms_ok)
        ++clean;
      else
        witness = "norm window violated in dataset seed " + std::to_string(100 + s);
    }
    add("data-model", "noise norm concentration window", clean == n_sets,
        std::to_string(clean) + "/" + std::to_string(n_sets) + " datasets clean; " + witness);
  }

  // ---- cnn ----
  {
    const bool ok = act(2, 3) == 8.0 && act(-1, 3) == 0.0 && act_prime(0, 3) == 0.0 &&
                    std::abs(act_prime(0.5, 3) - 0.75) < 1e-15;
    add("cnn", "polynomial relu spot values", ok, "act(2,3)=8, act'(0.5,3)=0.75");
  }
  {
    const double l50 = logistic_loss(50);
    bool ok = l50 > 0 && std::abs(l50 / 1.9287498479639178e-22 - 1) < 1e-9;
    ok = ok && logistic_loss(1e4) >= 0 && std::isfinite(logistic_loss(-1e4));
    // strict open interval where representable; saturates to -1.0 below
    // z ~ -37 and to -0.0 above z ~ 745, so the extremes get closed bounds
    for (double z = -30; z <= 30; z += 0.37)
      ok = ok && loss_prime(z) > -1.0 && loss_prime(z) < 0.0;
    for (double z = -1e4; z <= 1e4; z += 97.3)
      ok = ok && loss_prime(z) >= -1.0 && loss_prime(z) <= 0.0;
    add("cnn", "logistic loss stable, loss' in (-1,0)", ok, "l(50)=" + fmt9(l50));
  }
  {
    RngStream rng(21);
    const int instances = quick ? 3 : 10;
    double worst = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
      SignalSpec spec = verify_detail::small_spec(20, 1.5, 0.4);
      RngStream drng = rng.derive("data", inst);
      Dataset ds = sample_dataset(spec, 5, drng);
      RngStream wrng = rng.derive("w", inst);
      Weights w = init_weights(2, 20, 3, InitSpec{0.5}, wrng);
      const Gradient g = grad(w, spec, ds);
      const double h = 1e-5;
      for (std::size_t c = 0; c < w.filters.size(); ++c) {
        Weights wp = w, wm = w;
        wp.filters[c] += h;
        wm.filters[c] -= h;
        const double fd = (train_loss(wp, spec, ds) - train_loss(wm, spec, ds)) / (2 * h);
        const double a = g.g[c];
        const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-10});
        worst = std::max(worst, rel);
      }
    }
    add("cnn", "analytic gradient matches central differences", worst <= 1e-5,
        "max relative error " + fmt9(worst) + " over " + std::to_string(instances) +
            " instances (limit 1e-5)");
  }
  {
    SignalSpec spec = verify_detail::small_spec(16, 1.0, 0.5);
    RngStream rng(31);
    Dataset ds = sample_dataset(spec, 3, rng);
    Weights w = init_weights(3, 16, 3, InitSpec{0.7}, rng);
    double worst = 0.0;
    for (double c : {0.5, 2.0}) {
      Weights wc = w;
      for (auto& x : wc.filters) x *= c;
      for (const auto& p : ds.points) {
        const double f1 = forward(wc, p);
        const double f2 = std::pow(c, w.q) * forward(w, p);
        worst = std::max(worst, std::abs(f1 - f2) / std::max(1e-30, std::abs(f2)));
      }
    }
    Weights swapped = w;
    for (int r = 0; r < w.m; ++r)
      for (int c = 0; c < w.d; ++c)
        std::swap(swapped.filter(r)[c], swapped.filter(w.m + r)[c]);
    bool anti = true;
    for (const auto& p : ds.points)
      anti = anti && forward(swapped, p) == -forward(w, p);
    add("cnn", "q-homogeneity and bank antisymmetry", worst <= 1e-10 && anti,
        "homogeneity rel err " + fmt9(worst) + ", antisymmetry exact: " + (anti ? "yes" : "no"));
  }

  // ---- noisy-gd ----
  {
    const NoiseCalibration c1 = calibrate_sigma(1.0, {1.0, 1e-5, NoiseMode::Shared}, 1);
    const NoiseCalibration c2 = calibrate_sigma(0.01, {1.0, 1e-5, NoiseMode::Shared}, 500);
    const bool ok = std::abs(c1.sigma_z - 4.84480) < 1e-4 && std::abs(c2.sigma_z - 1.08333) < 1e-4;
    add("noisy-gd", "gaussian mechanism spot calibrations", ok,
        "sigma_z(1,1,1e-5,T=1)=" + fmt9(c1.sigma_z) + ", sigma_z(0.01,1,1e-5,T=500)=" +
            fmt9(c2.sigma_z));
  }
  {
    auto sig = [](double d2, double eps, int T) {
      return calibrate_sigma(d2, {eps, 1e-5, NoiseMode::Shared}, T).sigma_z;
    };
    const bool ok = sig(1, 2, 100) < sig(1, 1, 100) && sig(1, 1, 200) > sig(1, 1, 100) &&
                    sig(2, 1, 100) > sig(1, 1, 100) &&
                    calibrate_sigma(5, {1, 1e-5, NoiseMode::None}, 9).sigma_z == 0.0;
    add("noisy-gd", "calibration monotone in eps, T, sensitivity", ok, "strict orderings hold");
  }
  {
    // mode=none trajectory against an independent plain-GD loop
    SignalSpec spec = verify_detail::small_spec(60, 2.0, 0.5);
    RngStream rng(55);
    Dataset ds = sample_dataset(spec, 12, rng);
    const double eta = 0.05;
    const int T = quick ? 20 : 60;
    RngStream wrng(77);
    Weights w = init_weights(2, 60, 3, InitSpec{0.3}, wrng);
    Weights ref = w;
    NoiseLedger ledger(NoiseMode::None, 2, 60);
    NoiseCalibration calib;
    calib.mode = NoiseMode::None;
    RngStream noise_rng(1);
    double worst = 0.0;
    for (int t = 0; t < T; ++t) {
      step(w, spec, ds, eta, calib, noise_rng, ledger);
      const auto g = verify_detail::ref_gradient(ref, spec, ds);
      for (std::size_t c = 0; c < ref.filters.size(); ++c) ref.filters[c] -= eta * g[c];
      for (std::size_t c = 0; c < ref.filters.size(); ++c)
        worst = std::max(worst, std::abs(w.filters[c] - ref.filters[c]));
    }
    add("noisy-gd", "noiseless mode reduces to plain gradient descent", worst <= 1e-12,
        "max divergence " + fmt9(worst) + " over " + std::to_string(T) + " steps (limit 1e-12)");
  }
  {
    // ledger consistency: noisy iterate = gradient-only shadow - eta Z(t)
    SignalSpec spec = verify_detail::small_spec(40, 1.5, 0.6);
    RngStream rng(66);
    Dataset ds = sample_dataset(spec, 8, rng);
    const double eta = 0.03;
    RngStream wrng(88);
    Weights w = init_weights(2, 40, 3, InitSpec{0.4}, wrng);
    std::vector<double> shadow = w.filters;
    NoiseLedger ledger(NoiseMode::Shared, 2, 40);
    NoiseCalibration calib;
    calib.mode = NoiseMode::Shared;
    calib.sigma_z = 0.2;
    RngStream noise_rng(3);
    double worst = 0.0;
    const int T = quick ? 15 : 40;
    for (int t = 0; t < T; ++t) {
      const Gradient g = grad(w, spec, ds);
      step(w, spec, ds, eta, calib, noise_rng, ledger, forward_batch(w, spec, ds));
      for (std::size_t c = 0; c < shadow.size(); ++c) shadow[c] -= eta * g.g[c];
      for (int k = 0; k < w.bank_count(); ++k) {
        auto z = ledger.channel(k);
        for (int c = 0; c < w.d; ++c) {
          const double expect = shadow[static_cast<std::size_t>(k) * w.d + c] - eta * z[c];
          worst = std::max(worst, std::abs(w.filter(k)[c] - expect));
        }
      }
    }
    add("noisy-gd", "ledger differences replay the noisy trajectory", worst <= 1e-10,
        "max residual " + fmt9(worst) + " (limit 1e-10)");
  }
  {
    // realized neighboring-dataset gradient differences against the bound
    SignalSpec spec = verify_detail::small_spec(200, 1.0, 0.4);
    const int pairs = quick ? 5 : 20;
    double worst_ratio = 0.0;
    for (int p = 0; p < pairs; ++p) {
      RngStream rng(700 + p);
      Dataset ds = sample_dataset(spec, 20, rng);
      Dataset ds2 = ds;
      RngStream swap_rng = rng.derive("swap");
      DataPoint np;
      np.label = swap_rng.rademacher();
      const auto v = spec.signal_vector();
      np.patch1.resize(v.size());
      for (std::size_t c = 0; c < v.size(); ++c) np.patch1[c] = np.label * v[c];
      np.patch2 = sample_noise(spec, swap_rng);
      ds2.points[0] = np;
      ds2.stats = compute_stats(ds2);
      RngStream wrng = rng.derive("w");
      Weights w = init_weights(3, 200, 3, InitSpec{0.2}, wrng);
      const Gradient g1 = grad(w, spec, ds);
      const Gradient g2 = grad(w, spec, ds2);
      const double C = 4.0 * std::log(500.0);
      double bound = sensitivity_bound(spec, ds, 3, C);
      bound = std::max(bound, sensitivity_bound(spec, ds2, 3, C));
      // the bound covers each filter's gradient shift (one noise draw per filter)
      for (int k = 0; k < w.bank_count(); ++k) {
        double diff2 = 0.0;
        for (int c = 0; c < w.d; ++c) {
          const double dd = g1.filter(k)[c] - g2.filter(k)[c];
          diff2 += dd * dd;
        }
        worst_ratio = std::max(worst_ratio, std::sqrt(diff2) / bound);
      }
    }
    add("noisy-gd", "neighboring-dataset gradient difference within bound", worst_ratio <= 1.0,
        "max realized/bound = " + fmt9(worst_ratio) + " over " + std::to_string(pairs) + " pairs");
  }

  // ---- decomposition ----
  for (const bool noisy : {false, true}) {
    ExperimentConfig cfg;
    cfg.d = 200;
    cfg.n = 10;
    cfg.m = 2;
    cfg.q = 3;
    cfg.signal_norm = 4.0;
    cfg.sigma_xi = 4.0 / (0.6 * std::sqrt(200.0));
    cfg.sigma0 = 0.01;
    cfg.eta = 0.01;
    cfg.T = quick ? 25 : 50;
    cfg.record_every = 5;
    cfg.epsilon = 1.0;
    cfg.C = 0.007;
    cfg.noise_mode = noisy ? NoiseMode::Shared : NoiseMode::None;
    cfg.n_mc = 100;
    cfg.resolve();
    const RunOutput out = run_one(cfg, 2024);
    double worst = 0.0;
    for (const auto& tp : out.train.series) worst = std::max(worst, tp.recon_residual);
    add("decomposition",
        std::string("reconstruction residual, ") + (noisy ? "shared-noise" : "noiseless") + " run",
        worst <= 1e-8, "max residual " + fmt9(worst) + " (limit 1e-8)");
  }
  {
    // recursive tracker vs the Gram-system oracle
    const int seeds = quick ? 2 : 5;
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) {
      ExperimentConfig cfg;
      cfg.d = 200;
      cfg.n = 10;
      cfg.m = 2;
      cfg.q = 3;
      cfg.signal_norm = 4.0;
      cfg.sigma_xi = 0.4;
      cfg.sigma0 = 0.01;
      cfg.eta = 0.01;
      cfg.T = 50;
      cfg.record_every = 10;
      cfg.noise_mode = NoiseMode::None;
      cfg.n_mc = 10;
      cfg.resolve();
      const RunOutput out = run_one(cfg, 3000 + s);
      const SignalSpec spec = cfg.spec();
      const CoefficientTable oracle = direct_solve(out.train.initial, out.train.final_weights,
                                                   out.dataset, spec, out.train.ledger, cfg.eta);
      for (int k = 0; k < 2 * cfg.m; ++k) {
        worst = std::max(worst, std::abs(oracle.gamma[k] - out.train.table.gamma[k]));
        for (int i = 0; i < cfg.n; ++i) {
          worst = std::max(worst, std::abs(oracle.pb(k, i) - out.train.table.pb(k, i)));
          worst = std::max(worst, std::abs(oracle.pu(k, i) - out.train.table.pu(k, i)));
        }
      }
    }
    add("decomposition", "recursive table agrees with direct Gram solve", worst <= 1e-6,
        "max entrywise gap " + fmt9(worst) + " (limit 1e-6)");
  }
  {
    // planted-table round trip through reconstruct -> direct_solve
    SignalSpec spec = verify_detail::small_spec(150, 2.0, 0.5);
    RngStream rng(91);
    Dataset ds = sample_dataset(spec, 8, rng);
    RngStream wrng(92);
    const Weights w0 = init_weights(2, 150, 3, InitSpec{0.1}, wrng);
    CoefficientTable tb = init_table(2, 8);
    tb.t = 0;
    RngStream trng(93);
    for (auto& g : tb.gamma) g = trng.uniform01();
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 8; ++i) {
        if (ds.points[i].label == tb.bank_sign(k))
          tb.pb(k, i) = trng.uniform01();
        else
          tb.pu(k, i) = -trng.uniform01();
      }
    NoiseLedger empty(NoiseMode::Shared, 2, 150);
    const Weights wt = reconstruct(w0, tb, ds, spec, empty, 0.01);
    const CoefficientTable rec = direct_solve(w0, wt, ds, spec, empty, 0.01);
    double worst = 0.0;
    for (int k = 0; k < 4; ++k) {
      worst = std::max(worst, std::abs(rec.gamma[k] - tb.gamma[k]));
      for (int i = 0; i < 8; ++i) {
        worst = std::max(worst, std::abs(rec.pb(k, i) - tb.pb(k, i)));
        worst = std::max(worst, std::abs(rec.pu(k, i) - tb.pu(k, i)));
      }
    }
    add("decomposition", "planted table recovered by the oracle", worst <= 1e-8,
        "max entrywise gap " + fmt9(worst) + " (limit 1e-8)");
  }
  {
    // monotonicity + indicator structure along a real run, exact comparisons
    SignalSpec spec = verify_detail::small_spec(100, 3.0, 0.8);
    RngStream rng(95);
    Dataset ds = sample_dataset(spec, 12, rng);
    RngStream wrng(96);
    Weights w = init_weights(2, 100, 3, InitSpec{0.05}, wrng);
    CoefficientTable tb = init_table(2, 12);
    NoiseLedger ledger(NoiseMode::Shared, 2, 100);
    NoiseCalibration calib;
    calib.mode = NoiseMode::Shared;
    calib.sigma_z = 0.05;
    RngStream noise_rng(97);
    std::string viol;
    const int T = quick ? 30 : 80;
    for (int t = 0; t < T && viol.empty(); ++t) {
      const BatchCache cache = forward_batch(w, spec, ds);
      const CoefficientTable prev = tb;
      step(w, spec, ds, 0.02, calib, noise_rng, ledger, cache);
      update_table(tb, cache, spec, ds, 0.02);
      viol = table_monotone_violation(prev, tb);
      if (viol.empty()) viol = table_indicator_violation(tb, ds);
    }
    add("decomposition", "monotone coefficients with exact indicator support", viol.empty(),
        viol.empty() ? "no violations over " + std::to_string(T) + " steps" : viol);
  }
  {
    CoefficientTable tb = init_table(1, 2);
    const auto clean = bounds_check(tb, 500.0);
    tb.gamma[0] = 4.0 * std::log(500.0) + 1.0;
    const auto dirty = bounds_check(tb, 500.0);
    add("decomposition", "coefficient box check flags planted violation",
        clean.ok() && !dirty.ok() && dirty.violations[0].which == "gamma",
        "clean table passes, planted gamma flagged");
  }
  {
    // accumulated-noise projections against the stated envelopes, eps = 1
    const int seeds = quick ? 2 : 5;
    int pass = 0;
    for (int s = 0; s < seeds; ++s) {
      ExperimentConfig cfg;
      cfg.d = 400;
      cfg.n = 20;
      cfg.m = 2;
      cfg.q = 3;
      cfg.signal_norm = 6.0;
      cfg.sigma_xi = 6.0 / (0.6 * std::sqrt(400.0));
      cfg.sigma0 = 0.01;
      cfg.eta = 0.01;
      cfg.T = 100;
      cfg.record_every = 20;
      cfg.epsilon = 1.0;
      cfg.C = 0.007;
      cfg.noise_mode = NoiseMode::Shared;
      cfg.n_mc = 10;
      cfg.resolve();
      const RunOutput out = run_one(cfg, 8800 + s);
      const auto prep = privacy_projection_check(out.train.ledger, cfg.spec(), out.dataset,
                                                 cfg.eta, cfg.T, cfg.T, cfg.m, cfg.n, cfg.epsilon,
                                                 4.0 * std::log(static_cast<double>(cfg.T)));
      if (prep.ok()) ++pass;
    }
    add("decomposition", "privacy noise projections within stated envelopes",
        pass >= seeds - (quick ? 0 : 1),
        std::to_string(pass) + "/" + std::to_string(seeds) + " seeds within bounds", false);
  }

  // ---- metrics ----
  {
    SignalSpec spec = verify_detail::small_spec(50, 1.0, 0.4);
    Weights w = Weights::zeros(2, 50, 3);
    RngStream rng(101);
    const EvalReport er = test_error(w, spec, 500, rng);
    const bool ok = er.test_error_01 == 0.0 && er.tie_rate == 1.0;
    add("metrics", "all-zero network is all ties, never errors", ok,
        "error=" + fmt9(er.test_error_01) + " tie=" + fmt9(er.tie_rate));
  }
  {
    SignalSpec spec = verify_detail::small_spec(50, 1.2, 0.5);
    RngStream wrng(103);
    Weights w = init_weights(2, 50, 3, InitSpec{0.3}, wrng);
    RngStream rng(102);
    const EvalReport er = test_error(w, spec, 1000, rng);
    const double acc = 1.0 - er.test_error_01 - er.tie_rate;
    add("metrics", "error/accuracy/tie trichotomy sums to one", acc >= 0 && acc <= 1,
        "error " + fmt9(er.test_error_01) + " + tie " + fmt9(er.tie_rate) + " + acc " + fmt9(acc));
  }

  return rep;
}

inline std::string verify_report_text(const VerifyReport& rep) {
  std::ostringstream out;
  int pass = 0;
  for (const auto& c : rep.checks) {
    out << (c.pass ? "[PASS] " : "[FAIL] ") << c.module << ": " << c.name;
    if (!c.detail.empty()) out << " -- " << c.detail;
    if (!c.hard) out << " (advisory)";
    out << "\n";
    pass += c.pass;
  }
  out << pass << "/" << rep.checks.size() << " checks passed\n";
  return out.str();
}

}  // namespace dpfl
