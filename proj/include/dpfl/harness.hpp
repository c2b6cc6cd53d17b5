#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dpfl/config.hpp"
#include "dpfl/io.hpp"
#include "dpfl/metrics.hpp"
#include "dpfl/theory.hpp"
#include "dpfl/trainer.hpp"

namespace dpfl {

struct RunOutput {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  Dataset dataset;
  TrainResult train;
  EvalReport eval;
  GeneralizationVerdict verdict;
  RegimeVerdict regime_verdict;
  double delta2 = 0.0;
  double max_xi_norm = 0.0;
  double t1_sig = std::numeric_limits<double>::quiet_NaN();
  T1Noise t1_noi{};
  double tp = std::numeric_limits<double>::quiet_NaN();
};

// One seeded training run end to end: data, calibration, training with the
// coefficient recursion, Monte Carlo evaluation, verdicts.
inline RunOutput run_one(const ExperimentConfig& cfg, std::uint64_t seed,
                         bool keep_noise_history = false) {
  RunOutput out;
  out.config = cfg;
  out.seed = seed;
  const SignalSpec spec = cfg.spec();
  RngStream root(seed);
  RngStream data_rng = root.derive("data");
  out.dataset = sample_dataset(spec, cfg.n, data_rng);
  for (const auto& p : out.dataset.points)
    out.max_xi_norm = std::max(out.max_xi_norm, norm2(p.patch2));

  out.delta2 = sensitivity_bound(spec, out.dataset, cfg.m, cfg.sensitivity_constant());
  const PrivacyParams priv = cfg.privacy();
  const NoiseCalibration calib = calibrate_sigma(out.delta2, priv, std::max(cfg.T, 1));

  TrainerConfig tc;
  tc.eta = cfg.eta;
  tc.T = cfg.T;
  tc.seed = seed;
  tc.record_every = cfg.record_every;
  out.train = train(spec, out.dataset, cfg.m, cfg.q, InitSpec{cfg.sigma0}, priv, calib, tc,
                    keep_noise_history);

  RngStream mc_rng = root.derive("mc-test");
  out.eval = test_error(out.train.final_weights, spec, cfg.n_mc, mc_rng);
  if (!out.train.series.empty()) out.train.series.back().test_error = out.eval.test_error_01;

  const CoefficientSummary cs = summary(out.train.table);
  const double final_loss = out.train.series.back().train_loss;
  out.verdict = generalization_verdict(final_loss, out.eval, cs.max_gamma, cs.max_abs_phi,
                                       cfg.kappa);
  out.regime_verdict = regime(*cfg.snr, cfg.n, cfg.epsilon, cfg.q, cfg.regime_c);
  try {
    out.t1_sig = t1_signal(cfg.sigma0, *cfg.signal_norm, cfg.eta, cfg.q, cfg.m, cfg.C1);
  } catch (const std::exception&) {
  }
  try {
    out.t1_noi = t1_noise(cfg.sigma0, cfg.sigma_xi, cfg.d, cfg.eta, cfg.q, cfg.m, cfg.n);
  } catch (const std::exception&) {
  }
  const double analysis_c = 4.0 * std::log(static_cast<double>(std::max(cfg.T, 2)));
  out.tp = tp_star(cfg.eta, cfg.m, cfg.n, cfg.epsilon, std::max(cfg.sigma0, 1e-300),
                   *cfg.signal_norm, std::max(out.max_xi_norm, 1e-300),
                   static_cast<double>(std::max(cfg.T, 1)), analysis_c);
  return out;
}

inline nlohmann::json run_manifest(const RunOutput& out) {
  return manifest_json(out.config, out.seed, out.delta2, out.train.calibration.sigma_z,
                       out.regime_verdict, out.t1_sig, out.t1_noi, out.tp, out.max_xi_norm);
}

// Writes <out>/run_<seed>.csv and <out>/manifest_<seed>.json.
inline RunOutput run_and_write(const ExperimentConfig& cfg, std::uint64_t seed) {
  RunOutput out = run_one(cfg, seed);
  const std::string base = cfg.out_dir + "/";
  write_file(base + "run_" + std::to_string(seed) + ".csv", run_csv_text(out.train.series));
  write_file(base + "manifest_" + std::to_string(seed) + ".json", run_manifest(out).dump(2) + "\n");
  return out;
}

struct SweepCell {
  double snr = 0.0;
  double epsilon = 0.0;
  int seed_index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double train_loss = 0.0;
  double max_gamma = 0.0;
  double max_abs_phi = 0.0;
  double test_error = 0.0;
  std::string theory_verdict;
  std::string empirical_dominant;
  std::string agree;  // "yes"/"no", empty when the theory verdict names no side
};

inline std::string sweep_summary_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream s;
  s << "snr,epsilon,seed,train_loss,max_gamma,max_abs_phi,test_error,theory_verdict,"
       "empirical_dominant,agree,status\n";
  for (const auto& c : cells) {
    s << fmt9(c.snr) << ',' << fmt9(c.epsilon) << ',' << c.seed << ',';
    if (c.ok)
      s << fmt9(c.train_loss) << ',' << fmt9(c.max_gamma) << ',' << fmt9(c.max_abs_phi) << ','
        << fmt9(c.test_error);
    else
      s << ",,,";
    s << ',' << c.theory_verdict << ',' << c.empirical_dominant << ',' << c.agree << ','
      << (c.ok ? "ok" : "error: " + c.error) << "\n";
  }
  return s.str();
}

// Grid of (snr, epsilon, seed) cells over a bounded worker pool. Cell seeds
// are derived by hashing the grid coordinates, so results do not depend on
// worker count or on other cells being present.
inline std::vector<SweepCell> sweep(const ExperimentConfig& base, const GridSpec& grid,
                                    int jobs = 0) {
  grid.validate();
  std::vector<SweepCell> cells;
  for (double snr_v : grid.snr)
    for (double eps : grid.epsilon)
      for (int s = 0; s < grid.n_seeds; ++s) {
        SweepCell c;
        c.snr = snr_v;
        c.epsilon = eps;
        c.seed_index = s;
        c.seed = RngStream::for_cell(grid.master_seed, snr_v, eps, s).seed();
        cells.push_back(c);
      }

  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= cells.size()) return;
      SweepCell& c = cells[idx];
      try {
        ExperimentConfig cfg = base.with_snr(c.snr);
        cfg.epsilon = c.epsilon;
        const RunOutput out = run_one(cfg, c.seed);
        c.ok = true;
        c.train_loss = out.train.series.back().train_loss;
        const CoefficientSummary cs = summary(out.train.table);
        c.max_gamma = cs.max_gamma;
        c.max_abs_phi = cs.max_abs_phi;
        c.test_error = out.eval.test_error_01;
        c.theory_verdict = to_string(out.regime_verdict.verdict);
        c.empirical_dominant = (cs.max_gamma > cs.max_abs_phi) ? "signal" : "noise";
        if (out.regime_verdict.verdict == Regime::Signal)
          c.agree = (c.empirical_dominant == "signal") ? "yes" : "no";
        else if (out.regime_verdict.verdict == Regime::Noise)
          c.agree = (c.empirical_dominant == "noise") ? "yes" : "no";
      } catch (const std::exception& e) {
        c.ok = false;
        c.error = e.what();
        try {
          c.theory_verdict =
              to_string(regime(c.snr, base.n, c.epsilon, base.q, base.regime_c).verdict);
        } catch (const std::exception&) {
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return cells;
}

// Theory-only phase map over the grid; no training.
inline std::string phase_csv(const GridSpec& grid, int n, int q, double c) {
  grid.validate();
  std::ostringstream s;
  s << "snr,epsilon,n,q,c,signal_score,noise_score,verdict\n";
  for (double snr_v : grid.snr)
    for (double eps : grid.epsilon) {
      const RegimeVerdict rv = regime(snr_v, n, eps, q, c);
      s << fmt9(snr_v) << ',' << fmt9(eps) << ',' << n << ',' << q << ',' << fmt9(c) << ','
        << fmt9(rv.signal_score) << ',' << fmt9(rv.noise_score) << ',' << to_string(rv.verdict)
        << "\n";
    }
  return s.str();
}

}  // namespace dpfl
