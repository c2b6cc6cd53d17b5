#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpfl/cnn.hpp"
#include "dpfl/data.hpp"
#include "dpfl/decomposition.hpp"
#include "dpfl/privacy.hpp"
#include "dpfl/rng.hpp"

namespace dpfl {

struct TrainerConfig {
  double eta = 0.01;
  int T = 500;
  std::uint64_t seed = 0;
  int record_every = 10;

  void validate() const {
    if (!(eta > 0)) throw std::invalid_argument("TrainerConfig: eta must be positive");
    if (T < 0) throw std::invalid_argument("TrainerConfig: T must be >= 0");
    if (record_every < 1 || (T > 0 && record_every > T))
      throw std::invalid_argument("TrainerConfig: need 1 <= record_every <= T");
  }
};

struct TimePoint {
  int t = 0;
  double train_loss = 0.0;
  double max_gamma = 0.0;
  double max_abs_phi = 0.0;
  double max_phi_bar = 0.0;
  double min_phi_under = 0.0;
  double recon_residual = 0.0;
  std::optional<double> test_error;  // filled by the harness on the final row
};

// Everything a single training run produces. The harness wraps this in a
// RunRecord with the manifest, evaluation and verdicts.
struct TrainResult {
  std::vector<TimePoint> series;
  Weights initial;
  Weights final_weights;
  CoefficientTable table;
  NoiseLedger ledger;
  NoiseCalibration calibration;
};

// One update w <- w - eta (grad + z). Shared mode draws a single z per step
// and applies it to every filter; per-filter mode draws independently. No
// gradient clipping anywhere.
inline void step(Weights& w, const SignalSpec& spec, const Dataset& ds, double eta,
                 const NoiseCalibration& calib, RngStream& noise_rng, NoiseLedger& ledger,
                 const BatchCache& cache) {
  const Gradient g = grad_from_cache(w, spec, ds, cache);
  for (int k = 0; k < w.bank_count(); ++k) axpy(-eta, g.filter(k), w.filter(k));
  if (calib.mode == NoiseMode::Shared && calib.sigma_z > 0) {
    std::vector<double> z(static_cast<std::size_t>(w.d));
    for (auto& x : z) x = noise_rng.gaussian(0.0, calib.sigma_z);
    for (int k = 0; k < w.bank_count(); ++k) axpy(-eta, z, w.filter(k));
    ledger.record_shared(z);
  } else if (calib.mode == NoiseMode::PerFilter && calib.sigma_z > 0) {
    std::vector<double> z(static_cast<std::size_t>(w.d));
    for (int k = 0; k < w.bank_count(); ++k) {
      for (auto& x : z) x = noise_rng.gaussian(0.0, calib.sigma_z);
      axpy(-eta, z, w.filter(k));
      ledger.record_filter(k, z);
    }
  }
  ledger.end_step();
}

inline void step(Weights& w, const SignalSpec& spec, const Dataset& ds, double eta,
                 const NoiseCalibration& calib, RngStream& noise_rng, NoiseLedger& ledger) {
  step(w, spec, ds, eta, calib, noise_rng, ledger, forward_batch(w, spec, ds));
}

// Full training loop; after every step the coefficient recursion is advanced
// with the same pre-activations the step used. Aborts on non-finite loss or
// weights naming the offending iteration.
inline TrainResult train(const SignalSpec& spec, const Dataset& ds, int m, int q,
                         const InitSpec& init, const PrivacyParams& priv,
                         const NoiseCalibration& calib, const TrainerConfig& cfg,
                         bool keep_noise_history = false) {
  spec.validate();
  priv.validate();
  cfg.validate();
  if (calib.mode != priv.mode) throw std::invalid_argument("train: calibration/privacy mode mismatch");
  const int n = static_cast<int>(ds.size());

  RngStream root(cfg.seed);
  RngStream init_rng = root.derive("init");
  RngStream noise_rng = root.derive("dp-noise");

  TrainResult res;
  res.calibration = calib;
  res.initial = init_weights(m, spec.d, q, init, init_rng);
  res.final_weights = res.initial;
  res.table = init_table(m, n);
  res.ledger = NoiseLedger(priv.mode, m, spec.d, keep_noise_history);

  auto record = [&](int t, const BatchCache& cache) {
    TimePoint tp;
    tp.t = t;
    tp.train_loss = train_loss_from_cache(cache);
    const CoefficientSummary s = summary(res.table);
    tp.max_gamma = s.max_gamma;
    tp.max_abs_phi = s.max_abs_phi;
    tp.max_phi_bar = s.max_phi_bar;
    tp.min_phi_under = s.min_phi_under;
    tp.recon_residual = reconstruction_residual(res.initial, res.final_weights, res.table, ds, spec,
                                                res.ledger, cfg.eta);
    res.series.push_back(tp);
  };

  BatchCache cache = forward_batch(res.final_weights, spec, ds);
  record(0, cache);
  for (int t = 1; t <= cfg.T; ++t) {
    step(res.final_weights, spec, ds, cfg.eta, calib, noise_rng, res.ledger, cache);
    update_table(res.table, cache, spec, ds, cfg.eta);
    cache = forward_batch(res.final_weights, spec, ds);
    const double loss = train_loss_from_cache(cache);
    if (!std::isfinite(loss) || !all_finite(res.final_weights.filters))
      throw std::runtime_error("train: non-finite loss or weights at iteration " +
                               std::to_string(t));
    if (t % cfg.record_every == 0 || t == cfg.T) record(t, cache);
  }
  return res;
}

}  // namespace dpfl
