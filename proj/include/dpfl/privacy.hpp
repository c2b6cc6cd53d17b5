#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpfl/data.hpp"
#include "dpfl/vec.hpp"

namespace dpfl {

enum class NoiseMode { None, Shared, PerFilter };

inline std::string to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::None: return "none";
    case NoiseMode::Shared: return "shared";
    case NoiseMode::PerFilter: return "per-filter";
  }
  return "?";
}

inline NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "none") return NoiseMode::None;
  if (s == "shared") return NoiseMode::Shared;
  if (s == "per-filter" || s == "per_filter") return NoiseMode::PerFilter;
  throw std::invalid_argument("unknown noise mode: " + s);
}

struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 1e-5;
  NoiseMode mode = NoiseMode::Shared;

  void validate() const {
    if (mode == NoiseMode::None) return;
    if (!(epsilon > 0)) throw std::invalid_argument("PrivacyParams: epsilon must be > 0");
    if (!(delta > 0) || !(delta < 1))
      throw std::invalid_argument("PrivacyParams: delta must be in (0,1)");
  }
};

struct NoiseCalibration {
  double sensitivity = 0.0;  // Delta_2
  int iterations = 1;        // T
  double C = 1.0;            // sensitivity constant used to form Delta_2
  double sigma_z = 0.0;
  NoiseMode mode = NoiseMode::Shared;
};

// Per-step gradient sensitivity bound C (||v|| + max_i ||xi_i||) / (n m).
inline double sensitivity_bound(const SignalSpec& spec, const Dataset& ds, int m, double C) {
  if (ds.points.empty()) throw std::invalid_argument("sensitivity_bound: empty dataset");
  double max_xi = 0.0;
  for (const auto& p : ds.points) max_xi = std::max(max_xi, norm2(p.patch2));
  return C * (spec.signal_norm + max_xi) / (static_cast<double>(ds.size()) * m);
}

// Gaussian-mechanism scale composed over T releases with sqrt(T) scaling:
//   sigma_z = Delta_2 sqrt(2 T ln(1.25/delta)) / epsilon.
inline NoiseCalibration calibrate_sigma(double delta2, const PrivacyParams& priv, int T) {
  if (delta2 < 0) throw std::invalid_argument("calibrate_sigma: sensitivity must be >= 0");
  if (T < 1) throw std::invalid_argument("calibrate_sigma: T must be >= 1");
  priv.validate();
  NoiseCalibration cal;
  cal.sensitivity = delta2;
  cal.iterations = T;
  cal.mode = priv.mode;
  if (priv.mode == NoiseMode::None) {
    cal.sigma_z = 0.0;
  } else {
    cal.sigma_z = delta2 * std::sqrt(2.0 * T * std::log(1.25 / priv.delta)) / priv.epsilon;
  }
  return cal;
}

// Alternative calibration policy: the analysis-side schedule
// sigma_z = sigma0 / (eta mu sqrt(T)) with mu = max{1, ||v||, ||xi||}.
// Exposed alongside the (eps, delta) mechanism calibration; the two do not
// coincide in general.
inline double theory_sigma_schedule(double sigma0, double eta, double mu, int T) {
  if (!(sigma0 >= 0) || !(eta > 0) || !(mu > 0) || T < 1)
    throw std::invalid_argument("theory_sigma_schedule: arguments out of domain");
  return sigma0 / (eta * mu * std::sqrt(static_cast<double>(T)));
}

// Running sums Z(t) = sum_{s<=t} z_s of the privacy noise actually applied.
// Shared mode keeps one channel; per-filter mode keeps 2m. The reconstruction
// of the coefficient decomposition subtracts eta * Z(t) per filter.
class NoiseLedger {
 public:
  NoiseLedger() = default;
  NoiseLedger(NoiseMode mode, int m, int d, bool keep_history = false)
      : mode_(mode), m_(m), d_(d), keep_history_(keep_history) {
    const int channels = (mode == NoiseMode::PerFilter) ? 2 * m : 1;
    sums_.assign(static_cast<std::size_t>(channels) * d, 0.0);
  }

  NoiseMode mode() const { return mode_; }
  int steps() const { return steps_; }
  int d() const { return d_; }

  // Accumulated noise seen by filter k.
  std::span<const double> channel(int k) const {
    const int c = (mode_ == NoiseMode::PerFilter) ? k : 0;
    return {sums_.data() + static_cast<std::size_t>(c) * d_, static_cast<std::size_t>(d_)};
  }

  void record_shared(std::span<const double> z) {
    if (mode_ == NoiseMode::PerFilter)
      throw std::logic_error("NoiseLedger: shared record on per-filter ledger");
    axpy(1.0, z, {sums_.data(), static_cast<std::size_t>(d_)});
    if (keep_history_) history_.insert(history_.end(), z.begin(), z.end());
  }

  void record_filter(int k, std::span<const double> z) {
    if (mode_ != NoiseMode::PerFilter)
      throw std::logic_error("NoiseLedger: per-filter record on shared ledger");
    axpy(1.0, z, {sums_.data() + static_cast<std::size_t>(k) * d_, static_cast<std::size_t>(d_)});
    if (keep_history_) history_.insert(history_.end(), z.begin(), z.end());
  }

  void end_step() { ++steps_; }

  // Per-step history (verify mode only): step s, channel c.
  bool has_history() const { return keep_history_; }
  std::span<const double> history_step(int s, int c = 0) const {
    const int channels = (mode_ == NoiseMode::PerFilter) ? 2 * m_ : 1;
    return {history_.data() + (static_cast<std::size_t>(s) * channels + c) * d_,
            static_cast<std::size_t>(d_)};
  }

 private:
  NoiseMode mode_ = NoiseMode::None;
  int m_ = 0;
  int d_ = 0;
  int steps_ = 0;
  bool keep_history_ = false;
  std::vector<double> sums_;
  std::vector<double> history_;
};

}  // namespace dpfl
