#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpfl/rng.hpp"
#include "dpfl/vec.hpp"

namespace dpfl {

// Generative contract of the two-patch distribution: a labelled point is
// x = [y*v, xi] with xi Gaussian in the subspace orthogonal to v.
struct SignalSpec {
  int d = 0;                      // ambient dimension
  double signal_norm = 0.0;       // ||v||_2
  double noise_std = 0.0;         // sigma_xi
  std::vector<double> direction;  // unit vector; empty means first basis vector

  std::vector<double> signal_vector() const {
    std::vector<double> v(static_cast<std::size_t>(d), 0.0);
    if (direction.empty()) {
      v[0] = signal_norm;
    } else {
      for (int i = 0; i < d; ++i) v[i] = signal_norm * direction[i];
    }
    return v;
  }

  void validate() const {
    if (d < 2) throw std::invalid_argument("SignalSpec: d must be >= 2");
    if (!(signal_norm > 0)) throw std::invalid_argument("SignalSpec: signal_norm must be positive");
    if (noise_std < 0) throw std::invalid_argument("SignalSpec: noise_std must be nonnegative");
    if (!direction.empty()) {
      if (static_cast<int>(direction.size()) != d)
        throw std::invalid_argument("SignalSpec: direction dimension mismatch");
      const double n = norm2(direction);
      if (std::abs(n - 1.0) > 1e-12)
        throw std::invalid_argument("SignalSpec: direction must be unit norm (|1-||dir|||>1e-12)");
    }
  }
};

struct DataPoint {
  int label = 1;                // y in {+1,-1}
  std::vector<double> patch1;   // y * v
  std::vector<double> patch2;   // xi, orthogonal to v
};

struct DatasetStats {
  int count_pos = 0;
  int count_neg = 0;
  double min_xi_norm = 0.0;
  double max_xi_norm = 0.0;
  double max_cross = 0.0;  // max_{i != i'} |<xi_i, xi_i'>|
};

struct Dataset {
  std::vector<DataPoint> points;
  std::uint64_t seed = 0;
  DatasetStats stats;  // cached at creation; recompute when a guarantee is needed

  std::size_t size() const { return points.size(); }
};

// One draw from N(0, sigma_xi^2 * (I - v v^T / ||v||^2)), realized by
// projecting an isotropic draw: exact and O(d).
inline std::vector<double> sample_noise(const SignalSpec& spec, RngStream& rng) {
  const auto v = spec.signal_vector();
  std::vector<double> g(static_cast<std::size_t>(spec.d));
  for (auto& x : g) x = rng.gaussian(0.0, spec.noise_std);
  const double c = dot(g, v) / (spec.signal_norm * spec.signal_norm);
  axpy(-c, v, g);
  return g;
}

inline DatasetStats compute_stats(const Dataset& ds) {
  DatasetStats st;
  st.min_xi_norm = std::numeric_limits<double>::infinity();
  for (const auto& p : ds.points) {
    (p.label > 0 ? st.count_pos : st.count_neg)++;
    const double nn = norm2(p.patch2);
    st.min_xi_norm = std::min(st.min_xi_norm, nn);
    st.max_xi_norm = std::max(st.max_xi_norm, nn);
  }
  for (std::size_t i = 0; i < ds.points.size(); ++i)
    for (std::size_t j = i + 1; j < ds.points.size(); ++j)
      st.max_cross = std::max(st.max_cross,
                              std::abs(dot(ds.points[i].patch2, ds.points[j].patch2)));
  if (ds.points.empty()) st.min_xi_norm = 0.0;
  return st;
}

inline Dataset sample_dataset(const SignalSpec& spec, int n, RngStream& rng) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
  Dataset ds;
  ds.seed = rng.seed();
  const auto v = spec.signal_vector();
  ds.points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    DataPoint p;
    p.label = rng.rademacher();
    p.patch1.resize(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) p.patch1[k] = p.label * v[k];
    p.patch2 = sample_noise(spec, rng);
    ds.points.push_back(std::move(p));
  }
  ds.stats = compute_stats(ds);
  return ds;
}

// ||v|| / (sigma_xi sqrt(d)); nullopt signals the degenerate sigma_xi = 0 case
// (infinite SNR) rather than returning a non-number.
inline std::optional<double> snr(const SignalSpec& spec) {
  if (spec.noise_std == 0.0) return std::nullopt;
  return spec.signal_norm / (spec.noise_std * std::sqrt(static_cast<double>(spec.d)));
}

inline double solve_signal_norm(double target_snr, double sigma_xi, int d) {
  if (!(target_snr > 0) || !(sigma_xi > 0) || d < 1)
    throw std::invalid_argument("solve_signal_norm: arguments must be positive");
  return target_snr * sigma_xi * std::sqrt(static_cast<double>(d));
}

struct ConcentrationViolation {
  std::string kind;  // "norm" or "cross"
  int i = 0;
  int j = -1;        // second index for cross-term violations
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct ConcentrationReport {
  bool norms_ok = true;
  bool cross_ok = true;
  double norm_lo = 0.0, norm_hi = 0.0;  // window for ||xi||^2
  double cross_bound = 0.0;
  std::vector<ConcentrationViolation> violations;
  bool ok() const { return norms_ok && cross_ok; }
};

// Checks every ||xi_i||^2 against [sigma^2 d/2, 3 sigma^2 d/2] and every
// cross inner product against 2 sigma^2 sqrt(d log(4 n^2 / delta_report)).
// Violations are listed, never thrown.
inline ConcentrationReport concentration_report(const Dataset& ds, const SignalSpec& spec,
                                                double delta_report) {
  if (ds.points.empty()) throw std::invalid_argument("concentration_report: empty dataset");
  ConcentrationReport rep;
  const double s2d = spec.noise_std * spec.noise_std * spec.d;
  rep.norm_lo = 0.5 * s2d;
  rep.norm_hi = 1.5 * s2d;
  const double n = static_cast<double>(ds.points.size());
  rep.cross_bound = 2.0 * spec.noise_std * spec.noise_std *
                    std::sqrt(spec.d * std::log(4.0 * n * n / delta_report));
  for (std::size_t i = 0; i < ds.points.size(); ++i) {
    const double nn = norm2_sq(ds.points[i].patch2);
    if (nn < rep.norm_lo || nn > rep.norm_hi) {
      rep.norms_ok = false;
      rep.violations.push_back({"norm", static_cast<int>(i), -1, nn, rep.norm_lo, rep.norm_hi});
    }
  }
  for (std::size_t i = 0; i < ds.points.size(); ++i)
    for (std::size_t j = i + 1; j < ds.points.size(); ++j) {
      const double c = std::abs(dot(ds.points[i].patch2, ds.points[j].patch2));
      if (c > rep.cross_bound) {
        rep.cross_ok = false;
        rep.violations.push_back(
            {"cross", static_cast<int>(i), static_cast<int>(j), c, 0.0, rep.cross_bound});
      }
    }
  return rep;
}

}  // namespace dpfl
