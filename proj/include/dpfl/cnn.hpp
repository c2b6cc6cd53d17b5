#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dpfl/data.hpp"
#include "dpfl/rng.hpp"
#include "dpfl/vec.hpp"

namespace dpfl {

// Two-layer CNN with fixed +-1/m second layer. Filters are stored as one
// contiguous (2m x d) block: rows 0..m-1 belong to the +1 bank, rows m..2m-1
// to the -1 bank.
struct Weights {
  int m = 0;
  int d = 0;
  int q = 3;
  std::vector<double> filters;  // 2m * d, row-major

  static Weights zeros(int m, int d, int q) {
    if (m < 1 || d < 2 || q < 3) throw std::invalid_argument("Weights: need m>=1, d>=2, q>=3");
    Weights w;
    w.m = m;
    w.d = d;
    w.q = q;
    w.filters.assign(static_cast<std::size_t>(2 * m) * d, 0.0);
    return w;
  }

  int bank_count() const { return 2 * m; }

  // k in [0, 2m): bank sign +1 for k < m, else -1.
  int bank_sign(int k) const { return k < m ? 1 : -1; }

  std::span<double> filter(int k) {
    return {filters.data() + static_cast<std::size_t>(k) * d, static_cast<std::size_t>(d)};
  }
  std::span<const double> filter(int k) const {
    return {filters.data() + static_cast<std::size_t>(k) * d, static_cast<std::size_t>(d)};
  }
};

struct InitSpec {
  double sigma0 = 0.0;  // sigma0 = 0 is the all-zero fixed point
};

inline Weights init_weights(int m, int d, int q, const InitSpec& init, RngStream& rng) {
  if (init.sigma0 < 0) throw std::invalid_argument("init_weights: sigma0 must be >= 0");
  Weights w = Weights::zeros(m, d, q);
  for (auto& x : w.filters) x = rng.gaussian(0.0, init.sigma0);
  return w;
}

// Polynomial ReLU max{0,z}^q and its derivative, integer q >= 3 only.
inline double act(double z, int q) {
  if (q < 3) throw std::invalid_argument("act: q must be >= 3");
  if (z <= 0) return 0.0;
  double p = z;
  for (int i = 1; i < q; ++i) p *= z;
  return p;
}

inline double act_prime(double z, int q) {
  if (q < 3) throw std::invalid_argument("act_prime: q must be >= 3");
  if (z <= 0) return 0.0;
  double p = z;
  for (int i = 2; i < q; ++i) p *= z;
  return q * p;
}

// log(1 + exp(-z)), stable over |z| up to ~1e4 and beyond.
inline double logistic_loss(double z) {
  if (z >= 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

// d/dz log(1+exp(-z)) = -1/(1+exp(z)), always in (-1, 0).
inline double loss_prime(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(z));
}

// Pre-activations of one iterate against a dataset, shared by the loss, the
// gradient and the coefficient recursion. The recursion must see exactly the
// sigma' arguments the optimizer step used, so this cache is the one place
// they are computed.
struct BatchCache {
  int m = 0;
  int n = 0;
  int q = 3;
  std::vector<double> sig;      // 2m: <w_k, v>
  std::vector<double> noi;      // 2m x n: <w_k, xi_i>
  std::vector<double> margin;   // n: y_i * f(W, x_i)
  std::vector<double> lprime;   // n: loss'(margin_i)

  double s_noise(int k, int i) const { return noi[static_cast<std::size_t>(k) * n + i]; }
};

inline BatchCache forward_batch(const Weights& w, const SignalSpec& spec, const Dataset& ds) {
  if (spec.d != w.d) throw std::invalid_argument("forward_batch: dimension mismatch");
  const int n = static_cast<int>(ds.size());
  const auto v = spec.signal_vector();
  BatchCache c;
  c.m = w.m;
  c.n = n;
  c.q = w.q;
  c.sig.resize(w.bank_count());
  c.noi.resize(static_cast<std::size_t>(w.bank_count()) * n);
  c.margin.resize(n);
  c.lprime.resize(n);
  for (int k = 0; k < w.bank_count(); ++k) {
    c.sig[k] = dot(w.filter(k), v);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(ds.points[i].patch2.size()) != w.d)
        throw std::invalid_argument("forward_batch: data dimension mismatch");
      c.noi[static_cast<std::size_t>(k) * n + i] = dot(w.filter(k), ds.points[i].patch2);
    }
  }
  const double inv_m = 1.0 / w.m;
  for (int i = 0; i < n; ++i) {
    const int y = ds.points[i].label;
    double fp = 0.0, fm = 0.0;
    for (int r = 0; r < w.m; ++r) {
      fp += act(y * c.sig[r], w.q) + act(c.s_noise(r, i), w.q);
      fm += act(y * c.sig[w.m + r], w.q) + act(c.s_noise(w.m + r, i), w.q);
    }
    const double f = inv_m * (fp - fm);
    c.margin[i] = y * f;
    c.lprime[i] = loss_prime(c.margin[i]);
  }
  return c;
}

// f(W, x) for a single point.
inline double forward(const Weights& w, const DataPoint& x) {
  if (static_cast<int>(x.patch1.size()) != w.d || static_cast<int>(x.patch2.size()) != w.d)
    throw std::invalid_argument("forward: dimension mismatch");
  double fp = 0.0, fm = 0.0;
  for (int r = 0; r < w.m; ++r) {
    fp += act(dot(w.filter(r), x.patch1), w.q) + act(dot(w.filter(r), x.patch2), w.q);
    fm += act(dot(w.filter(w.m + r), x.patch1), w.q) + act(dot(w.filter(w.m + r), x.patch2), w.q);
  }
  return (fp - fm) / w.m;
}

struct Gradient {
  int m = 0;
  int d = 0;
  std::vector<double> g;        // 2m x d, same layout as Weights
  std::vector<double> lprime;   // per-sample loss'

  std::span<double> filter(int k) {
    return {g.data() + static_cast<std::size_t>(k) * d, static_cast<std::size_t>(d)};
  }
  std::span<const double> filter(int k) const {
    return {g.data() + static_cast<std::size_t>(k) * d, static_cast<std::size_t>(d)};
  }
};

// Full-batch gradient of the empirical logistic risk, assembled from a cache:
//   grad_{w_k} = (1/nm) sum_i l'_i [ s'(<w_k,xi_i>) j y_i xi_i + s'(y_i <w_k,v>) j v ]
inline Gradient grad_from_cache(const Weights& w, const SignalSpec& spec, const Dataset& ds,
                                const BatchCache& c) {
  const int n = static_cast<int>(ds.size());
  const auto v = spec.signal_vector();
  Gradient out;
  out.m = w.m;
  out.d = w.d;
  out.g.assign(w.filters.size(), 0.0);
  out.lprime = c.lprime;
  const double scale = 1.0 / (static_cast<double>(n) * w.m);
  for (int k = 0; k < w.bank_count(); ++k) {
    const int j = w.bank_sign(k);
    auto gk = out.filter(k);
    double cv = 0.0;
    for (int i = 0; i < n; ++i) {
      const int y = ds.points[i].label;
      const double sp_noise = act_prime(c.s_noise(k, i), w.q);
      if (sp_noise != 0.0)
        axpy(scale * c.lprime[i] * sp_noise * j * y, ds.points[i].patch2, gk);
      cv += c.lprime[i] * act_prime(y * c.sig[k], w.q);
    }
    axpy(scale * cv * j, v, gk);
  }
  return out;
}

inline Gradient grad(const Weights& w, const SignalSpec& spec, const Dataset& ds) {
  return grad_from_cache(w, spec, ds, forward_batch(w, spec, ds));
}

inline double train_loss_from_cache(const BatchCache& c) {
  double s = 0.0;
  for (double m : c.margin) s += logistic_loss(m);
  return s / c.margin.size();
}

inline double train_loss(const Weights& w, const SignalSpec& spec, const Dataset& ds) {
  return train_loss_from_cache(forward_batch(w, spec, ds));
}

}  // namespace dpfl
