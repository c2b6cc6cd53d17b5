#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "dpfl/cnn.hpp"
#include "dpfl/data.hpp"
#include "dpfl/rng.hpp"

namespace dpfl {

struct EvalReport {
  double test_error_01 = 0.0;       // P(y f < 0), strict
  double test_logistic_loss = 0.0;  // E l(y f)
  double tie_rate = 0.0;            // P(y f == 0), reported separately, never folded in
  int n_mc = 0;
  double std_error = 0.0;           // binomial std error of test_error_01
};

// Monte Carlo population metrics on fresh draws. Misclassification keeps the
// strict inequality y f < 0; exact ties are counted in tie_rate (the all-zero
// network is all ties, not all errors).
inline EvalReport test_error(const Weights& w, const SignalSpec& spec, int n_mc, RngStream& rng) {
  if (n_mc < 1) throw std::invalid_argument("test_error: n_mc must be >= 1");
  spec.validate();
  const auto v = spec.signal_vector();
  EvalReport rep;
  rep.n_mc = n_mc;
  int errors = 0, ties = 0;
  double loss_sum = 0.0;
  DataPoint p;
  p.patch1.resize(v.size());
  for (int s = 0; s < n_mc; ++s) {
    p.label = rng.rademacher();
    for (std::size_t c = 0; c < v.size(); ++c) p.patch1[c] = p.label * v[c];
    p.patch2 = sample_noise(spec, rng);
    const double yf = p.label * forward(w, p);
    if (yf < 0)
      ++errors;
    else if (yf == 0)
      ++ties;
    loss_sum += logistic_loss(yf);
  }
  rep.test_error_01 = static_cast<double>(errors) / n_mc;
  rep.tie_rate = static_cast<double>(ties) / n_mc;
  rep.test_logistic_loss = loss_sum / n_mc;
  rep.std_error = std::sqrt(rep.test_error_01 * (1.0 - rep.test_error_01) / n_mc);
  return rep;
}

inline double test_logistic_loss(const Weights& w, const SignalSpec& spec, int n_mc,
                                 RngStream& rng) {
  return test_error(w, spec, n_mc, rng).test_logistic_loss;
}

enum class RunClass { Benign, HarmfulMemorization, Unconverged };

inline std::string to_string(RunClass c) {
  switch (c) {
    case RunClass::Benign: return "benign";
    case RunClass::HarmfulMemorization: return "harmful-memorization";
    case RunClass::Unconverged: return "unconverged";
  }
  return "?";
}

struct GeneralizationVerdict {
  RunClass cls = RunClass::Unconverged;
  double final_train_loss = 0.0;
  double test_logistic_loss = 0.0;
  double test_error_01 = 0.0;
  double kappa = 0.1;
  std::string dominant;  // "signal" if max Gamma >= max |Phi| at the end
};

// Converged + small fresh-sample loss -> benign; converged while fresh-sample
// loss stays >= 0.1 -> harmful memorization; anything else unconverged.
inline GeneralizationVerdict generalization_verdict(double final_train_loss,
                                                    const EvalReport& eval, double max_gamma,
                                                    double max_abs_phi, double kappa = 0.1) {
  GeneralizationVerdict v;
  v.final_train_loss = final_train_loss;
  v.test_logistic_loss = eval.test_logistic_loss;
  v.test_error_01 = eval.test_error_01;
  v.kappa = kappa;
  v.dominant = (max_gamma >= max_abs_phi) ? "signal" : "noise";
  if (final_train_loss > kappa)
    v.cls = RunClass::Unconverged;
  else if (eval.test_logistic_loss >= 0.1)
    v.cls = RunClass::HarmfulMemorization;
  else
    v.cls = RunClass::Benign;
  return v;
}

}  // namespace dpfl
