#pragma once

#include "ridgerisk/signal.hpp"
#include "ridgerisk/spectrum.hpp"

namespace ridgerisk {

// Gaussian sequence model y_i = sqrt(sigma_i) beta_i + (omega / sqrt n) g_i,
// fitted by ridge at lambda_star. Its Sigma-weighted excess risk splits per
// coordinate into a shrinkage term and a noise term.
struct SequenceRisk {
  double omega_sq = 0.0;
  double risk = 0.0;
  // Returned by solve_omega as the split by noise source: var_part collects
  // everything proportional to tau^2 and bias_part everything proportional
  // to the signal, so they equal V_n and B_n. From
  // sequence_risk_given_omega they are the direct per-coordinate terms.
  double bias_part = 0.0;
  double var_part = 0.0;
  // Per-coordinate terms at this omega: lambda_star^2 Q_2 and omega^2 T_2 / n.
  double direct_bias = 0.0;
  double direct_noise = 0.0;
  // tau = 0 and beta = 0: omega = 0 and everything vanishes.
  bool degenerate = false;
};

SequenceRisk sequence_risk_given_omega(const Spectrum& spectrum, const Signal& signal, Index n,
                                       double lambda_star, double omega);

// omega^2 = tau^2 + E|beta_hat - beta|_Sigma^2 is affine in omega^2, so the
// fixed point is closed form; it is checked by one substitution.
SequenceRisk solve_omega(const Spectrum& spectrum, const Signal& signal, Index n, double tau,
                         double lambda_star);

}  // namespace ridgerisk
