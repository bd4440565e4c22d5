#pragma once

#include <optional>

#include "ridgerisk/fixed_point.hpp"
#include "ridgerisk/signal.hpp"
#include "ridgerisk/spectrum.hpp"

namespace ridgerisk {

enum class Regime { Ridge, RidgelessOver, RidgelessUnder };

const char* to_string(Regime regime) noexcept;

struct BoundsReport {
  /// max{k : sigma_k >= lambda_star}, ties decided to relative 1e-10.
  Index k_star = 0;
  double c_star = 0.0;
  double v_bound = 0.0;
  double b_bound = 0.0;
  /// 2n >= k_star + r_1(k_star) / b_{k_star}
  bool sample_budget_check = false;
  double r1 = 0.0;
  double r2 = 0.0;
  double b_k = 0.0;
};

struct RiskReport {
  double lambda = 0.0;
  double lambda_star = 0.0;
  double v_n = 0.0;
  double b_n = 0.0;
  double r_n = 0.0;
  Regime regime = Regime::Ridge;
  Diagnostics diagnostics;
  std::optional<BoundsReport> bounds;
};

/// Ridge for lambda > 0; for lambda = 0 the regime follows from the number of
/// positive eigenvalues versus n. d == n with lambda = 0 is rejected.
Regime classify_regime(const Spectrum& spectrum, Index n, double lambda);

/// tau^2 T_2 / (n - T_2) at lambda_star(lambda); tau^2 d / (n - d) in the
/// underparameterized ridgeless regime.
double effective_variance(const Spectrum& spectrum, Index n, double tau, double lambda);

/// lambda_star^2 <beta, (Sigma + lambda_star)^-2 Sigma beta> / (1 - T_2 / n); zero
/// in the underparameterized ridgeless regime.
double effective_bias(const Spectrum& spectrum, const Signal& signal, Index n, double lambda);

BoundsReport proposition_bounds(const Spectrum& spectrum, const Signal& signal, Index n,
                                double tau, double lambda);

/// Full prediction: lambda_star, V_n, B_n, R_n, diagnostics and (when defined)
/// the interpretable upper bounds.
RiskReport risk_report(const Spectrum& spectrum, const Signal& signal, Index n, double tau,
                       double lambda, double eta = kDefaultEta);

enum class ResolventKind { Identity, SignalDyad };

/// R_0(zeta, mu; Q) for Q = I or Q = theta theta^T with theta = Sigma^-1/2 beta.
double population_resolvent(const Spectrum& spectrum, const Signal& signal, double zeta, double mu,
                            ResolventKind which);

/// tau^2 * d/dzeta [zeta R_0(zeta, mu_star(zeta, 0); I)] at zeta = n lambda, by
/// central differences with step rel_step * zeta. Matches V_n(lambda).
double variance_from_free_energy(const Spectrum& spectrum, Index n, double tau, double lambda,
                                 double rel_step = 1e-4);

/// -zeta * d/dmu [zeta R_0(zeta, mu_star(zeta, mu); theta theta^T)] at mu = 0, by
/// a one-sided second-order difference with step rel_step * mu_star(zeta, 0).
/// Matches B_n(lambda).
double bias_from_free_energy(const Spectrum& spectrum, const Signal& signal, Index n,
                             double lambda, double rel_step = 1e-4);

}  // namespace ridgerisk
