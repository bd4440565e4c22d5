#pragma once

#include <optional>
#include <string>

#include "ridgerisk/signal.hpp"
#include "ridgerisk/spectrum.hpp"

namespace ridgerisk {

enum class AsymptoticCase { RegVarAlphaGt1, RegVarAlphaEq1, GeometricStep };

const char* to_string(AsymptoticCase c) noexcept;

struct AsymptoticPrediction {
  AsymptoticCase kind = AsymptoticCase::RegVarAlphaGt1;
  double c_star = 0.0;
  /// Residual of the scalar equation defining c_star (0 for the closed form).
  double c_star_residual = 0.0;
  /// The regularization at which the prediction is made.
  double lambda = 0.0;
  double sigma_n = 0.0;
  double lambda_star_pred = 0.0;
  double variance_pred = 0.0;
  double bias_pred = 0.0;
  /// Signal decay diagnostic: left side over right side of the decay
  /// condition at theta = 1. Empty for a zero signal.
  std::optional<double> decay_ratio;
  /// Geometric-step case only.
  std::optional<int> s_star;
  std::optional<double> rho_star;
  std::string scaling_note;
};

/// Root of 1 = nu / c + (pi / alpha) / sin(pi / alpha) * c^(-1/alpha).
double cstar_case1(double nu, double alpha);
double cstar_case1_residual(double nu, double alpha, double c);

/// sum_{k in Z} q^k / (1 + t p^k)^r.
double g_series(double p, double q, int r, double t, double eps = 1e-15);

/// Power law sigma_i = i^-alpha at lambda = nu n^-alpha.
AsymptoticPrediction predict_case1(double nu, double alpha, Index n, double tau,
                                   const Signal& signal);
/// Log-power law sigma_i = i^-1 (1 + log i)^-alpha' at lambda = nu n^-1 log^(1 - alpha') n.
AsymptoticPrediction predict_case2(double nu, double alpha_prime, Index n, double tau,
                                   const Signal& signal);
/// Geometric step at lambda = nu p^-s_star with q^s_star <= n < q^(s_star + 1).
AsymptoticPrediction predict_case3(double nu, double p, double q, Index n, double tau,
                                   const Signal& signal);

/// Dispatches on the spectrum family. Explicit spectra are rejected; the
/// dimension is ignored since the asymptotic rates are defined for the infinite sequence.
AsymptoticPrediction predict_asymptotic(const Spectrum& spectrum, double nu, Index n, double tau,
                                        const Signal& signal);

}  // namespace ridgerisk
