#pragma once

#include <optional>

#include "ridgerisk/signal.hpp"
#include "ridgerisk/spectrum.hpp"

namespace ridgerisk {

inline constexpr double kSolverTolerance = 1e-12;
inline constexpr int kSolverMaxIterations = 200;
/// Relative accuracy requested from trace functionals inside the solvers.
inline constexpr double kSolverTraceTolerance = 1e-14;
inline constexpr double kDefaultEta = 0.1;

struct FixedPointResult {
  double value = 0.0;
  /// Residual of the defining equation, normalized as documented per solver.
  double residual = 0.0;
  int iterations = 0;
  double low = 0.0;
  double high = 0.0;
  /// Set when the solution sits on the boundary value 0 (ridgeless,
  /// underparameterized).
  bool boundary = false;
  bool converged = true;
};

/// Undefined quantities are left empty.
struct Diagnostics {
  std::optional<double> kappa;
  std::optional<double> chi_n;
  std::optional<double> chi_n_prime;
  /// kappa used inside chi_n_prime (the largest admissible value C_Sigma^2 / 8).
  std::optional<double> kappa_ridgeless;
  std::optional<double> rho;
  std::optional<double> c_sigma;
  double eta = kDefaultEta;
  double effective_rank = 0.0;
};

/// Effective regularization: the nonnegative root of
/// n (1 - lambda / x) = Tr Sigma (Sigma + x I)^-1. Residual is reported
/// divided by n; bisection runs on the increasing map
/// x -> n (1 - lambda / x) - T_1(x).
FixedPointResult solve_lambda_star(const Spectrum& spectrum, Index n, double lambda,
                                   double tol = kSolverTolerance);

/// Root of Tr Sigma (Sigma + x I)^-1 = m; residual divided by m.
FixedPointResult solve_lambda_zero(const Spectrum& spectrum, double m,
                                   double tol = kSolverTolerance);

/// mu_star(zeta, mu) solving mu_star = mu + n / (1 + R_0(zeta, mu_star; I)).
/// Solved in xi = 1 / (mu_star - mu), where
/// n - 1/xi = Tr Sigma (xi (zeta I + mu Sigma) + Sigma)^-1 has an increasing
/// left side and a decreasing right side. Any mu with zeta + mu sigma_1 > 0 is
/// accepted, which lets central differences straddle mu = 0. Residual is
/// relative to mu_star.
FixedPointResult solve_mu_star(const Spectrum& spectrum, Index n, double zeta, double mu,
                               double tol = kSolverTolerance);

Diagnostics diagnostics(const Spectrum& spectrum, const Signal& signal, Index n, double lambda,
                        double eta = kDefaultEta);

struct LambdaRange {
  double low = 0.0;
  double high = 0.0;
  Index pivot = 0;
};

/// [sigma_k / c, c sigma_k] with k = d_Sigma^-1(n).
LambdaRange suggest_lambda_range(const Spectrum& spectrum, Index n, double c_prime);

}  // namespace ridgerisk
