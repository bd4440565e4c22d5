#include "ridgerisk/effective_risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ridgerisk/error.hpp"

namespace ridgerisk {

namespace {

constexpr double kTieTolerance = 1e-10;

struct Core {
  Regime regime;
  double lambda_star;
  double t2;
};

Core solve_core(const Spectrum& spectrum, Index n, double lambda) {
  const Regime regime = classify_regime(spectrum, n, lambda);
  Core c{regime, 0.0, 0.0};
  if (regime != Regime::RidgelessUnder) {
    const auto star = solve_lambda_star(spectrum, n, lambda);
    c.lambda_star = star.value;
  }
  c.t2 = spectrum.trace_resolvent(c.lambda_star, 2, kSolverTraceTolerance);
  require(c.t2 < static_cast<double>(n), ErrorCode::Inconsistent,
          "Tr Sigma^2 (Sigma + lambda_star)^-2 >= n");
  return c;
}

double variance_from(const Core& c, Index n, double tau) {
  return tau * tau * c.t2 / (static_cast<double>(n) - c.t2);
}

double bias_from(const Core& c, const Spectrum& spectrum, const Signal& signal, Index n) {
  if (c.regime == Regime::RidgelessUnder) return 0.0;
  const auto forms = signal.forms(spectrum, c.lambda_star);
  return c.lambda_star * c.lambda_star * forms.q2 / (1.0 - c.t2 / static_cast<double>(n));
}

void check_tau(double tau) {
  require(tau >= 0.0 && std::isfinite(tau), ErrorCode::InvalidArgument,
          "noise level tau must be nonnegative");
}

BoundsReport bounds_from(const Core& c, const Spectrum& spectrum, const Signal& signal, Index n,
                         double tau) {
  const double nd = static_cast<double>(n);
  BoundsReport b;
  b.c_star = nd / (nd - c.t2);
  // lambda_star is known to solver precision only, so an eigenvalue equal to
  // it up to that precision still counts as >= lambda_star.
  b.k_star = spectrum.count_at_least(c.lambda_star * (1.0 - kTieTolerance));
  const Index k = b.k_star;
  const bool empty_tail = spectrum.dimension() && k >= *spectrum.dimension();
  if (empty_tail) {
    b.r1 = 0.0;
    b.r2 = 0.0;
    b.b_k = std::numeric_limits<double>::infinity();
  } else if (k == 0) {
    // sigma_0 is read as +infinity: every eigenvalue sits in the tail.
    b.r1 = spectrum.power_tail_sum(1, 1, kSolverTraceTolerance);
    b.r2 = spectrum.power_tail_sum(1, 2, kSolverTraceTolerance);
    b.b_k = std::numeric_limits<double>::infinity();
  } else {
    const auto ranks = spectrum.tail_ranks(k, kSolverTraceTolerance);
    b.r1 = ranks.r1;
    b.r2 = ranks.r2;
    b.b_k = ranks.b_k;
  }
  const double kd = static_cast<double>(k);
  b.v_bound = b.c_star * tau * tau * (kd / nd + b.r2 / nd);
  const auto split = signal.split_norms(spectrum, k);
  const double sigma_k = k == 0 ? 0.0 : spectrum.eigenvalue(k);
  b.b_bound = b.c_star * (sigma_k * sigma_k * split.head_inv_sigma_sq + split.tail_sigma_sq);
  const double budget = std::isinf(b.b_k) ? kd : kd + b.r1 / b.b_k;
  b.sample_budget_check = 2.0 * nd >= budget;
  return b;
}

}  // namespace

const char* to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::Ridge: return "ridge";
    case Regime::RidgelessOver: return "ridgeless_over";
    case Regime::RidgelessUnder: return "ridgeless_under";
  }
  return "unknown";
}

Regime classify_regime(const Spectrum& spectrum, Index n, double lambda) {
  require(n >= 1, ErrorCode::InvalidArgument, "sample size must be at least 1");
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::InvalidArgument,
          "lambda must be nonnegative and finite");
  if (lambda > 0.0) return Regime::Ridge;
  const auto d = spectrum.dimension();
  if (!d || *d > n) return Regime::RidgelessOver;
  require(*d != n, ErrorCode::InvalidArgument,
          "ridgeless prediction undefined at d == n (lambda_star(0) = 0 with no interpolation slack)");
  return Regime::RidgelessUnder;
}

double effective_variance(const Spectrum& spectrum, Index n, double tau, double lambda) {
  check_tau(tau);
  return variance_from(solve_core(spectrum, n, lambda), n, tau);
}

double effective_bias(const Spectrum& spectrum, const Signal& signal, Index n, double lambda) {
  signal.check_within(spectrum);
  return bias_from(solve_core(spectrum, n, lambda), spectrum, signal, n);
}

BoundsReport proposition_bounds(const Spectrum& spectrum, const Signal& signal, Index n,
                                double tau, double lambda) {
  check_tau(tau);
  signal.check_within(spectrum);
  return bounds_from(solve_core(spectrum, n, lambda), spectrum, signal, n, tau);
}

RiskReport risk_report(const Spectrum& spectrum, const Signal& signal, Index n, double tau,
                       double lambda, double eta) {
  check_tau(tau);
  signal.check_within(spectrum);
  const Core c = solve_core(spectrum, n, lambda);
  RiskReport r;
  r.lambda = lambda;
  r.lambda_star = c.lambda_star;
  r.regime = c.regime;
  r.v_n = variance_from(c, n, tau);
  r.b_n = bias_from(c, spectrum, signal, n);
  r.r_n = r.v_n + r.b_n;
  r.diagnostics = diagnostics(spectrum, signal, n, lambda, eta);
  r.bounds = bounds_from(c, spectrum, signal, n, tau);
  return r;
}

double population_resolvent(const Spectrum& spectrum, const Signal& signal, double zeta, double mu,
                            ResolventKind which) {
  require(zeta >= 0.0 && std::isfinite(zeta) && std::isfinite(mu), ErrorCode::InvalidArgument,
          "population resolvent needs finite zeta >= 0");
  if (which == ResolventKind::SignalDyad) {
    require(zeta > 0.0 || mu > 0.0, ErrorCode::Divergence,
            "signal resolvent diverges at zeta = mu = 0");
    return signal.resolvent_form(spectrum, zeta, mu);
  }
  if (zeta == 0.0) {
    require(mu > 0.0, ErrorCode::Divergence, "identity resolvent diverges at zeta = 0, mu <= 0");
    require(spectrum.dimension().has_value(), ErrorCode::Divergence,
            "identity resolvent at zeta = 0 diverges for an infinite spectrum");
    return static_cast<double>(*spectrum.dimension()) / mu;
  }
  return spectrum.affine_resolvent_trace(zeta, mu, kSolverTraceTolerance);
}

double variance_from_free_energy(const Spectrum& spectrum, Index n, double tau, double lambda,
                                 double rel_step) {
  check_tau(tau);
  require(lambda > 0.0, ErrorCode::InvalidArgument, "free-energy identity needs lambda > 0");
  require(rel_step > 0.0 && rel_step < 0.5, ErrorCode::InvalidArgument, "bad relative step");
  const double zeta = static_cast<double>(n) * lambda;
  auto free_energy = [&](double z) {
    const double mu_star = solve_mu_star(spectrum, n, z, 0.0).value;
    return z * spectrum.affine_resolvent_trace(z, mu_star, kSolverTraceTolerance);
  };
  const double h = rel_step * zeta;
  return tau * tau * (free_energy(zeta + h) - free_energy(zeta - h)) / (2.0 * h);
}

double bias_from_free_energy(const Spectrum& spectrum, const Signal& signal, Index n,
                             double lambda, double rel_step) {
  signal.check_within(spectrum);
  require(lambda > 0.0, ErrorCode::InvalidArgument, "free-energy identity needs lambda > 0");
  require(rel_step > 0.0 && rel_step < 0.5, ErrorCode::InvalidArgument, "bad relative step");
  const double zeta = static_cast<double>(n) * lambda;
  auto free_energy = [&](double mu) {
    const double mu_star = solve_mu_star(spectrum, n, zeta, mu).value;
    return zeta * signal.resolvent_form(spectrum, zeta, mu_star);
  };
  // The step is relative to mu_star(0), the scale on which the free energy
  // varies; a step relative to zeta drowns in solver noise once zeta << mu_star.
  // Negative mu of that size can leave the domain zeta + mu sigma_1 > 0, so the
  // stencil is the one-sided second-order one.
  const double mu_star0 = solve_mu_star(spectrum, n, zeta, 0.0).value;
  const double h = rel_step * mu_star0;
  const double slope = (-3.0 * free_energy(0.0) + 4.0 * free_energy(h) - free_energy(2.0 * h)) / (2.0 * h);
  return -zeta * slope;
}

}  // namespace ridgerisk
