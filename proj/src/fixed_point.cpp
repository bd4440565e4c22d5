#include "ridgerisk/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ridgerisk/error.hpp"

namespace ridgerisk {

namespace {

constexpr double kTinyShift = 1e-30;

struct Bisection {
  double value;
  double value_h;
  double low;
  double high;
  int iterations;
};

// h is increasing with h(low) < 0 < h(high). Splits geometrically while the
// bracket spans more than a factor of two, then arithmetically down to a few
// ulps.
template <class H>
Bisection bisect_increasing(H&& h, double low, double high, double h_low, double h_high) {
  int it = 0;
  for (; it < kSolverMaxIterations; ++it) {
    const bool geometric = low > 0.0 && high > 2.0 * low;
    const double mid = geometric ? std::sqrt(low) * std::sqrt(high) : 0.5 * (low + high);
    if (!(mid > low && mid < high)) break;
    if (high - low <= 4.0 * std::numeric_limits<double>::epsilon() * high) break;
    const double hm = h(mid);
    if (hm < 0.0) {
      low = mid;
      h_low = hm;
    } else {
      high = mid;
      h_high = hm;
    }
  }
  if (std::abs(h_low) <= std::abs(h_high)) return {low, h_low, low, high, it};
  return {high, h_high, low, high, it};
}

template <class H>
double expand_upper(H&& h, double start, double& h_value) {
  double hi = start;
  h_value = h(hi);
  for (int i = 0; i < 400 && !(h_value > 0.0); ++i) {
    hi *= 2.0;
    h_value = h(hi);
  }
  require(h_value > 0.0, ErrorCode::NoSolution, "could not bracket the fixed point");
  return hi;
}

void check_tol(double tol) {
  require(tol > 0.0 && std::isfinite(tol), ErrorCode::InvalidArgument,
          "solver tolerance must be positive");
}

}  // namespace

FixedPointResult solve_lambda_star(const Spectrum& spectrum, Index n, double lambda, double tol) {
  require(n >= 1, ErrorCode::InvalidArgument, "sample size must be at least 1");
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::InvalidArgument,
          "lambda must be nonnegative and finite");
  check_tol(tol);
  const double nd = static_cast<double>(n);
  if (lambda == 0.0 && spectrum.dimension() && *spectrum.dimension() <= n) {
    FixedPointResult r;
    r.boundary = true;
    return r;
  }
  auto h = [&](double x) {
    return nd * (1.0 - lambda / x) - spectrum.trace_resolvent(x, 1, kSolverTraceTolerance);
  };
  const double low = std::max(lambda, kTinyShift);
  const double h_low = h(low);
  require(h_low < 0.0, ErrorCode::NoSolution, "lambda_star lower bracket has the wrong sign");
  double h_high = 0.0;
  const double high = expand_upper(h, lambda + spectrum.tail_sum(1, kSolverTraceTolerance), h_high);
  const auto b = bisect_increasing(h, low, high, h_low, h_high);
  FixedPointResult r;
  r.value = b.value;
  r.residual = b.value_h / nd;
  r.iterations = b.iterations;
  r.low = b.low;
  r.high = b.high;
  r.converged = std::abs(r.residual) <= tol;
  return r;
}

FixedPointResult solve_lambda_zero(const Spectrum& spectrum, double m, double tol) {
  require(m > 0.0 && std::isfinite(m), ErrorCode::InvalidArgument, "m must be positive");
  check_tol(tol);
  require(!spectrum.dimension() || static_cast<double>(*spectrum.dimension()) > m,
          ErrorCode::Infeasible, "lambda_0(m) needs more than m positive eigenvalues");
  auto h = [&](double x) { return m - spectrum.trace_resolvent(x, 1, kSolverTraceTolerance); };
  const double low = kTinyShift;
  const double h_low = h(low);
  require(h_low < 0.0, ErrorCode::Infeasible, "lambda_0(m) is below the solver floor");
  double h_high = 0.0;
  const double high = expand_upper(h, 2.0 * spectrum.tail_sum(1, kSolverTraceTolerance) / m, h_high);
  const auto b = bisect_increasing(h, low, high, h_low, h_high);
  FixedPointResult r;
  r.value = b.value;
  r.residual = b.value_h / m;
  r.iterations = b.iterations;
  r.low = b.low;
  r.high = b.high;
  r.converged = std::abs(r.residual) <= tol;
  return r;
}

FixedPointResult solve_mu_star(const Spectrum& spectrum, Index n, double zeta, double mu,
                               double tol) {
  require(n >= 1, ErrorCode::InvalidArgument, "sample size must be at least 1");
  require(zeta > 0.0 && std::isfinite(zeta), ErrorCode::InvalidArgument, "zeta must be positive");
  require(std::isfinite(mu) && zeta + mu * spectrum.eigenvalue(1) > 0.0, ErrorCode::InvalidArgument,
          "mu_star needs zeta + mu * sigma_1 > 0");
  check_tol(tol);
  const double nd = static_cast<double>(n);
  auto h = [&](double xi) {
    return nd - 1.0 / xi -
           spectrum.affine_resolvent_trace(xi * zeta, 1.0 + xi * mu, kSolverTraceTolerance);
  };
  const double low = 1.0 / nd;
  const double h_low = h(low);
  require(h_low < 0.0, ErrorCode::NoSolution, "mu_star lower bracket has the wrong sign");
  double h_high = 0.0;
  const double high = expand_upper(h, 2.0 / nd, h_high);
  const auto b = bisect_increasing(h, low, high, h_low, h_high);
  FixedPointResult r;
  r.value = mu + 1.0 / b.value;
  r.low = mu + 1.0 / b.high;
  r.high = mu + 1.0 / b.low;
  r.iterations = b.iterations;
  const double r0 = spectrum.affine_resolvent_trace(zeta, r.value, kSolverTraceTolerance);
  r.residual = (r.value - mu - nd / (1.0 + r0)) / r.value;
  r.converged = std::abs(r.residual) <= tol;
  return r;
}

Diagnostics diagnostics(const Spectrum& spectrum, const Signal& signal, Index n, double lambda,
                        double eta) {
  require(eta > 0.0 && eta < 0.5, ErrorCode::InvalidArgument, "eta must lie in (0, 1/2)");
  signal.check_within(spectrum);
  Diagnostics d;
  d.eta = eta;
  const double nd = static_cast<double>(n);
  const auto star = solve_lambda_star(spectrum, n, lambda);
  const double lambda_star = star.value;

  d.effective_rank = spectrum.effective_rank(n);
  const double rank = d.effective_rank;
  const double log_rank = std::log(rank);
  const Index eta_index = std::max<Index>(1, static_cast<Index>(std::floor(eta * nd)));
  const double sigma_eta =
      (spectrum.dimension() && eta_index > *spectrum.dimension()) ? 0.0
                                                                  : spectrum.eigenvalue(eta_index);
  const double spread = sigma_eta * rank * log_rank * log_rank;

  if (lambda > 0.0) {
    const double ratio = lambda / lambda_star;
    d.kappa = std::min(ratio, 1.0 - ratio);
    d.chi_n = 1.0 + spread / (nd * lambda);
  }

  const bool overparameterized = !spectrum.dimension() || *spectrum.dimension() > n;
  if (overparameterized) {
    const double ridgeless_star = lambda == 0.0 ? lambda_star : solve_lambda_star(spectrum, n, 0.0).value;
    d.c_sigma = 1.0 - spectrum.trace_resolvent(ridgeless_star, 2, kSolverTraceTolerance) / nd;
    d.kappa_ridgeless = (*d.c_sigma) * (*d.c_sigma) / 8.0;
    d.chi_n_prime = 1.0 + spread / (*d.kappa_ridgeless * nd * ridgeless_star);
  }

  if (!signal.empty() && lambda_star > 0.0) {
    const auto forms = signal.forms(spectrum, lambda_star);
    if (forms.inv_sigma_norm_sq > 0.0) {
      const double t1 = spectrum.trace_resolvent(lambda_star, 1, kSolverTraceTolerance);
      d.rho = (forms.q1 / forms.inv_sigma_norm_sq) / t1;
    }
  }
  return d;
}

LambdaRange suggest_lambda_range(const Spectrum& spectrum, Index n, double c_prime) {
  require(c_prime > 1.0 && std::isfinite(c_prime), ErrorCode::InvalidArgument,
          "C' must be greater than 1");
  require(n >= 1, ErrorCode::InvalidArgument, "sample size must be at least 1");
  const auto inv = spectrum.inverse_effective_rank(static_cast<double>(n));
  require(!inv.empty, ErrorCode::Infeasible, "inverse effective rank d_Sigma^-1(n) is empty");
  const double sigma = spectrum.eigenvalue(inv.index);
  return {sigma / c_prime, c_prime * sigma, inv.index};
}

}  // namespace ridgerisk
