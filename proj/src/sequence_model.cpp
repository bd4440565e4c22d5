#include "ridgerisk/sequence_model.hpp"

#include <cmath>

#include "ridgerisk/error.hpp"
#include "ridgerisk/fixed_point.hpp"

namespace ridgerisk {

namespace {

struct Pieces {
  double shrinkage;  // lambda_star^2 Q_2(lambda_star)
  double t2;
};

Pieces pieces(const Spectrum& spectrum, const Signal& signal, Index n, double lambda_star) {
  require(n >= 1, ErrorCode::InvalidArgument, "sample size must be at least 1");
  require(lambda_star > 0.0 && std::isfinite(lambda_star), ErrorCode::InvalidArgument,
          "sequence model needs lambda_star > 0");
  signal.check_within(spectrum);
  const auto forms = signal.forms(spectrum, lambda_star);
  return {lambda_star * lambda_star * forms.q2,
          spectrum.trace_resolvent(lambda_star, 2, kSolverTraceTolerance)};
}

}  // namespace

SequenceRisk sequence_risk_given_omega(const Spectrum& spectrum, const Signal& signal, Index n,
                                       double lambda_star, double omega) {
  require(omega >= 0.0 && std::isfinite(omega), ErrorCode::InvalidArgument,
          "omega must be nonnegative");
  const Pieces p = pieces(spectrum, signal, n, lambda_star);
  SequenceRisk r;
  r.omega_sq = omega * omega;
  r.direct_bias = p.shrinkage;
  r.direct_noise = r.omega_sq * p.t2 / static_cast<double>(n);
  r.bias_part = r.direct_bias;
  r.var_part = r.direct_noise;
  r.risk = r.bias_part + r.var_part;
  return r;
}

SequenceRisk solve_omega(const Spectrum& spectrum, const Signal& signal, Index n, double tau,
                         double lambda_star) {
  require(tau >= 0.0 && std::isfinite(tau), ErrorCode::InvalidArgument,
          "noise level tau must be nonnegative");
  const Pieces p = pieces(spectrum, signal, n, lambda_star);
  const double nd = static_cast<double>(n);
  require(p.t2 < nd, ErrorCode::NoSolution, "no positive omega: T_2(lambda_star) >= n");
  const double slack = 1.0 - p.t2 / nd;
  const double tau_sq = tau * tau;

  SequenceRisk r;
  r.omega_sq = (tau_sq + p.shrinkage) / slack;
  r.direct_bias = p.shrinkage;
  r.direct_noise = r.omega_sq * p.t2 / nd;
  r.var_part = tau_sq * p.t2 / (nd - p.t2);
  r.bias_part = p.shrinkage / slack;
  r.risk = r.bias_part + r.var_part;
  r.degenerate = r.omega_sq == 0.0;

  if (!r.degenerate) {
    const double substituted = tau_sq + r.direct_bias + r.direct_noise;
    require(std::abs(substituted - r.omega_sq) <= 1e-12 * r.omega_sq, ErrorCode::Internal,
            "omega fixed point failed its substitution check");
  }
  return r;
}

}  // namespace ridgerisk
