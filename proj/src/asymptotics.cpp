#include "ridgerisk/asymptotics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <type_traits>

#include "compensated_sum.hpp"
#include "ridgerisk/error.hpp"

namespace ridgerisk {

namespace {

using detail::CompensatedSum;

// f decreasing with f(lo) > 0 > f(hi).
template <class F>
double bisect_decreasing(F&& f, double lo, double hi) {
  for (int it = 0; it < 400; ++it) {
    const double mid = hi > 2.0 * lo ? std::sqrt(lo) * std::sqrt(hi) : 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (f(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
}

template <class F>
double bracket_and_solve(F&& f) {
  double lo = 1.0;
  double hi = 1.0;
  for (int i = 0; i < 2000 && !(f(lo) > 0.0); ++i) lo *= 0.5;
  for (int i = 0; i < 2000 && !(f(hi) < 0.0); ++i) hi *= 2.0;
  require(f(lo) > 0.0 && f(hi) < 0.0, ErrorCode::NoSolution, "could not bracket c_star");
  return bisect_decreasing(f, lo, hi);
}

void check_common(double nu, Index n, double tau) {
  require(nu >= 0.0 && std::isfinite(nu), ErrorCode::InvalidArgument, "nu must be nonnegative");
  require(n >= 1, ErrorCode::InvalidArgument, "sample size must be at least 1");
  require(tau >= 0.0 && std::isfinite(tau), ErrorCode::InvalidArgument,
          "noise level tau must be nonnegative");
}

// Sums weight(x_k) beta_k^2 / (1 + c x_k)^2 and the two sides of the decay
// condition over the signal support.
struct SupportSums {
  double bias = 0.0;
  std::optional<double> ratio;
};

template <class X>
SupportSums support_sums(const Signal& signal, double c, X&& x_of) {
  CompensatedSum bias;
  CompensatedSum lhs;
  CompensatedSum rhs;
  for (const auto& [k, coef] : signal.entries()) {
    const double x = x_of(k);
    const double b2 = coef * coef;
    const double denom = 1.0 + c * x;
    bias.add(x * b2 / (denom * denom));
    lhs.add(x * b2);
    rhs.add(x * b2 / denom);
  }
  SupportSums out;
  out.bias = bias.value();
  if (rhs.value() > 0.0) out.ratio = lhs.value() / rhs.value();
  return out;
}

// s with q^s <= i < q^(s+1).
int step_block(double q, double i) {
  int s = 0;
  while (std::pow(q, s + 1) <= i) ++s;
  return s;
}

// log(1 + e^l) without overflow.
double log1p_exp(double l) { return l > 30.0 ? l + std::log1p(std::exp(-l)) : std::log1p(std::exp(l)); }

}  // namespace

const char* to_string(AsymptoticCase c) noexcept {
  switch (c) {
    case AsymptoticCase::RegVarAlphaGt1: return "regvar_alpha_gt1";
    case AsymptoticCase::RegVarAlphaEq1: return "regvar_alpha_eq1";
    case AsymptoticCase::GeometricStep: return "geometric_step";
  }
  return "unknown";
}

double cstar_case1_residual(double nu, double alpha, double c) {
  const double a = std::numbers::pi / alpha;
  return nu / c + (a / std::sin(a)) * std::pow(c, -1.0 / alpha) - 1.0;
}

double cstar_case1(double nu, double alpha) {
  require(alpha > 1.0 && std::isfinite(alpha), ErrorCode::InvalidArgument, "alpha must exceed 1");
  require(nu >= 0.0 && std::isfinite(nu), ErrorCode::InvalidArgument, "nu must be nonnegative");
  const double a = std::numbers::pi / alpha;
  const double pure = std::pow(a / std::sin(a), alpha);
  auto f = [&](double c) { return cstar_case1_residual(nu, alpha, c); };
  // f(pure / 2) > 0 since the second term alone exceeds 1 there, and
  // at 2 nu + 2^alpha pure each term is at most 1/2 and one is strictly less.
  return bisect_decreasing(f, 0.5 * pure, 2.0 * nu + std::pow(2.0, alpha) * pure);
}

double g_series(double p, double q, int r, double t, double eps) {
  require(q > 1.0 && p > q && std::isfinite(p), ErrorCode::InvalidArgument,
          "G_{p,q,r} needs 1 < q < p");
  require(r >= 1 && r <= 3, ErrorCode::InvalidArgument, "G_{p,q,r} needs r in {1, 2, 3}");
  require(t > 0.0 && std::isfinite(t), ErrorCode::InvalidArgument, "G_{p,q,r} needs t > 0");
  require(eps > 0.0, ErrorCode::InvalidArgument, "tolerance must be positive");
  const double lp = std::log(p);
  const double lq = std::log(q);
  const double lt = std::log(t);
  const double rd = static_cast<double>(r);
  auto log_term = [&](double k) { return k * lq - rd * log1p_exp(lt + k * lp); };
  const double center = std::round(-lt / lp);

  CompensatedSum acc;
  acc.add(std::exp(log_term(center)));
  // Upper tail from K is at most q^K (t p^K)^-r / (1 - q / p^r).
  const double up_ratio = 1.0 / (1.0 - q / std::pow(p, rd));
  // Lower tail up to K is at most q^K / (1 - 1/q).
  const double down_ratio = 1.0 / (1.0 - 1.0 / q);
  bool up_done = false;
  bool down_done = false;
  for (int j = 1; j < 1000000 && !(up_done && down_done); ++j) {
    if (!up_done) {
      const double k = center + j;
      acc.add(std::exp(log_term(k)));
      const double next = k + 1.0;
      up_done = std::exp(next * lq - rd * (lt + next * lp)) * up_ratio <= eps * acc.value();
    }
    if (!down_done) {
      const double k = center - j;
      acc.add(std::exp(log_term(k)));
      down_done = std::exp((k - 1.0) * lq) * down_ratio <= eps * acc.value();
    }
  }
  require(up_done && down_done, ErrorCode::Divergence, "G_{p,q,r} series did not converge");
  return acc.value();
}

AsymptoticPrediction predict_case1(double nu, double alpha, Index n, double tau,
                                   const Signal& signal) {
  check_common(nu, n, tau);
  AsymptoticPrediction out;
  out.kind = AsymptoticCase::RegVarAlphaGt1;
  const double c = cstar_case1(nu, alpha);
  const double nd = static_cast<double>(n);
  out.c_star = c;
  out.c_star_residual = cstar_case1_residual(nu, alpha, c);
  out.sigma_n = std::pow(nd, -alpha);
  out.lambda = nu * out.sigma_n;
  out.lambda_star_pred = c * out.sigma_n;
  const double denom = 1.0 + nu * (alpha - 1.0) / c;
  out.variance_pred = tau * tau * (1.0 - nu / c) * (alpha - 1.0) / denom;
  const auto sums = support_sums(signal, c, [&](Index k) {
    return std::pow(static_cast<double>(k) / nd, alpha);
  });
  out.bias_pred = out.sigma_n * c * c * alpha / denom * sums.bias;
  out.decay_ratio = sums.ratio;
  out.scaling_note = "lambda = nu * n^-alpha";
  return out;
}

AsymptoticPrediction predict_case2(double nu, double alpha_prime, Index n, double tau,
                                   const Signal& signal) {
  check_common(nu, n, tau);
  require(alpha_prime > 1.0 && std::isfinite(alpha_prime), ErrorCode::InvalidArgument,
          "alpha' must exceed 1");
  require(n >= 2, ErrorCode::InvalidArgument, "the log-scaled case needs n >= 2");
  AsymptoticPrediction out;
  out.kind = AsymptoticCase::RegVarAlphaEq1;
  const double c = nu + 1.0 / (alpha_prime - 1.0);
  const double nd = static_cast<double>(n);
  const double log_n = std::log(nd);
  out.c_star = c;
  out.c_star_residual = nu / c + 1.0 / ((alpha_prime - 1.0) * c) - 1.0;
  out.sigma_n = 1.0 / (nd * std::pow(1.0 + log_n, alpha_prime));
  out.lambda = nu * std::pow(log_n, 1.0 - alpha_prime) / nd;
  out.lambda_star_pred = c * out.sigma_n * log_n;
  out.variance_pred = tau * tau / (c * log_n);
  const auto sums =
      support_sums(signal, c, [&](Index k) { return static_cast<double>(k) * log_n / nd; });
  out.bias_pred = c * c * out.sigma_n * log_n * sums.bias;
  out.decay_ratio = sums.ratio;
  out.scaling_note = "lambda = nu * n^-1 * log(n)^(1 - alpha')";
  return out;
}

AsymptoticPrediction predict_case3(double nu, double p, double q, Index n, double tau,
                                   const Signal& signal) {
  check_common(nu, n, tau);
  require(q > 1.0 && p > q && std::isfinite(p), ErrorCode::InvalidArgument,
          "geometric step needs 1 < q < p");
  const double nd = static_cast<double>(n);
  require(nd >= q, ErrorCode::InvalidArgument, "geometric step asymptotics need n >= q");
  AsymptoticPrediction out;
  out.kind = AsymptoticCase::GeometricStep;
  const int s_star = step_block(q, nd);
  const double rho = nd / (std::pow(q, s_star + 1) - std::pow(q, s_star));
  out.s_star = s_star;
  out.rho_star = rho;
  out.sigma_n = std::pow(p, -s_star);
  out.lambda = nu * out.sigma_n;

  auto f = [&](double c) { return nu / c + g_series(p, q, 1, c) / rho - 1.0; };
  const double c = bracket_and_solve(f);
  out.c_star = c;
  out.c_star_residual = f(c);
  const double g2 = g_series(p, q, 2, c);
  require(rho > g2, ErrorCode::Divergence, "degenerate denominator: rho_star <= G_{p,q,2}(c_star)");
  out.lambda_star_pred = c * out.sigma_n;
  out.variance_pred = g2 * tau * tau / (rho - g2);
  const auto sums = support_sums(signal, c, [&](Index k) {
    return std::pow(p, step_block(q, static_cast<double>(k)) - s_star);
  });
  out.bias_pred = c * c * out.sigma_n / (1.0 - g2 / rho) * sums.bias;
  out.decay_ratio = sums.ratio;
  out.scaling_note = "lambda = nu * p^-s_star";
  return out;
}

AsymptoticPrediction predict_asymptotic(const Spectrum& spectrum, double nu, Index n, double tau,
                                        const Signal& signal) {
  return std::visit(
      [&](const auto& fam) -> AsymptoticPrediction {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, PowerLaw>) {
          return predict_case1(nu, fam.alpha, n, tau, signal);
        } else if constexpr (std::is_same_v<T, LogPowerLaw>) {
          return predict_case2(nu, fam.alpha, n, tau, signal);
        } else if constexpr (std::is_same_v<T, GeometricStep>) {
          return predict_case3(nu, fam.p, fam.q, n, tau, signal);
        } else {
          fail(ErrorCode::InvalidArgument,
               "asymptotic predictions need a power_law, log_power_law or geometric_step spectrum");
        }
      },
      spectrum.family());
}

}  // namespace ridgerisk
