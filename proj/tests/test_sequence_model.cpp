#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "ridgerisk/effective_risk.hpp"
#include "ridgerisk/error.hpp"
#include "ridgerisk/sequence_model.hpp"

using namespace ridgerisk;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST_SUITE("sequence_model") {

TEST_CASE("closed forms") {
  const Index n = 100;
  const auto iso = Spectrum::isotropic(2 * n);
  const Signal zero;
  const auto r = sequence_risk_given_omega(iso, zero, n, 1.0, 1.0);
  CHECK(r.risk == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.bias_part == 0.0);

  const auto beta = Signal::from_pairs({{2, 1.0}, {9, -3.0}});
  const auto r0 = sequence_risk_given_omega(iso, beta, n, 1.0, 0.0);
  CHECK(r0.var_part == 0.0);
  CHECK(r0.risk == r0.bias_part);
  CHECK(r0.bias_part == doctest::Approx(10.0 / 4.0).epsilon(1e-14));

  const auto w = solve_omega(iso, zero, n, 1.0, 1.0);
  CHECK(w.omega_sq == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_FALSE(w.degenerate);

  const auto deg = solve_omega(iso, zero, n, 0.0, 1.0);
  CHECK(deg.degenerate);
  CHECK(deg.omega_sq == 0.0);
  CHECK(deg.risk == 0.0);

  CHECK(code_of([] { solve_omega(Spectrum::isotropic(400), Signal(), 100, 1.0, 0.01); }) ==
        ErrorCode::NoSolution);
}

TEST_CASE("sequence risk agrees with Monte Carlo over the noise") {
  // y_i = sqrt(sigma_i) beta_i + (omega / sqrt n) g_i, ridge at lambda_star:
  // b_i = sqrt(sigma_i) y_i / (sigma_i + lambda_star).
  const Index n = 500;
  const Index d = 100;
  const auto spec = Spectrum::power_law(2.0, d);
  const auto beta = Signal::top_k_ones(d);
  const double lambda_star = solve_lambda_star(spec, n, 1e-3).value;
  const double omega = 0.8;
  const auto exact = sequence_risk_given_omega(spec, beta, n, lambda_star, omega);

  std::mt19937_64 rng(12345);
  std::normal_distribution<double> g;
  const int draws = 1000000;
  std::vector<double> sigma(d);
  for (Index i = 0; i < d; ++i) sigma[i] = spec.eigenvalue(i + 1);
  const double noise = omega / std::sqrt(static_cast<double>(n));
  double mean = 0.0, m2 = 0.0;
  for (int t = 0; t < draws; ++t) {
    double loss = 0.0;
    for (Index i = 0; i < d; ++i) {
      const double s = sigma[i];
      const double y = std::sqrt(s) + noise * g(rng);
      const double b = std::sqrt(s) * y / (s + lambda_star);
      loss += s * (b - 1.0) * (b - 1.0);
    }
    const double delta = loss - mean;
    mean += delta / (t + 1);
    m2 += delta * (loss - mean);
  }
  const double se = std::sqrt(m2 / (draws - 1) / draws);
  CHECK(std::abs(mean - exact.risk) <= 3.0 * se);
}

TEST_CASE("solve_omega equals the effective risk") {
  struct Case {
    Spectrum s;
    Signal b;
    Index n;
    double tau;
    double lambda;
  };
  const std::vector<Case> cases = {
      {Spectrum::power_law(2.0), Signal::top_k_ones(100), 500, 0.5, 0.0},
      {Spectrum::power_law(2.0), Signal::top_k_ones(100), 500, 0.5, 1e-4},
      {Spectrum::log_power_law(2.0), Signal::top_k_ones(100), 300, 0.2, 0.0},
      {Spectrum::geometric_step(3.0, 2.0), Signal::from_pairs({{1, 1.0}, {30, 2.0}}), 64, 1.0, 1e-3},
      {Spectrum::isotropic(80), Signal::top_k_ones(80), 40, 0.3, 0.2},
      {Spectrum::isotropic(50), Signal::top_k_ones(5), 200, 1.0, 0.01},
  };
  for (const auto& c : cases) {
    const auto rep = risk_report(c.s, c.b, c.n, c.tau, c.lambda);
    const auto w = solve_omega(c.s, c.b, c.n, c.tau, rep.lambda_star);
    CHECK(oracle::rel_err(w.risk, rep.r_n) <= 1e-10);
    CHECK(oracle::rel_err(w.var_part, rep.v_n) <= 1e-10);
    CHECK(oracle::rel_err(w.bias_part, rep.b_n) <= 1e-10);
    CHECK(w.omega_sq >= c.tau * c.tau);
    CHECK(w.risk == doctest::Approx(w.bias_part + w.var_part).epsilon(1e-15));
    // The per-coordinate terms at the solved omega also add up to the risk.
    CHECK(w.direct_bias + w.direct_noise == doctest::Approx(w.risk).epsilon(1e-13));

    // Iterative oracle: omega^2 <- tau^2 + risk(omega) contracts with factor T_2 / n.
    double omega_sq = c.tau * c.tau;
    for (int it = 0; it < 20000; ++it) {
      const double next =
          c.tau * c.tau +
          sequence_risk_given_omega(c.s, c.b, c.n, rep.lambda_star, std::sqrt(omega_sq)).risk;
      if (std::abs(next - omega_sq) <= 1e-15 * next) break;
      omega_sq = next;
    }
    CHECK(oracle::rel_err(omega_sq, w.omega_sq) <= 1e-12);

    double prev = -1.0;
    for (double omega = 0.0; omega < 3.0; omega += 0.25) {
      const double r = sequence_risk_given_omega(c.s, c.b, c.n, rep.lambda_star, omega).risk;
      CHECK(r >= prev);
      prev = r;
    }
  }
}

}  // TEST_SUITE
