#include "ridgerisk/ridgerisk.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include "ridgerisk/asymptotics.hpp"
#include "ridgerisk/effective_risk.hpp"
#include "ridgerisk/error.hpp"
#include "ridgerisk/experiments.hpp"
#include "ridgerisk/fixed_point.hpp"
#include "ridgerisk/montecarlo.hpp"
#include "ridgerisk/sequence_model.hpp"

struct rr_spectrum {
  ridgerisk::Spectrum value;
};
struct rr_signal {
  ridgerisk::Signal value;
};
struct rr_design {
  ridgerisk::Design value;
};

namespace {

using namespace ridgerisk;

thread_local std::string g_last_error;

struct NullArgument {
  const char* name;
};

template <class T>
T* need(T* p, const char* name) {
  if (!p) throw NullArgument{name};
  return p;
}

rr_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return RR_ERR_INVALID_ARGUMENT;
    case ErrorCode::OutOfRange: return RR_ERR_OUT_OF_RANGE;
    case ErrorCode::Divergence: return RR_ERR_DIVERGENCE;
    case ErrorCode::Undefined: return RR_ERR_UNDEFINED;
    case ErrorCode::Infeasible: return RR_ERR_INFEASIBLE;
    case ErrorCode::Inconsistent: return RR_ERR_INCONSISTENT;
    case ErrorCode::NoSolution: return RR_ERR_NO_SOLUTION;
    case ErrorCode::Config: return RR_ERR_CONFIG;
    case ErrorCode::Io: return RR_ERR_IO;
    case ErrorCode::Internal: return RR_ERR_INTERNAL;
  }
  return RR_ERR_INTERNAL;
}

template <class F>
rr_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return RR_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const NullArgument& e) {
    g_last_error = std::string("null pointer argument: ") + e.name;
    return RR_ERR_NULL_POINTER;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RR_ERR_INTERNAL;
  }
}

std::optional<Index> dim_arg(uint64_t d) {
  if (d == 0) return std::nullopt;
  return d;
}

// Tolerance arguments of exactly 0 select the library default.
double tol_arg(double t, double fallback) { return t == 0.0 ? fallback : t; }

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

rr_spectrum* wrap(Spectrum s) { return new rr_spectrum{std::move(s)}; }

void fill(const FixedPointResult& r, rr_fixed_point* out) {
  *out = {r.value, r.residual, r.low, r.high, r.iterations, r.boundary ? 1 : 0, r.converged ? 1 : 0};
}

void fill(const Diagnostics& d, rr_diagnostics* out) {
  *out = {};
  auto put = [](const std::optional<double>& v, double& field, int& flag) {
    field = v.value_or(0.0);
    flag = v.has_value() ? 1 : 0;
  };
  put(d.kappa, out->kappa, out->has_kappa);
  put(d.chi_n, out->chi_n, out->has_chi_n);
  put(d.chi_n_prime, out->chi_n_prime, out->has_chi_n_prime);
  put(d.kappa_ridgeless, out->kappa_ridgeless, out->has_kappa_ridgeless);
  put(d.rho, out->rho, out->has_rho);
  put(d.c_sigma, out->c_sigma, out->has_c_sigma);
  out->eta = d.eta;
  out->effective_rank = d.effective_rank;
}

void fill(const BoundsReport& b, rr_bounds* out) {
  *out = {b.k_star, b.c_star, b.v_bound, b.b_bound, b.r1, b.r2, b.b_k, b.sample_budget_check ? 1 : 0};
}

void fill(const SequenceRisk& r, rr_sequence_risk* out) {
  *out = {r.omega_sq, r.risk, r.bias_part, r.var_part, r.direct_bias, r.direct_noise,
          r.degenerate ? 1 : 0};
}

void fill(const Summary& s, rr_summary* out) { *out = {s.median, s.q10, s.q90, s.mean}; }

ResolventKind kind_arg(rr_resolvent_kind k) {
  require(k == RR_RESOLVENT_IDENTITY || k == RR_RESOLVENT_SIGNAL, ErrorCode::InvalidArgument,
          "unknown resolvent kind");
  return k == RR_RESOLVENT_IDENTITY ? ResolventKind::Identity : ResolventKind::SignalDyad;
}

Distribution distribution_arg(rr_distribution d) {
  require(d == RR_GAUSSIAN || d == RR_RADEMACHER, ErrorCode::InvalidArgument,
          "unknown distribution");
  return d == RR_GAUSSIAN ? Distribution::Gaussian : Distribution::Rademacher;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << content;
  out.close();
  require(static_cast<bool>(out), ErrorCode::Io, "failed writing '" + path + "'");
}

}  // namespace

extern "C" {

const char* rr_version(void) { return "1.0.0"; }

const char* rr_last_error(void) { return g_last_error.c_str(); }

const char* rr_status_string(rr_status status) {
  switch (status) {
    case RR_OK: return "ok";
    case RR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RR_ERR_OUT_OF_RANGE: return "out of range";
    case RR_ERR_DIVERGENCE: return "divergence";
    case RR_ERR_UNDEFINED: return "undefined";
    case RR_ERR_INFEASIBLE: return "infeasible";
    case RR_ERR_INCONSISTENT: return "internal inconsistency";
    case RR_ERR_NO_SOLUTION: return "no solution";
    case RR_ERR_CONFIG: return "configuration error";
    case RR_ERR_IO: return "i/o error";
    case RR_ERR_INTERNAL: return "internal error";
    case RR_ERR_NULL_POINTER: return "null pointer";
  }
  return "unknown status";
}

void rr_string_free(char* s) { delete[] s; }

unsigned rr_default_threads(void) { return default_threads(); }

rr_status rr_spectrum_power_law(double alpha, uint64_t dimension, double scale, rr_spectrum** out) {
  return guard([&] { *need(out, "out") = wrap(Spectrum::power_law(alpha, dim_arg(dimension), scale)); });
}

rr_status rr_spectrum_log_power_law(double alpha, uint64_t dimension, double scale, rr_spectrum** out) {
  return guard(
      [&] { *need(out, "out") = wrap(Spectrum::log_power_law(alpha, dim_arg(dimension), scale)); });
}

rr_status rr_spectrum_geometric_step(double p, double q, uint64_t dimension, double scale,
                                     rr_spectrum** out) {
  return guard(
      [&] { *need(out, "out") = wrap(Spectrum::geometric_step(p, q, dim_arg(dimension), scale)); });
}

rr_status rr_spectrum_explicit(const double* values, size_t count, rr_spectrum** out) {
  return guard([&] {
    need(out, "out");
    if (count) need(values, "values");
    *out = wrap(Spectrum::explicit_values(std::vector<double>(values, values + count)));
  });
}

rr_status rr_spectrum_isotropic(uint64_t dimension, rr_spectrum** out) {
  return guard([&] { *need(out, "out") = wrap(Spectrum::isotropic(dimension)); });
}

rr_status rr_spectrum_truncated(const rr_spectrum* s, uint64_t dimension, rr_spectrum** out) {
  return guard([&] { *need(out, "out") = wrap(need(s, "spectrum")->value.truncated(dimension)); });
}

void rr_spectrum_free(rr_spectrum* s) { delete s; }

rr_status rr_spectrum_dimension(const rr_spectrum* s, uint64_t* dimension) {
  return guard([&] { *need(dimension, "dimension") = need(s, "spectrum")->value.dimension().value_or(0); });
}

rr_status rr_spectrum_eigenvalue(const rr_spectrum* s, uint64_t i, double* out) {
  return guard([&] { *need(out, "out") = need(s, "spectrum")->value.eigenvalue(i); });
}

rr_status rr_spectrum_tail_sum(const rr_spectrum* s, uint64_t k, double eps, double* out) {
  return guard([&] { *need(out, "out") = need(s, "spectrum")->value.tail_sum(k, tol_arg(eps, kDefaultTolerance)); });
}

rr_status rr_spectrum_trace_resolvent(const rr_spectrum* s, double shift, int power, double eps,
                                      double* out) {
  return guard([&] { *need(out, "out") = need(s, "spectrum")->value.trace_resolvent(shift, power, tol_arg(eps, kDefaultTolerance)); });
}

rr_status rr_spectrum_effective_rank(const rr_spectrum* s, uint64_t n, double* out) {
  return guard([&] { *need(out, "out") = need(s, "spectrum")->value.effective_rank(n); });
}

rr_status rr_spectrum_inverse_effective_rank(const rr_spectrum* s, double m, uint64_t* index,
                                             int* empty) {
  return guard([&] {
    const auto r = need(s, "spectrum")->value.inverse_effective_rank(m);
    *need(index, "index") = r.index;
    *need(empty, "empty") = r.empty ? 1 : 0;
  });
}

rr_status rr_spectrum_tail_ranks(const rr_spectrum* s, uint64_t k, double eps, rr_tail_ranks* out) {
  return guard([&] {
    const auto r = need(s, "spectrum")->value.tail_ranks(k, tol_arg(eps, kDefaultTolerance));
    *need(out, "out") = {r.r1, r.r2, r.r_bar, r.b_k};
  });
}

rr_status rr_signal_from_pairs(const uint64_t* indices, const double* values, size_t count,
                               rr_signal** out) {
  return guard([&] {
    need(out, "out");
    std::vector<Signal::Entry> entries;
    if (count) {
      need(indices, "indices");
      need(values, "values");
    }
    for (size_t i = 0; i < count; ++i) entries.emplace_back(indices[i], values[i]);
    *out = new rr_signal{Signal::from_pairs(std::move(entries))};
  });
}

rr_status rr_signal_top_k_ones(uint64_t k, rr_signal** out) {
  return guard([&] { *need(out, "out") = new rr_signal{Signal::top_k_ones(k)}; });
}

void rr_signal_free(rr_signal* s) { delete s; }

rr_status rr_signal_compute_forms(const rr_signal* sig, const rr_spectrum* s, double shift,
                                  rr_signal_forms* out) {
  return guard([&] {
    const auto f = need(sig, "signal")->value.forms(need(s, "spectrum")->value, shift);
    *need(out, "out") = {f.norm_sq, f.sigma_norm_sq, f.inv_sigma_norm_sq, f.q1, f.q2};
  });
}

rr_status rr_solve_lambda_star(const rr_spectrum* s, uint64_t n, double lambda, double tol,
                               rr_fixed_point* out) {
  return guard([&] { fill(solve_lambda_star(need(s, "spectrum")->value, n, lambda, tol_arg(tol, kSolverTolerance)), need(out, "out")); });
}

rr_status rr_solve_lambda_zero(const rr_spectrum* s, double m, double tol, rr_fixed_point* out) {
  return guard([&] { fill(solve_lambda_zero(need(s, "spectrum")->value, m, tol_arg(tol, kSolverTolerance)), need(out, "out")); });
}

rr_status rr_solve_mu_star(const rr_spectrum* s, uint64_t n, double zeta, double mu, double tol,
                           rr_fixed_point* out) {
  return guard(
      [&] { fill(solve_mu_star(need(s, "spectrum")->value, n, zeta, mu, tol_arg(tol, kSolverTolerance)), need(out, "out")); });
}

rr_status rr_diagnostics_compute(const rr_spectrum* s, const rr_signal* sig, uint64_t n, double lambda,
                                 double eta, rr_diagnostics* out) {
  return guard([&] {
    fill(diagnostics(need(s, "spectrum")->value, need(sig, "signal")->value, n, lambda, eta),
         need(out, "out"));
  });
}

rr_status rr_suggest_lambda_range(const rr_spectrum* s, uint64_t n, double c_prime, double* low,
                                  double* high) {
  return guard([&] {
    const auto r = suggest_lambda_range(need(s, "spectrum")->value, n, c_prime);
    *need(low, "low") = r.low;
    *need(high, "high") = r.high;
  });
}

rr_status rr_effective_variance(const rr_spectrum* s, uint64_t n, double tau, double lambda,
                                double* out) {
  return guard([&] { *need(out, "out") = effective_variance(need(s, "spectrum")->value, n, tau, lambda); });
}

rr_status rr_effective_bias(const rr_spectrum* s, const rr_signal* sig, uint64_t n, double lambda,
                            double* out) {
  return guard([&] {
    *need(out, "out") =
        effective_bias(need(s, "spectrum")->value, need(sig, "signal")->value, n, lambda);
  });
}

rr_status rr_proposition_bounds(const rr_spectrum* s, const rr_signal* sig, uint64_t n, double tau,
                                double lambda, rr_bounds* out) {
  return guard([&] {
    fill(proposition_bounds(need(s, "spectrum")->value, need(sig, "signal")->value, n, tau, lambda),
         need(out, "out"));
  });
}

rr_status rr_risk_report_compute(const rr_spectrum* s, const rr_signal* sig, uint64_t n, double tau,
                                 double lambda, double eta, rr_risk_report* out) {
  return guard([&] {
    need(out, "out");
    const auto r =
        risk_report(need(s, "spectrum")->value, need(sig, "signal")->value, n, tau, lambda, eta);
    *out = {};
    out->lambda = r.lambda;
    out->lambda_star = r.lambda_star;
    out->v_n = r.v_n;
    out->b_n = r.b_n;
    out->r_n = r.r_n;
    out->regime = r.regime == Regime::Ridge            ? RR_REGIME_RIDGE
                  : r.regime == Regime::RidgelessOver ? RR_REGIME_RIDGELESS_OVER
                                                      : RR_REGIME_RIDGELESS_UNDER;
    fill(r.diagnostics, &out->diagnostics);
    out->has_bounds = r.bounds ? 1 : 0;
    if (r.bounds) fill(*r.bounds, &out->bounds);
  });
}

rr_status rr_population_resolvent(const rr_spectrum* s, const rr_signal* sig, double zeta, double mu,
                                  rr_resolvent_kind which, double* out) {
  return guard([&] {
    *need(out, "out") = population_resolvent(need(s, "spectrum")->value, need(sig, "signal")->value,
                                             zeta, mu, kind_arg(which));
  });
}

rr_status rr_variance_from_free_energy(const rr_spectrum* s, uint64_t n, double tau, double lambda,
                                       double rel_step, double* out) {
  return guard([&] {
    *need(out, "out") = variance_from_free_energy(need(s, "spectrum")->value, n, tau, lambda, rel_step);
  });
}

rr_status rr_bias_from_free_energy(const rr_spectrum* s, const rr_signal* sig, uint64_t n,
                                   double lambda, double rel_step, double* out) {
  return guard([&] {
    *need(out, "out") = bias_from_free_energy(need(s, "spectrum")->value, need(sig, "signal")->value,
                                              n, lambda, rel_step);
  });
}

rr_status rr_sequence_risk_given_omega(const rr_spectrum* s, const rr_signal* sig, uint64_t n,
                                       double lambda_star, double omega, rr_sequence_risk* out) {
  return guard([&] {
    fill(sequence_risk_given_omega(need(s, "spectrum")->value, need(sig, "signal")->value, n,
                                   lambda_star, omega),
         need(out, "out"));
  });
}

rr_status rr_solve_omega(const rr_spectrum* s, const rr_signal* sig, uint64_t n, double tau,
                         double lambda_star, rr_sequence_risk* out) {
  return guard([&] {
    fill(solve_omega(need(s, "spectrum")->value, need(sig, "signal")->value, n, tau, lambda_star),
         need(out, "out"));
  });
}

rr_status rr_cstar_case1(double nu, double alpha, double* out) {
  return guard([&] { *need(out, "out") = cstar_case1(nu, alpha); });
}

rr_status rr_g_series(double p, double q, int r, double t, double eps, double* out) {
  return guard([&] { *need(out, "out") = g_series(p, q, r, t, tol_arg(eps, 1e-15)); });
}

rr_status rr_predict_asymptotic(const rr_spectrum* s, double nu, uint64_t n, double tau,
                                const rr_signal* sig, rr_asymptotic* out) {
  return guard([&] {
    need(out, "out");
    const auto p =
        predict_asymptotic(need(s, "spectrum")->value, nu, n, tau, need(sig, "signal")->value);
    *out = {};
    out->kind = p.kind == AsymptoticCase::RegVarAlphaGt1   ? RR_CASE_REGVAR_ALPHA_GT1
                : p.kind == AsymptoticCase::RegVarAlphaEq1 ? RR_CASE_REGVAR_ALPHA_EQ1
                                                           : RR_CASE_GEOMETRIC_STEP;
    out->c_star = p.c_star;
    out->c_star_residual = p.c_star_residual;
    out->lambda = p.lambda;
    out->sigma_n = p.sigma_n;
    out->lambda_star_pred = p.lambda_star_pred;
    out->variance_pred = p.variance_pred;
    out->bias_pred = p.bias_pred;
    out->has_decay_ratio = p.decay_ratio ? 1 : 0;
    out->decay_ratio = p.decay_ratio.value_or(0.0);
    out->has_geometric = p.s_star ? 1 : 0;
    out->s_star = p.s_star.value_or(0);
    out->rho_star = p.rho_star.value_or(0.0);
  });
}

rr_status rr_design_sample(const rr_spectrum* s, uint64_t truncation_dim, uint64_t n,
                           rr_distribution distribution, uint64_t seed, rr_design** out) {
  return guard([&] {
    need(out, "out");
    const DesignConfig cfg{need(s, "spectrum")->value, truncation_dim, n,
                           distribution_arg(distribution), seed};
    *out = new rr_design{Design::sample(cfg)};
  });
}

rr_status rr_design_from_matrix(const double* x, uint64_t n, uint64_t dim, const double* sigma,
                                rr_design** out) {
  return guard([&] {
    need(out, "out");
    need(x, "x");
    need(sigma, "sigma");
    require(n >= 1 && dim >= 1, ErrorCode::InvalidArgument, "design must be nonempty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (uint64_t i = 0; i < n; ++i) {
      for (uint64_t j = 0; j < dim; ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i * dim + j];
      }
    }
    *out = new rr_design{Design::from_matrix(std::move(m), std::vector<double>(sigma, sigma + dim))};
  });
}

void rr_design_free(rr_design* d) { delete d; }

rr_status rr_design_shape(const rr_design* d, uint64_t* n, uint64_t* dim, uint64_t* rank) {
  return guard([&] {
    const auto& v = need(d, "design")->value;
    *need(n, "n") = v.n();
    *need(dim, "dim") = v.dim();
    *need(rank, "rank") = v.rank();
  });
}

rr_status rr_design_entries(const rr_design* d, double* buffer, size_t length) {
  return guard([&] {
    const auto& v = need(d, "design")->value;
    need(buffer, "buffer");
    require(length >= v.n() * v.dim(), ErrorCode::InvalidArgument, "buffer too small for the design");
    const auto& m = v.matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) buffer[i * m.cols() + j] = m(i, j);
    }
  });
}

rr_status rr_design_s_min(const rr_design* d, double* out) {
  return guard([&] { *need(out, "out") = need(d, "design")->value.s_min(); });
}

rr_status rr_design_truncation_diagnostic(const rr_design* d, double* out) {
  return guard([&] { *need(out, "out") = need(d, "design")->value.truncation_diagnostic(); });
}

rr_status rr_empirical_variance(const rr_design* d, double tau, double lambda, double* out) {
  return guard([&] { *need(out, "out") = empirical_variance(need(d, "design")->value, tau, lambda); });
}

rr_status rr_empirical_bias(const rr_design* d, const rr_signal* sig, double lambda, double* out) {
  return guard([&] {
    *need(out, "out") = empirical_bias(need(d, "design")->value, need(sig, "signal")->value, lambda);
  });
}

rr_status rr_empirical_resolvent_trace(const rr_design* d, const rr_signal* sig, double zeta,
                                       double mu, rr_resolvent_kind which, double* out) {
  return guard([&] {
    *need(out, "out") = empirical_resolvent_trace(need(d, "design")->value,
                                                  need(sig, "signal")->value, zeta, mu, kind_arg(which));
  });
}

rr_status rr_run_trials(const rr_spectrum* s, const rr_signal* sig, uint64_t truncation_dim,
                        uint64_t n, rr_distribution distribution, uint64_t seed, double tau,
                        const double* lambdas, size_t lambda_count, uint64_t trials,
                        unsigned threads, rr_trial_result* results, rr_aggregate* aggregates) {
  return guard([&] {
    need(lambdas, "lambdas");
    need(results, "results");
    need(aggregates, "aggregates");
    TrialSpec spec{DesignConfig{need(s, "spectrum")->value, truncation_dim, n,
                                distribution_arg(distribution), seed},
                   need(sig, "signal")->value,
                   tau,
                   std::vector<double>(lambdas, lambdas + lambda_count),
                   trials,
                   threads};
    const TrialRun run = run_trials(spec);
    for (size_t i = 0; i < run.results.size(); ++i) {
      const auto& r = run.results[i];
      results[i] = {r.trial, r.seed, r.lambda, r.v_x, r.b_x, r.s_min};
    }
    for (size_t k = 0; k < run.aggregates.size(); ++k) {
      const auto& a = run.aggregates[k];
      aggregates[k].lambda = a.lambda;
      aggregates[k].trials = a.trials;
      fill(a.v_x, &aggregates[k].v_x);
      fill(a.b_x, &aggregates[k].b_x);
      fill(a.s_min, &aggregates[k].s_min);
    }
  });
}

rr_status rr_config_normalize(const char* config_json, char** out_json) {
  return guard([&] {
    need(out_json, "out_json");
    *out_json = copy_string(serialize_config(parse_config(need(config_json, "config_json"))));
  });
}

rr_status rr_csv_header(const char* command, char** out) {
  return guard([&] {
    need(out, "out");
    *out = copy_string(csv_header(parse_command(need(command, "command"))));
  });
}

rr_status rr_run_experiment(const char* command, const char* config_json, int has_seed,
                            uint64_t seed, unsigned threads, char** csv, char** trial_csv) {
  return guard([&] {
    need(csv, "csv");
    const Command cmd = parse_command(need(command, "command"));
    const ExperimentConfig cfg = parse_config(need(config_json, "config_json"));
    RunOptions opts;
    if (has_seed) opts.seed = seed;
    opts.threads = threads;
    const CommandOutput result = run_command(cmd, cfg, opts);
    *csv = copy_string(result.csv);
    if (trial_csv) *trial_csv = copy_string(result.trial_csv);
  });
}

rr_status rr_run_experiment_file(const char* command, const char* config_path,
                                 const char* out_path, int has_seed, uint64_t seed,
                                 unsigned threads) {
  return guard([&] {
    const Command cmd = parse_command(need(command, "command"));
    const ExperimentConfig cfg = load_config(need(config_path, "config_path"));
    std::string target;
    if (out_path) {
      target = out_path;
    } else {
      require(cfg.output.has_value(), ErrorCode::Config,
              "config field 'output': required when no output path is given");
      target = *cfg.output;
    }
    RunOptions opts;
    if (has_seed) opts.seed = seed;
    opts.threads = threads;
    const CommandOutput result = run_command(cmd, cfg, opts);
    write_file(target, result.csv);
    if (cmd == Command::Simulate && cfg.trial_output) {
      // A relative trial path is placed next to the main CSV.
      std::filesystem::path trials(*cfg.trial_output);
      if (trials.is_relative()) trials = std::filesystem::path(target).parent_path() / trials;
      write_file(trials.string(), result.trial_csv);
    }
  });
}

}  // extern "C"
