#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ridgerisk/effective_risk.hpp"
#include "ridgerisk/signal.hpp"
#include "ridgerisk/spectrum.hpp"

namespace ridgerisk {

enum class Distribution { Gaussian, Rademacher };

const char* to_string(Distribution d) noexcept;

struct DesignConfig {
  Spectrum spectrum;
  /// Number of simulated coordinates D; must not exceed a finite dimension.
  Index truncation_dim;
  Index n;
  Distribution distribution = Distribution::Gaussian;
  std::uint64_t seed = 0;
};

/// Standard entry z_ij of the design, derived from (seed, i, j) alone so the
/// draw does not depend on how work is scheduled.
double standard_entry(std::uint64_t seed, Index i, Index j, Index dim, Distribution d);

/// An n x D design X = Z Sigma^1/2 together with its thin singular
/// decomposition X = V S U^T, kept as sample eigenvalues s_j = S_j^2 / n of
/// X^T X / n and the D x r matrix U of right singular vectors (r = numerical
/// rank, threshold 1e-12 * s_1).
class Design {
 public:
  static Design sample(const DesignConfig& config);
  /// Wraps a given matrix; sigma holds the D diagonal entries of Sigma.
  static Design from_matrix(Eigen::MatrixXd x, std::vector<double> sigma);

  Index n() const { return static_cast<Index>(x_.rows()); }
  Index dim() const { return static_cast<Index>(x_.cols()); }
  Index rank() const { return static_cast<Index>(s_.size()); }
  const Eigen::MatrixXd& matrix() const { return x_; }
  const Eigen::VectorXd& sigma() const { return sigma_; }
  const Eigen::VectorXd& sample_eigenvalues() const { return s_; }
  const Eigen::MatrixXd& right_vectors() const { return u_; }
  /// Smallest nonzero sample eigenvalue; 0 for a zero design.
  double s_min() const { return s_.size() ? s_(s_.size() - 1) : 0.0; }
  /// tail_sum(D + 1) / tail_sum(1) of the sampled spectrum; 0 when nothing is cut.
  double truncation_diagnostic() const { return truncation_; }

 private:
  Design(Eigen::MatrixXd x, Eigen::VectorXd sigma, double truncation);
  void decompose();

  friend double empirical_variance(const Design&, double, double);

  Eigen::MatrixXd x_;
  Eigen::VectorXd sigma_;
  Eigen::VectorXd s_;
  Eigen::MatrixXd u_;
  Eigen::VectorXd u_sigma_u_;  // u_j^T Sigma u_j
  double truncation_ = 0.0;
};

/// (tau^2 / n) Tr Sigma Shat (Shat + lambda)^-2, with the pseudoinverse at lambda = 0.
double empirical_variance(const Design& design, double tau, double lambda);

/// lambda^2 <beta, (Shat + lambda)^-1 Sigma (Shat + lambda)^-1 beta>; at lambda = 0
/// the Sigma-norm of the part of beta orthogonal to the row space of X.
double empirical_bias(const Design& design, const Signal& signal, double lambda);

/// Tr Sigma^1/2 Q Sigma^1/2 (zeta I + mu Sigma + X^T X)^-1 for Q = I or
/// theta theta^T. Woodbury on the n x n capacitance matrix when D > n.
double empirical_resolvent_trace(const Design& design, const Signal& signal, double zeta,
                                 double mu, ResolventKind which);

struct TrialSpec {
  DesignConfig design;
  Signal signal;
  double tau = 0.0;
  std::vector<double> lambdas;
  Index trials = 1;
  unsigned threads = 1;
};

struct TrialResult {
  Index trial = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double v_x = 0.0;
  double b_x = 0.0;
  double s_min = 0.0;
};

struct Summary {
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  double mean = 0.0;
};

struct AggregateResult {
  double lambda = 0.0;
  Index trials = 0;
  Summary v_x;
  Summary b_x;
  Summary s_min;
};

struct TrialRun {
  /// Ordered by trial, then by position in the lambda list.
  std::vector<TrialResult> results;
  /// One entry per lambda, in list order.
  std::vector<AggregateResult> aggregates;
  double truncation_diagnostic = 0.0;
};

/// Linear-interpolation quantile of unsorted data (sorted internally).
double quantile(std::vector<double> values, double prob);
Summary summarize(std::vector<double> values);

/// Aggregates the results carrying the requested lambda; the input order is
/// irrelevant.
AggregateResult aggregate(const std::vector<TrialResult>& results, double lambda);

/// Trial t draws its design with seed = design.seed + t. Trials run on up to
/// `threads` workers and results do not depend on the worker count.
TrialRun run_trials(const TrialSpec& spec);

}  // namespace ridgerisk
