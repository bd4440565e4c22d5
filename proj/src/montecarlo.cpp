#include "ridgerisk/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include "ridgerisk/error.hpp"

namespace ridgerisk {

namespace {

constexpr double kRankThreshold = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform on the open interval (0, 1) from the top 53 bits.
double open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

void check_lambda(double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::InvalidArgument,
          "lambda must be nonnegative and finite");
}

Eigen::VectorXd dense_signal(const Design& design, const Signal& signal) {
  require(signal.max_index() <= design.dim(), ErrorCode::OutOfRange,
          "signal index exceeds the simulated dimension");
  const auto v = signal.dense(design.dim());
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

const char* to_string(Distribution d) noexcept {
  switch (d) {
    case Distribution::Gaussian: return "gaussian";
    case Distribution::Rademacher: return "rademacher";
  }
  return "unknown";
}

double standard_entry(std::uint64_t seed, Index i, Index j, Index dim, Distribution d) {
  const std::uint64_t key = splitmix64(seed);
  const std::uint64_t counter = i * dim + j;
  const std::uint64_t h1 = splitmix64(key ^ splitmix64(2 * counter));
  if (d == Distribution::Rademacher) return (h1 >> 63) ? 1.0 : -1.0;
  const std::uint64_t h2 = splitmix64(key ^ splitmix64(2 * counter + 1));
  // Box-Muller, cosine branch only so every entry has its own pair of uniforms.
  const double radius = std::sqrt(-2.0 * std::log(open_unit(h1)));
  return radius * std::cos(2.0 * std::numbers::pi * open_unit(h2));
}

Design::Design(Eigen::MatrixXd x, Eigen::VectorXd sigma, double truncation)
    : x_(std::move(x)), sigma_(std::move(sigma)), truncation_(truncation) {
  decompose();
}

Design Design::sample(const DesignConfig& config) {
  require(config.n >= 1, ErrorCode::InvalidArgument, "sample size must be at least 1");
  require(config.truncation_dim >= 1, ErrorCode::InvalidArgument,
          "truncation dimension must be at least 1");
  const auto& spec = config.spectrum;
  require(!spec.dimension() || config.truncation_dim <= *spec.dimension(), ErrorCode::OutOfRange,
          "truncation dimension exceeds the spectrum dimension");
  const Index dim = config.truncation_dim;
  const auto values = spec.leading(dim);
  Eigen::VectorXd sigma(static_cast<Eigen::Index>(dim));
  for (Index j = 0; j < dim; ++j) sigma(static_cast<Eigen::Index>(j)) = values[j];

  double truncation = 0.0;
  if (!spec.dimension() || dim < *spec.dimension()) {
    truncation = spec.tail_sum(dim + 1) / spec.tail_sum(1);
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(config.n), static_cast<Eigen::Index>(dim));
  for (Index j = 0; j < dim; ++j) {
    const double scale = std::sqrt(values[j]);
    for (Index i = 0; i < config.n; ++i) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          scale * standard_entry(config.seed, i, j, dim, config.distribution);
    }
  }
  return Design(std::move(x), std::move(sigma), truncation);
}

Design Design::from_matrix(Eigen::MatrixXd x, std::vector<double> sigma) {
  require(x.cols() == static_cast<Eigen::Index>(sigma.size()), ErrorCode::InvalidArgument,
          "sigma must have one entry per design column");
  require(x.rows() >= 1 && x.cols() >= 1, ErrorCode::InvalidArgument, "design must be nonempty");
  require(x.allFinite(), ErrorCode::InvalidArgument, "design entries must be finite");
  for (double s : sigma) {
    require(s > 0.0 && std::isfinite(s), ErrorCode::InvalidArgument,
            "sigma entries must be positive");
  }
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(sigma.data(), x.cols());
  return Design(std::move(x), std::move(v), 0.0);
}

void Design::decompose() {
  const Eigen::Index n = x_.rows();
  const Eigen::Index dim = x_.cols();
  Eigen::VectorXd singular;
  Eigen::MatrixXd right;
  if (n >= dim) {
    // X = Q R with R square of size D; the right singular vectors of R are
    // those of X.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x_);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(dim).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullV);
    singular = svd.singularValues();
    right = svd.matrixV();
  } else {
    // X^T = Q R with Q of size D x n. From R = P S W^T, X = W S (Q P)^T.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x_.transpose());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU);
    singular = svd.singularValues();
    right = Eigen::MatrixXd::Zero(dim, n);
    right.topRows(n) = svd.matrixU();
    right.applyOnTheLeft(qr.householderQ());
  }
  const double nd = static_cast<double>(n);
  const Eigen::VectorXd eig = singular.array().square() / nd;
  Eigen::Index rank = 0;
  if (eig.size() && eig(0) > 0.0) {
    while (rank < eig.size() && eig(rank) > kRankThreshold * eig(0)) ++rank;
  }
  s_ = eig.head(rank);
  u_ = right.leftCols(rank);
  u_sigma_u_ = (u_.array().square().colwise() * sigma_.array()).colwise().sum().transpose();
}

double empirical_variance(const Design& design, double tau, double lambda) {
  require(tau >= 0.0 && std::isfinite(tau), ErrorCode::InvalidArgument,
          "noise level tau must be nonnegative");
  check_lambda(lambda);
  const auto& s = design.s_;
  const auto& w = design.u_sigma_u_;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    const double factor = lambda == 0.0 ? 1.0 / s(j) : s(j) / ((s(j) + lambda) * (s(j) + lambda));
    acc += factor * w(j);
  }
  return tau * tau * acc / static_cast<double>(design.n());
}

double empirical_bias(const Design& design, const Signal& signal, double lambda) {
  check_lambda(lambda);
  const Eigen::VectorXd beta = dense_signal(design, signal);
  const auto& s = design.sample_eigenvalues();
  const auto& u = design.right_vectors();
  if (lambda == 0.0 && design.rank() == design.dim()) return 0.0;
  Eigen::VectorXd coef = u.transpose() * beta;
  if (lambda > 0.0) coef.array() *= s.array() / (s.array() + lambda);
  const Eigen::VectorXd resid = beta - u * coef;
  return (resid.array().square() * design.sigma().array()).sum();
}

double empirical_resolvent_trace(const Design& design, const Signal& signal, double zeta,
                                 double mu, ResolventKind which) {
  require(zeta > 0.0 && std::isfinite(zeta) && std::isfinite(mu), ErrorCode::InvalidArgument,
          "empirical resolvent needs finite zeta > 0");
  const auto& x = design.matrix();
  const auto& sigma = design.sigma();
  const Eigen::ArrayXd a = zeta + mu * sigma.array();
  require((a > 0.0).all(), ErrorCode::InvalidArgument, "zeta + mu sigma_i must be positive");
  const Eigen::Index n = x.rows();
  const Eigen::Index dim = x.cols();
  Eigen::VectorXd beta;
  if (which == ResolventKind::SignalDyad) beta = dense_signal(design, signal);

  if (dim > n) {
    // (A + X^T X)^-1 = A^-1 - A^-1 X^T C^-1 X A^-1 with C = I + X A^-1 X^T.
    const Eigen::MatrixXd xa = x.array().rowwise() / a.transpose();
    Eigen::MatrixXd c = xa * x.transpose();
    c.diagonal().array() += 1.0;
    const Eigen::LLT<Eigen::MatrixXd> llt(c);
    require(llt.info() == Eigen::Success, ErrorCode::Internal, "capacitance matrix not positive");
    if (which == ResolventKind::Identity) {
      const Eigen::MatrixXd xs = xa.array().rowwise() * (sigma.array() / a).transpose();
      const Eigen::MatrixXd e = xs * x.transpose();
      return (sigma.array() / a).sum() - llt.solve(e).trace();
    }
    const Eigen::VectorXd g = xa * beta;
    return (beta.array().square() / a).sum() - g.dot(llt.solve(g));
  }

  Eigen::MatrixXd m = x.transpose() * x;
  m.diagonal().array() += a.matrix().array();
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  require(llt.info() == Eigen::Success, ErrorCode::Internal, "shifted Gram matrix not positive");
  if (which == ResolventKind::Identity) {
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    return (sigma.array() * inv.diagonal().array()).sum();
  }
  return beta.dot(llt.solve(beta));
}

double quantile(std::vector<double> values, double prob) {
  require(!values.empty(), ErrorCode::InvalidArgument, "quantile of an empty sample");
  require(prob >= 0.0 && prob <= 1.0, ErrorCode::InvalidArgument, "quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

Summary summarize(std::vector<double> values) {
  require(!values.empty(), ErrorCode::InvalidArgument, "summary of an empty sample");
  std::sort(values.begin(), values.end());
  Summary s;
  s.median = quantile(values, 0.5);
  s.q10 = quantile(values, 0.1);
  s.q90 = quantile(values, 0.9);
  // Summed in sorted order so the mean is independent of trial order.
  double acc = 0.0;
  for (double v : values) acc += v;
  s.mean = acc / static_cast<double>(values.size());
  return s;
}

AggregateResult aggregate(const std::vector<TrialResult>& results, double lambda) {
  std::vector<double> v;
  std::vector<double> b;
  std::vector<double> smin;
  for (const auto& r : results) {
    if (r.lambda != lambda) continue;
    v.push_back(r.v_x);
    b.push_back(r.b_x);
    smin.push_back(r.s_min);
  }
  require(!v.empty(), ErrorCode::InvalidArgument, "no trials carry the requested lambda");
  AggregateResult out;
  out.lambda = lambda;
  out.trials = v.size();
  out.v_x = summarize(std::move(v));
  out.b_x = summarize(std::move(b));
  out.s_min = summarize(std::move(smin));
  return out;
}

TrialRun run_trials(const TrialSpec& spec) {
  require(spec.trials >= 1, ErrorCode::InvalidArgument, "trials must be at least 1");
  require(!spec.lambdas.empty(), ErrorCode::InvalidArgument, "lambda list must be nonempty");
  require(spec.tau >= 0.0 && std::isfinite(spec.tau), ErrorCode::InvalidArgument,
          "noise level tau must be nonnegative");
  for (double l : spec.lambdas) check_lambda(l);
  {
    auto sorted = spec.lambdas;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            ErrorCode::InvalidArgument, "lambda list must not repeat values");
  }
  require(spec.signal.max_index() <= spec.design.truncation_dim, ErrorCode::OutOfRange,
          "signal index exceeds the truncation dimension");

  const std::size_t per_trial = spec.lambdas.size();
  TrialRun run;
  run.results.resize(static_cast<std::size_t>(spec.trials) * per_trial);
  std::vector<double> truncation(static_cast<std::size_t>(spec.trials), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(spec.trials));
  std::atomic<Index> next{0};

  auto worker = [&] {
    for (;;) {
      const Index t = next.fetch_add(1);
      if (t >= spec.trials) return;
      try {
        DesignConfig cfg = spec.design;
        cfg.seed = spec.design.seed + t;
        const Design design = Design::sample(cfg);
        truncation[t] = design.truncation_diagnostic();
        for (std::size_t k = 0; k < per_trial; ++k) {
          TrialResult& r = run.results[t * per_trial + k];
          r.trial = t;
          r.seed = cfg.seed;
          r.lambda = spec.lambdas[k];
          r.v_x = empirical_variance(design, spec.tau, r.lambda);
          r.b_x = empirical_bias(design, spec.signal, r.lambda);
          r.s_min = design.s_min();
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };

  const auto workers =
      static_cast<unsigned>(std::min<Index>(std::max(1u, spec.threads), spec.trials));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  run.truncation_diagnostic = truncation.front();
  run.aggregates.reserve(per_trial);
  for (double l : spec.lambdas) run.aggregates.push_back(aggregate(run.results, l));
  return run;
}

}  // namespace ridgerisk
