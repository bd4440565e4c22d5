// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ridgerisk/asymptotics.hpp"
#include "ridgerisk/effective_risk.hpp"
#include "ridgerisk/error.hpp"
#include "ridgerisk/experiments.hpp"
#include "ridgerisk/fixed_point.hpp"
#include "ridgerisk/montecarlo.hpp"
#include "ridgerisk/sequence_model.hpp"

using namespace ridgerisk;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  double time_limit = INFINITY;  // seconds
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Instance {
  Spectrum spectrum;
  Signal signal;
  Index n;
  double tau;
  double lambda;
};

Spectrum random_spectrum(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (rng() % 5) {
    case 0: return Spectrum::power_law(1.2 + 2.0 * u(rng));
    case 1: return Spectrum::log_power_law(1.5 + 2.0 * u(rng));
    case 2: {
      const double p = 2.0 + 3.0 * u(rng);
      return Spectrum::geometric_step(p, 1.2 + (p - 1.4) * u(rng));
    }
    case 3: return Spectrum::power_law(1.5 + u(rng), 5000 + rng() % 5000);
    default: return Spectrum::power_law(2.0 + u(rng), std::nullopt, 0.5 + 2.0 * u(rng));
  }
}

Signal random_signal(std::mt19937_64& rng) {
  if (rng() % 2) return Signal::top_k_ones(1 + rng() % 150);
  std::normal_distribution<double> g;
  std::vector<Signal::Entry> e;
  for (Index j = 1; j <= 60; ++j)
    if (rng() % 4 == 0) e.push_back({j * (1 + rng() % 3), g(rng)});
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end(), [](auto& a, auto& b) { return a.first == b.first; }), e.end());
  if (e.empty()) e.push_back({1, 1.0});
  return Signal::from_pairs(e);
}

// Valid random instances: n in [50, 2000], lambda log-uniform in the suggested range.
std::vector<Instance> random_instances(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Instance> out;
  while (static_cast<int>(out.size()) < count) {
    auto s = random_spectrum(rng);
    const Index n = 50 + static_cast<Index>(std::floor(std::exp(u(rng) * std::log(1951.0)))) - 1;
    LambdaRange range;
    try {
      range = suggest_lambda_range(s, n, 10.0);
    } catch (const Error&) {
      continue;
    }
    const double lambda = range.low * std::pow(range.high / range.low, u(rng));
    out.push_back({std::move(s), random_signal(rng), n, 0.1 + u(rng), lambda});
  }
  return out;
}

Outcome sequence_equivalence() {
  Outcome o{true, "", 5.0};
  double worst = 0.0;
  for (const auto& in : random_instances(20, 101)) {
    const auto rep = risk_report(in.spectrum, in.signal, in.n, in.tau, in.lambda);
    const auto w = solve_omega(in.spectrum, in.signal, in.n, in.tau, rep.lambda_star);
    // The risk of the sequence model evaluated afresh at the solved noise level.
    const auto at = sequence_risk_given_omega(in.spectrum, in.signal, in.n, rep.lambda_star, std::sqrt(w.omega_sq));
    worst = std::max({worst, oracle::rel_err(w.risk, rep.r_n), oracle::rel_err(at.risk, rep.r_n),
                      oracle::rel_err(w.var_part, rep.v_n),
                      rep.b_n > 0.0 ? oracle::rel_err(w.bias_part, rep.b_n) : std::abs(w.bias_part)});
  }
  o.pass = worst <= 1e-10;
  o.detail = "max relative error " + fmt("%.2e", worst) + " over 20 instances";
  return o;
}

Outcome lambda_zero_sandwich() {
  Outcome o{true, "", 5.0};
  const std::vector<Spectrum> spectra = {
      Spectrum::power_law(1.5),         Spectrum::power_law(2.0),        Spectrum::power_law(3.0),
      Spectrum::log_power_law(2.0),     Spectrum::log_power_law(3.0),    Spectrum::geometric_step(3.0, 2.0),
      Spectrum::geometric_step(5.0, 3.0), Spectrum::power_law(2.5, 20000), Spectrum::power_law(2.0, 3000, 4.0),
      Spectrum::log_power_law(2.5, std::nullopt, 0.3)};
  int checked = 0;
  for (const auto& s : spectra) {
    for (double m : {10.0, 100.0, 1000.0}) {
      const double lz = solve_lambda_zero(s, m).value;
      const auto inv = s.inverse_effective_rank(m / 2.0);
      const Index twice = static_cast<Index>(2.0 * m);
      if (inv.empty || (s.dimension() && *s.dimension() <= twice)) {
        o.pass = false;
        o.detail = "instance outside the sandwich's preconditions";
        return o;
      }
      if (!(s.eigenvalue(twice) <= lz && lz <= s.eigenvalue(inv.index))) {
        o.pass = false;
        o.detail = "violated for m = " + fmt("%g", m);
        return o;
      }
      ++checked;
    }
  }
  o.detail = std::to_string(checked) + " (spectrum, m) pairs";
  return o;
}

Outcome mu_lambda_consistency() {
  Outcome o;
  double worst = 0.0;
  for (const auto& in : random_instances(20, 101)) {
    const double nd = static_cast<double>(in.n);
    const double star = solve_lambda_star(in.spectrum, in.n, in.lambda).value;
    const double mu = solve_mu_star(in.spectrum, in.n, nd * in.lambda, 0.0).value;
    worst = std::max(worst, oracle::rel_err(mu * star, nd * in.lambda));
  }
  o.pass = worst <= 1e-10;
  o.detail = "max relative error " + fmt("%.2e", worst);
  return o;
}

Outcome free_energy_identities() {
  Outcome o;
  double worst = 0.0;
  for (const auto& in : random_instances(10, 202)) {
    const double v = effective_variance(in.spectrum, in.n, in.tau, in.lambda);
    const double b = effective_bias(in.spectrum, in.signal, in.n, in.lambda);
    worst = std::max({worst, oracle::rel_err(variance_from_free_energy(in.spectrum, in.n, in.tau, in.lambda, 1e-4), v),
                      oracle::rel_err(bias_from_free_energy(in.spectrum, in.signal, in.n, in.lambda, 1e-4), b)});
  }
  o.pass = worst <= 1e-6;
  o.detail = "max relative error " + fmt("%.2e", worst) + " over 10 instances";
  return o;
}

Outcome underparameterized() {
  Outcome o{true, "", 30.0};
  const auto iso = Spectrum::isotropic(50);
  const double v0 = effective_variance(iso, 200, 1.0, 0.0);
  const bool exact = v0 == 50.0 / 150.0;
  TrialSpec spec{{iso, 50, 200, Distribution::Gaussian, 555}, Signal(), 1.0, {0.0}, 50, 1};
  const double mean = run_trials(spec).aggregates[0].v_x.mean;
  const double err = std::abs(mean - 1.0 / 3.0) * 3.0;
  o.pass = exact && err <= 0.10;
  o.detail = "V_n(0) = " + fmt("%.17g", v0) + ", mean v_x = " + fmt("%.5f", mean) + " (" +
             fmt("%.1f", 100.0 * err) + "% off)";
  return o;
}

ExperimentConfig simulation_config() {
  auto cfg = load_config(std::string(RIDGERISK_CONFIG_DIR) + "/simulate_power_law.json");
  cfg.n = {100, 300, 500};
  return cfg;
}

std::string simulate_single_csv;
std::string simulate_multi_csv;

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Csv parse_csv(const std::string& text) {
  Csv c;
  auto split = [](const std::string& line) {
    std::vector<std::string> out(1);
    for (char ch : line) {
      if (ch == ',') out.emplace_back();
      else out.back() += ch;
    }
    return out;
  };
  std::size_t start = 0;
  bool first = true;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    const auto line = text.substr(start, end - start);
    if (first) c.header = split(line); else c.rows.push_back(split(line));
    first = false;
    start = end == std::string::npos ? text.size() : end + 1;
  }
  return c;
}

double column(const Csv& c, std::size_t row, const std::string& name) {
  const auto it = std::find(c.header.begin(), c.header.end(), name);
  return std::stod(c.rows[row][static_cast<std::size_t>(it - c.header.begin())]);
}

Outcome simulation_agreement() {
  // Both runs have their own budgets checked below.
  Outcome o{true, "", 780.0};
  const auto cfg = simulation_config();
  const auto t0 = std::chrono::steady_clock::now();
  simulate_single_csv = cmd_simulate(cfg, 1).csv;
  const auto t1 = std::chrono::steady_clock::now();
  simulate_multi_csv = cmd_simulate(cfg, 4).csv;
  const auto t2 = std::chrono::steady_clock::now();
  const double single = std::chrono::duration<double>(t1 - t0).count();
  const double multi = std::chrono::duration<double>(t2 - t1).count();

  const auto table = parse_csv(simulate_single_csv);
  double worst_v = 0.0, worst_b = 0.0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    worst_v = std::max(worst_v, oracle::rel_err(column(table, i, "v_x_median"), column(table, i, "v_n")));
    worst_b = std::max(worst_b, oracle::rel_err(column(table, i, "b_x_median"), column(table, i, "b_n")));
  }
  o.pass = table.rows.size() == 3 && worst_v <= 0.15 && worst_b <= 0.15 && single < 600.0 && multi < 180.0;
  o.detail = "worst median gap v " + fmt("%.1f", 100 * worst_v) + "%, b " + fmt("%.1f", 100 * worst_b) +
             "%; 1 worker " + fmt("%.1f", single) + " s, 4 workers " + fmt("%.1f", multi) + " s";
  return o;
}

Outcome asymptotic_trends() {
  Outcome o{true, "", 60.0};
  const auto beta = Signal::top_k_ones(100);
  const auto pl = Spectrum::power_law(2.0);
  double prev = INFINITY, gap = 0.0;
  bool decreasing = true;
  for (Index n : {250u, 1000u, 4000u}) {
    const auto p = predict_case1(1.0, 2.0, n, 0.5, beta);
    const double star = solve_lambda_star(pl, n, p.lambda).value;
    gap = std::abs(star - p.lambda_star_pred) / p.lambda_star_pred;
    decreasing = decreasing && gap < prev;
    prev = gap;
  }
  const bool case1 = decreasing && gap <= 0.10;

  bool case2 = true;
  for (double alpha : {1.5, 2.0, 3.0})
    for (double nu : {0.0, 1.0, 2.5})
      case2 = case2 && predict_case2(nu, alpha, 1000, 0.2, beta).c_star == nu + 1.0 / (alpha - 1.0);

  bool case3 = true;
  double worst_res = 0.0;
  for (double p : {3.0, 5.0})
    for (double q : {1.5, 2.0, 2.5})
      for (Index n : {64u, 1000u, 20000u}) {
        const auto r = predict_case3(1.0, p, q, n, 0.5, beta);
        worst_res = std::max(worst_res, std::abs(r.c_star_residual));
        case3 = case3 && std::abs(r.c_star_residual) <= 1e-12 && *r.rho_star >= 1.0 / (q - 1.0) &&
                *r.rho_star < q / (q - 1.0);
      }
  o.pass = case1 && case2 && case3;
  o.detail = "case 1 gap at n=4000 " + fmt("%.2e", gap) + (decreasing ? " (decreasing)" : " (NOT decreasing)") +
             ", case 2 " + (case2 ? "exact" : "mismatch") + ", case 3 max residual " + fmt("%.1e", worst_res);
  return o;
}

Outcome dense_oracle() {
  Outcome o{true, "", 10.0};
  std::mt19937_64 rng(8080);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const int dim = 1 + static_cast<int>(rng() % 8);
    std::vector<double> sigma(dim);
    for (auto& s : sigma) s = unif(rng);
    std::sort(sigma.rbegin(), sigma.rend());
    Eigen::MatrixXd x(n, dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) x(i, j) = gauss(rng) * std::sqrt(sigma[j]);
    std::vector<Signal::Entry> entries;
    for (int j = 1; j <= dim; ++j) entries.push_back({static_cast<Index>(j), gauss(rng)});
    const auto beta = Signal::from_pairs(entries);
    const Eigen::VectorXd sig = Eigen::Map<const Eigen::VectorXd>(sigma.data(), dim);
    const auto dense = beta.dense(dim);
    const Eigen::VectorXd bvec = Eigen::Map<const Eigen::VectorXd>(dense.data(), dim);
    const auto design = Design::from_matrix(x, sigma);
    for (double lambda : {0.0, 0.01, 1.0}) {
      const auto ref = oracle::dense_empirical(x, sig, bvec, 0.7, lambda);
      worst = std::max(worst, oracle::rel_err(empirical_variance(design, 0.7, lambda), ref.variance));
      const double b = empirical_bias(design, beta, lambda);
      // Fully determined ridgeless fits have zero bias; compare absolutely there.
      worst = std::max(worst, ref.bias == 0.0 ? std::abs(b) / bvec.squaredNorm() : oracle::rel_err(b, ref.bias));
    }
    for (bool dyad : {false, true}) {
      const auto kind = dyad ? ResolventKind::SignalDyad : ResolventKind::Identity;
      worst = std::max(worst, oracle::rel_err(empirical_resolvent_trace(design, beta, 0.3, 0.4, kind),
                                              oracle::dense_resolvent(x, sig, bvec, 0.3, 0.4, dyad)));
    }
  }
  o.pass = worst <= 1e-8;
  o.detail = "max relative error " + fmt("%.2e", worst) + " over 200 instances";
  return o;
}

Outcome bounds_dominance() {
  Outcome o{true, "", 10.0};
  int held = 0;
  for (const auto& in : random_instances(30, 303)) {
    const auto r = risk_report(in.spectrum, in.signal, in.n, in.tau, in.lambda);
    const auto& b = *r.bounds;
    const auto tr = in.spectrum.tail_ranks(b.k_star);
    const double budget = static_cast<double>(b.k_star) + (std::isinf(tr.b_k) ? 0.0 : tr.r1 / tr.b_k);
    if (b.v_bound >= r.v_n && b.b_bound >= r.b_n && 2.0 * static_cast<double>(in.n) >= budget) ++held;
  }
  o.pass = held == 30;
  o.detail = std::to_string(held) + "/30 instances";
  return o;
}

Outcome determinism() {
  Outcome o;
  const std::string dir = RIDGERISK_CONFIG_DIR;
  bool same = !simulate_single_csv.empty() && simulate_single_csv == simulate_multi_csv;
  same = same && simulate_single_csv == cmd_simulate(simulation_config(), 2).csv;
  for (const char* name : {"ridgeless_power_law", "lambda_sweep_log_power_law", "asymptotics_geometric_step"}) {
    const auto cfg = load_config(dir + "/" + name + ".json");
    const Command c = std::string(name).rfind("asym", 0) == 0 ? Command::Asymptotics : Command::Predict;
    same = same && run_command(c, cfg).csv == run_command(c, cfg).csv;
  }
  o.pass = same;
  o.detail = same ? "simulate identical for 1, 2, 4 workers; predict and asymptotics repeat exactly"
                  : "outputs differ";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"sequence-model equivalence", sequence_equivalence},
      {"lambda_0 sandwich", lambda_zero_sandwich},
      {"mu_star / lambda_star consistency", mu_lambda_consistency},
      {"free-energy derivative identities", free_energy_identities},
      {"underparameterized ridgeless variance", underparameterized},
      {"simulated medians track the theory", simulation_agreement},
      {"large-n asymptotic trends", asymptotic_trends},
      {"dense oracle equivalence", dense_oracle},
      {"risk bound dominance", bounds_dominance},
      {"determinism", determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      out = run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > out.time_limit) {
      out.pass = false;
      out.detail += "; over the " + fmt("%g", out.time_limit) + " s budget";
    }
    if (!out.pass) ++failures;
    std::printf("%s %2d %s: %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", index, name, out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
