#include "ridgerisk/experiments.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ridgerisk/asymptotics.hpp"
#include "ridgerisk/effective_risk.hpp"
#include "ridgerisk/error.hpp"
#include "ridgerisk/fixed_point.hpp"

namespace ridgerisk {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kDefaultTruncationFactor = 20.0;

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  fail(ErrorCode::Config, "config field '" + field + "': " + what);
}

void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      config_error(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
    }
  }
}

double as_number(const Json& j, const std::string& field) {
  if (!j.is_number()) config_error(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(field, "must be finite");
  return v;
}

std::uint64_t as_unsigned(const Json& j, const std::string& field) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) config_error(field, "must be nonnegative");
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  config_error(field, "expected a nonnegative integer");
}

Index as_positive_index(const Json& j, const std::string& field) {
  const auto v = as_unsigned(j, field);
  if (v < 1) config_error(field, "must be at least 1");
  return v;
}

std::string as_string(const Json& j, const std::string& field) {
  if (!j.is_string()) config_error(field, "expected a string");
  return j.get<std::string>();
}

SpectrumSpec parse_spectrum(const Json& j) {
  if (!j.is_object()) config_error("spectrum", "expected an object");
  check_keys(j, "spectrum", {"family", "alpha", "p", "q", "values", "dimension", "scale"});
  SpectrumSpec s;
  if (!j.contains("family")) config_error("spectrum.family", "is required");
  s.family = as_string(j["family"], "spectrum.family");
  auto num = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key)) return std::nullopt;
    return as_number(j[key], std::string("spectrum.") + key);
  };
  s.alpha = num("alpha");
  s.p = num("p");
  s.q = num("q");
  s.scale = num("scale");
  if (j.contains("dimension") && !j["dimension"].is_null()) {
    s.dimension = as_positive_index(j["dimension"], "spectrum.dimension");
  }
  if (j.contains("values")) {
    if (!j["values"].is_array()) config_error("spectrum.values", "expected an array of numbers");
    for (const auto& v : j["values"]) s.values.push_back(as_number(v, "spectrum.values"));
  }

  const bool needs_alpha = s.family == "power_law" || s.family == "log_power_law";
  const bool step = s.family == "geometric_step";
  const bool expl = s.family == "explicit";
  if (!needs_alpha && !step && !expl) {
    config_error("spectrum.family",
                 "must be one of power_law, log_power_law, geometric_step, explicit");
  }
  if (needs_alpha != s.alpha.has_value()) {
    config_error("spectrum.alpha", needs_alpha ? "is required for this family"
                                               : "is only valid for power-law families");
  }
  if (step != (s.p.has_value() && s.q.has_value()) || (!step && (s.p || s.q))) {
    config_error(s.p || step ? "spectrum.p" : "spectrum.q",
                 step ? "p and q are required for geometric_step" : "only valid for geometric_step");
  }
  if (expl) {
    if (s.values.empty()) config_error("spectrum.values", "must be a nonempty array");
    if (s.dimension) config_error("spectrum.dimension", "is implied by the values of an explicit spectrum");
    if (s.scale) config_error("spectrum.scale", "is implied by the first explicit value");
  } else if (!s.values.empty()) {
    config_error("spectrum.values", "only valid for the explicit family");
  }
  return s;
}

SignalSpec parse_signal(const Json& j) {
  if (!j.is_object()) config_error("signal", "expected an object");
  check_keys(j, "signal", {"top_k_ones", "coefficients"});
  SignalSpec s;
  const bool top = j.contains("top_k_ones");
  const bool coef = j.contains("coefficients");
  if (top == coef) config_error("signal", "give exactly one of top_k_ones or coefficients");
  if (top) {
    s.top_k_ones = as_unsigned(j["top_k_ones"], "signal.top_k_ones");
  } else {
    const auto& arr = j["coefficients"];
    if (!arr.is_array()) config_error("signal.coefficients", "expected an array of [index, value] pairs");
    for (const auto& e : arr) {
      if (!e.is_array() || e.size() != 2) {
        config_error("signal.coefficients", "each entry must be an [index, value] pair");
      }
      s.coefficients.emplace_back(as_positive_index(e[0], "signal.coefficients"),
                                  as_number(e[1], "signal.coefficients"));
    }
  }
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(Index v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%" PRIu64, static_cast<std::uint64_t>(v));
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

class CsvRow {
 public:
  CsvRow& add(const std::string& s) {
    if (!first_) line_ += ',';
    line_ += s;
    first_ = false;
    return *this;
  }
  CsvRow& add(double v) { return add(fmt(v)); }
  CsvRow& add(Index v) { return add(fmt(v)); }
  CsvRow& add(const std::optional<double>& v) { return add(fmt(v)); }
  CsvRow& add_bool(bool b) { return add(std::string(b ? "1" : "0")); }
  std::string str() const { return line_ + "\n"; }

 private:
  std::string line_;
  bool first_ = true;
};

std::string join(const std::vector<const char*>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  return out;
}

const std::vector<const char*> kPredictColumns = {
    "schema_version", "command", "name", "n", "lambda", "regime", "lambda_star", "v_n", "b_n",
    "r_n", "kappa", "chi_n", "chi_n_prime", "rho", "c_sigma", "eta", "effective_rank", "k_star",
    "c_star", "v_bound", "b_bound", "sample_budget_check"};

const std::vector<const char*> kSimulateColumns = {
    "schema_version", "command", "name", "n", "lambda", "regime", "lambda_star", "v_n", "b_n",
    "r_n", "truncation_dim", "truncation_diagnostic", "v_n_truncated", "b_n_truncated", "trials",
    "v_x_median", "v_x_q10", "v_x_q90", "b_x_median", "b_x_q10", "b_x_q90", "r_x_median",
    "r_x_q10", "r_x_q90", "v_x_mean", "b_x_mean", "s_min_median"};

const std::vector<const char*> kAsymptoticsColumns = {
    "schema_version", "command", "name", "n", "case", "nu", "lambda", "c_star", "c_star_residual",
    "sigma_n", "lambda_star", "lambda_star_pred", "lambda_star_gap", "v_n", "variance_pred",
    "b_n", "bias_pred", "decay_ratio", "s_star", "rho_star"};

const std::vector<const char*> kTrialColumns = {"schema_version", "name", "n", "truncation_dim",
                                                "trial", "seed", "lambda", "v_x", "b_x", "s_min"};

CsvRow row_prefix(Command c, const ExperimentConfig& cfg, Index n) {
  CsvRow row;
  row.add(std::string(kCsvSchemaVersion)).add(std::string(to_string(c))).add(cfg.name).add(n);
  return row;
}

struct Built {
  Spectrum spectrum;
  Signal signal;
};

Built build(const ExperimentConfig& cfg) {
  Built b{cfg.spectrum.build(), cfg.signal.build()};
  b.signal.check_within(b.spectrum);
  return b;
}

}  // namespace

Spectrum SpectrumSpec::build() const {
  try {
    if (family == "explicit") return Spectrum::explicit_values(values);
    const double s = scale.value_or(1.0);
    if (family == "power_law") return Spectrum::power_law(*alpha, dimension, s);
    if (family == "log_power_law") return Spectrum::log_power_law(*alpha, dimension, s);
    if (family == "geometric_step") return Spectrum::geometric_step(*p, *q, dimension, s);
  } catch (const Error& e) {
    config_error("spectrum", e.what());
  }
  config_error("spectrum.family", "unsupported family '" + family + "'");
}

Signal SignalSpec::build() const {
  try {
    if (top_k_ones) return Signal::top_k_ones(*top_k_ones);
    return Signal::from_pairs(coefficients);
  } catch (const Error& e) {
    config_error("signal", e.what());
  }
}

std::vector<double> ExperimentConfig::lambdas() const {
  if (lambda_mode == LambdaMode::Ridgeless) return {0.0};
  return lambda;
}

Index ExperimentConfig::truncation_for(Index n_value, const Spectrum& spectrum) const {
  const auto d = spectrum.dimension();
  Index dim = 0;
  if (truncation_dim) {
    dim = *truncation_dim;
  } else if (truncation_factor || !d) {
    const double f = truncation_factor.value_or(kDefaultTruncationFactor);
    dim = static_cast<Index>(std::ceil(f * static_cast<double>(n_value)));
    if (d) dim = std::min(dim, *d);
  } else {
    dim = *d;
  }
  if (d && dim > *d) config_error("truncation_dim", "exceeds the spectrum dimension");
  return std::max<Index>(dim, 1);
}

ExperimentConfig parse_config(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail(ErrorCode::Config, "config must be a JSON object");
  check_keys(root, "",
             {"name", "spectrum", "signal", "n", "tau", "lambda", "trials", "seed",
              "truncation_dim", "truncation_factor", "eta", "distribution", "output",
              "trial_output", "asymptotics"});

  ExperimentConfig c;
  for (const char* key : {"name", "spectrum", "signal", "n", "tau", "lambda"}) {
    if (!root.contains(key)) config_error(key, "is required");
  }
  c.name = as_string(root["name"], "name");
  if (c.name.empty()) config_error("name", "must be nonempty");
  if (c.name.find_first_of(",\"\r\n") != std::string::npos) {
    config_error("name", "must not contain commas, quotes or line breaks");
  }
  c.spectrum = parse_spectrum(root["spectrum"]);
  c.signal = parse_signal(root["signal"]);

  const auto& n = root["n"];
  if (n.is_array()) {
    c.n_is_grid = true;
    if (n.empty()) config_error("n", "grid must be nonempty");
    for (const auto& v : n) c.n.push_back(as_positive_index(v, "n"));
  } else {
    c.n.push_back(as_positive_index(n, "n"));
  }

  c.tau = as_number(root["tau"], "tau");
  if (c.tau < 0.0) config_error("tau", "must be nonnegative");

  const auto& lam = root["lambda"];
  if (lam.is_string()) {
    if (lam.get<std::string>() != "ridgeless") {
      config_error("lambda", "the only keyword accepted is \"ridgeless\"");
    }
    c.lambda_mode = LambdaMode::Ridgeless;
  } else if (lam.is_array()) {
    c.lambda_mode = LambdaMode::Grid;
    if (lam.empty()) config_error("lambda", "grid must be nonempty");
    for (const auto& v : lam) c.lambda.push_back(as_number(v, "lambda"));
  } else {
    c.lambda_mode = LambdaMode::Scalar;
    c.lambda.push_back(as_number(lam, "lambda"));
  }
  for (double v : c.lambda) {
    if (v < 0.0) config_error("lambda", "values must be nonnegative");
  }
  {
    std::set<double> seen(c.lambda.begin(), c.lambda.end());
    if (seen.size() != c.lambda.size()) config_error("lambda", "grid values must be distinct");
  }
  if (c.n.size() > 1 && c.lambda.size() > 1) {
    config_error("lambda", "only one of the n grid and the lambda grid may vary");
  }

  if (root.contains("trials")) c.trials = as_positive_index(root["trials"], "trials");
  if (root.contains("seed")) c.seed = as_unsigned(root["seed"], "seed");
  if (root.contains("truncation_dim") && root.contains("truncation_factor")) {
    config_error("truncation_factor", "give either truncation_dim or truncation_factor");
  }
  if (root.contains("truncation_dim")) {
    c.truncation_dim = as_positive_index(root["truncation_dim"], "truncation_dim");
  }
  if (root.contains("truncation_factor")) {
    c.truncation_factor = as_number(root["truncation_factor"], "truncation_factor");
    if (!(*c.truncation_factor > 0.0)) config_error("truncation_factor", "must be positive");
  }
  if (root.contains("eta")) {
    c.eta = as_number(root["eta"], "eta");
    if (!(c.eta > 0.0 && c.eta < 0.5)) config_error("eta", "must lie in (0, 1/2)");
  }
  if (root.contains("distribution")) {
    const auto d = as_string(root["distribution"], "distribution");
    if (d == "gaussian") {
      c.distribution = Distribution::Gaussian;
    } else if (d == "rademacher") {
      c.distribution = Distribution::Rademacher;
    } else {
      config_error("distribution", "must be gaussian or rademacher");
    }
  }
  if (root.contains("output")) c.output = as_string(root["output"], "output");
  if (root.contains("trial_output")) c.trial_output = as_string(root["trial_output"], "trial_output");
  if (root.contains("asymptotics")) {
    const auto& a = root["asymptotics"];
    if (!a.is_object()) config_error("asymptotics", "expected an object");
    check_keys(a, "asymptotics", {"nu"});
    if (!a.contains("nu")) config_error("asymptotics.nu", "is required");
    c.nu = as_number(a["nu"], "asymptotics.nu");
    if (*c.nu < 0.0) config_error("asymptotics.nu", "must be nonnegative");
  }

  // Surface spectrum and signal errors at parse time.
  build(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  Json root;
  root["name"] = c.name;
  Json spec;
  spec["family"] = c.spectrum.family;
  if (c.spectrum.alpha) spec["alpha"] = *c.spectrum.alpha;
  if (c.spectrum.p) spec["p"] = *c.spectrum.p;
  if (c.spectrum.q) spec["q"] = *c.spectrum.q;
  if (!c.spectrum.values.empty()) spec["values"] = c.spectrum.values;
  if (c.spectrum.dimension) spec["dimension"] = *c.spectrum.dimension;
  if (c.spectrum.scale) spec["scale"] = *c.spectrum.scale;
  root["spectrum"] = spec;
  Json sig;
  if (c.signal.top_k_ones) {
    sig["top_k_ones"] = *c.signal.top_k_ones;
  } else {
    Json arr = Json::array();
    for (const auto& [i, v] : c.signal.coefficients) arr.push_back(Json::array({i, v}));
    sig["coefficients"] = arr;
  }
  root["signal"] = sig;
  if (c.n_is_grid) {
    root["n"] = c.n;
  } else {
    root["n"] = c.n.front();
  }
  root["tau"] = c.tau;
  switch (c.lambda_mode) {
    case LambdaMode::Ridgeless: root["lambda"] = "ridgeless"; break;
    case LambdaMode::Grid: root["lambda"] = c.lambda; break;
    case LambdaMode::Scalar: root["lambda"] = c.lambda.front(); break;
  }
  root["trials"] = c.trials;
  root["seed"] = c.seed;
  if (c.truncation_dim) root["truncation_dim"] = *c.truncation_dim;
  if (c.truncation_factor) root["truncation_factor"] = *c.truncation_factor;
  root["eta"] = c.eta;
  root["distribution"] = to_string(c.distribution);
  if (c.output) root["output"] = *c.output;
  if (c.trial_output) root["trial_output"] = *c.trial_output;
  if (c.nu) root["asymptotics"] = Json{{"nu", *c.nu}};
  return root.dump(2) + "\n";
}

Command parse_command(std::string_view name) {
  if (name == "predict") return Command::Predict;
  if (name == "simulate") return Command::Simulate;
  if (name == "asymptotics") return Command::Asymptotics;
  fail(ErrorCode::InvalidArgument,
       "unknown command '" + std::string(name) + "' (expected predict, simulate or asymptotics)");
}

const char* to_string(Command c) noexcept {
  switch (c) {
    case Command::Predict: return "predict";
    case Command::Simulate: return "simulate";
    case Command::Asymptotics: return "asymptotics";
  }
  return "unknown";
}

std::string csv_header(Command c) {
  switch (c) {
    case Command::Predict: return join(kPredictColumns);
    case Command::Simulate: return join(kSimulateColumns);
    case Command::Asymptotics: return join(kAsymptoticsColumns);
  }
  return {};
}

std::string trial_csv_header() { return join(kTrialColumns); }

std::string cmd_predict(const ExperimentConfig& cfg) {
  const Built b = build(cfg);
  std::string out = csv_header(Command::Predict) + "\n";
  for (Index n : cfg.n) {
    for (double lambda : cfg.lambdas()) {
      const auto r = risk_report(b.spectrum, b.signal, n, cfg.tau, lambda, cfg.eta);
      const auto& d = r.diagnostics;
      auto row = row_prefix(Command::Predict, cfg, n);
      row.add(lambda).add(std::string(to_string(r.regime))).add(r.lambda_star).add(r.v_n);
      row.add(r.b_n).add(r.r_n).add(d.kappa).add(d.chi_n).add(d.chi_n_prime).add(d.rho);
      row.add(d.c_sigma).add(d.eta).add(d.effective_rank);
      if (r.bounds) {
        row.add(r.bounds->k_star).add(r.bounds->c_star).add(r.bounds->v_bound);
        row.add(r.bounds->b_bound).add_bool(r.bounds->sample_budget_check);
      } else {
        for (int i = 0; i < 5; ++i) row.add(std::string());
      }
      out += row.str();
    }
  }
  return out;
}

CommandOutput cmd_simulate(const ExperimentConfig& cfg, unsigned threads) {
  const Built b = build(cfg);
  const auto lambdas = cfg.lambdas();
  CommandOutput out;
  out.csv = csv_header(Command::Simulate) + "\n";
  out.trial_csv = trial_csv_header() + "\n";
  for (Index n : cfg.n) {
    const Index dim = cfg.truncation_for(n, b.spectrum);
    TrialSpec spec{DesignConfig{b.spectrum, dim, n, cfg.distribution, cfg.seed}, b.signal, cfg.tau,
                   lambdas, cfg.trials, threads};
    const TrialRun run = run_trials(spec);
    const bool cut = !b.spectrum.dimension() || dim < *b.spectrum.dimension();
    const std::optional<Spectrum> truncated =
        cut ? std::optional<Spectrum>(b.spectrum.truncated(dim)) : std::nullopt;

    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const double lambda = lambdas[k];
      const auto r = risk_report(b.spectrum, b.signal, n, cfg.tau, lambda, cfg.eta);
      std::optional<double> v_trunc;
      std::optional<double> b_trunc;
      if (!truncated) {
        v_trunc = r.v_n;
        b_trunc = r.b_n;
      } else {
        try {
          v_trunc = effective_variance(*truncated, n, cfg.tau, lambda);
          b_trunc = effective_bias(*truncated, b.signal, n, lambda);
        } catch (const Error&) {
          // The truncated problem can be critical (D == n) where no prediction exists.
        }
      }
      const auto& agg = run.aggregates[k];
      std::vector<double> risks;
      for (const auto& t : run.results) {
        if (t.lambda == lambda) risks.push_back(t.v_x + t.b_x);
      }
      const Summary rs = summarize(std::move(risks));

      auto row = row_prefix(Command::Simulate, cfg, n);
      row.add(lambda).add(std::string(to_string(r.regime))).add(r.lambda_star).add(r.v_n);
      row.add(r.b_n).add(r.r_n).add(dim).add(run.truncation_diagnostic).add(v_trunc).add(b_trunc);
      row.add(agg.trials).add(agg.v_x.median).add(agg.v_x.q10).add(agg.v_x.q90);
      row.add(agg.b_x.median).add(agg.b_x.q10).add(agg.b_x.q90);
      row.add(rs.median).add(rs.q10).add(rs.q90).add(agg.v_x.mean).add(agg.b_x.mean);
      row.add(agg.s_min.median);
      out.csv += row.str();
    }
    for (const auto& t : run.results) {
      CsvRow row;
      row.add(std::string(kCsvSchemaVersion)).add(cfg.name).add(n).add(dim).add(t.trial);
      row.add(Index{t.seed}).add(t.lambda).add(t.v_x).add(t.b_x).add(t.s_min);
      out.trial_csv += row.str();
    }
  }
  return out;
}

std::string cmd_asymptotics(const ExperimentConfig& cfg) {
  if (!cfg.nu) config_error("asymptotics.nu", "is required for the asymptotics command");
  const Built b = build(cfg);
  std::string out = csv_header(Command::Asymptotics) + "\n";
  for (Index n : cfg.n) {
    const auto pred = predict_asymptotic(b.spectrum, *cfg.nu, n, cfg.tau, b.signal);
    const double lambda_star = solve_lambda_star(b.spectrum, n, pred.lambda).value;
    const double v_n = effective_variance(b.spectrum, n, cfg.tau, pred.lambda);
    const double b_n = effective_bias(b.spectrum, b.signal, n, pred.lambda);
    const double gap = std::abs(lambda_star - pred.lambda_star_pred) / pred.lambda_star_pred;

    auto row = row_prefix(Command::Asymptotics, cfg, n);
    row.add(std::string(to_string(pred.kind))).add(*cfg.nu).add(pred.lambda).add(pred.c_star);
    row.add(pred.c_star_residual).add(pred.sigma_n).add(lambda_star).add(pred.lambda_star_pred);
    row.add(gap).add(v_n).add(pred.variance_pred).add(b_n).add(pred.bias_pred);
    row.add(pred.decay_ratio);
    row.add(pred.s_star ? fmt(static_cast<Index>(*pred.s_star)) : std::string());
    row.add(pred.rho_star);
    out += row.str();
  }
  return out;
}

CommandOutput run_command(Command command, const ExperimentConfig& config,
                          const RunOptions& options) {
  ExperimentConfig cfg = config;
  if (options.seed) cfg.seed = *options.seed;
  switch (command) {
    case Command::Predict: return {cmd_predict(cfg), {}};
    case Command::Simulate: return cmd_simulate(cfg, std::max(1u, options.threads));
    case Command::Asymptotics: return {cmd_asymptotics(cfg), {}};
  }
  fail(ErrorCode::Internal, "unhandled command");
}

unsigned default_threads() {
  const char* env = std::getenv("RIDGERISK_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) return 1;
  return static_cast<unsigned>(v);
}

}  // namespace ridgerisk
