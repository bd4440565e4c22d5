#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ridgerisk/error.hpp"
#include "ridgerisk/experiments.hpp"

using namespace ridgerisk;

namespace {

const std::string kConfigDir = RIDGERISK_CONFIG_DIR;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    FAIL("no column " << name);
    return 0;
  }
  double num(std::size_t row, const std::string& name) const { return std::stod(rows[row][col(name)]); }
  const std::string& str(std::size_t row, const std::string& name) const { return rows[row][col(name)]; }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  t.header = split(line);
  while (std::getline(in, line)) {
    t.rows.push_back(split(line));
    REQUIRE(t.rows.back().size() == t.header.size());
  }
  return t;
}

std::string config_error_message(const std::string& json) {
  try {
    parse_config(json);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    return e.what();
  }
  FAIL("config was accepted: " << json);
  return {};
}

std::string with(const std::string& extra) {
  return R"({"name":"t","spectrum":{"family":"power_law","alpha":2.0},"signal":{"top_k_ones":5},)"
         R"("n":[20,40],"tau":0.5,"lambda":"ridgeless")" +
         extra + "}";
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("shipped configs round-trip") {
  for (const char* name :
       {"ridgeless_power_law", "ridgeless_log_power_law", "lambda_sweep_power_law", "lambda_sweep_log_power_law",
        "simulate_power_law", "simulate_log_power_law", "asymptotics_power_law", "asymptotics_log_power_law",
        "asymptotics_geometric_step"}) {
    const auto cfg = load_config(kConfigDir + "/" + name + ".json");
    const auto text = serialize_config(cfg);
    CHECK(parse_config(text) == cfg);
    CHECK(serialize_config(parse_config(text)) == text);
  }
  const auto sim = load_config(kConfigDir + "/simulate_power_law.json");
  CHECK(sim.trials == 20);
  CHECK(sim.seed == 20240501u);
  CHECK(sim.n == std::vector<Index>{100, 200, 300, 400, 500});
  CHECK(sim.truncation_for(300, sim.spectrum.build()) == 6000);
  const auto sweep = load_config(kConfigDir + "/lambda_sweep_power_law.json");
  CHECK(sweep.lambda_mode == LambdaMode::Grid);
  CHECK_FALSE(sweep.n_is_grid);
  CHECK(sweep.lambdas().size() == 11);

  // Explicit spectra and coefficient signals survive too.
  const auto e = parse_config(
      R"({"name":"e","spectrum":{"family":"explicit","values":[1.0,0.5,0.125]},)"
      R"("signal":{"coefficients":[[1,0.5],[3,-2.0]]},"n":10,"tau":1,"lambda":0.01,)"
      R"("distribution":"rademacher","truncation_dim":3,"eta":0.2})");
  CHECK(parse_config(serialize_config(e)) == e);
  CHECK(e.truncation_for(10, e.spectrum.build()) == 3);
  CHECK(e.distribution == Distribution::Rademacher);
  CHECK(e.lambda_mode == LambdaMode::Scalar);
  const auto iso = parse_config(R"({"name":"i","spectrum":{"family":"power_law","alpha":2,"dimension":30},)"
                                R"("signal":{"top_k_ones":3},"n":[10],"tau":1,"lambda":"ridgeless"})");
  CHECK(iso.truncation_for(10, iso.spectrum.build()) == 30);
}

TEST_CASE("config errors name the field") {
  CHECK(config_error_message(with(R"(,"colour":1)")).find("colour") != std::string::npos);
  CHECK(config_error_message(R"({"name":"t","spectrum":{"family":"power_law","alpha":2.0},)"
                             R"("signal":{"top_k_ones":5},"n":[],"tau":0.5,"lambda":"ridgeless"})")
            .find("'n'") != std::string::npos);
  CHECK(config_error_message(with(R"(,"trials":0)")).find("'trials'") != std::string::npos);
  CHECK(config_error_message(with(R"(,"eta":0.7)")).find("'eta'") != std::string::npos);
  CHECK(config_error_message(with(R"(,"distribution":"uniform")")).find("'distribution'") != std::string::npos);
  CHECK(config_error_message(with(R"(,"seed":-3)")).find("'seed'") != std::string::npos);
  CHECK(config_error_message(with(R"(,"asymptotics":{"nu":1,"x":2})")).find("asymptotics.x") !=
        std::string::npos);
  CHECK(config_error_message(R"({"name":"t","spectrum":{"family":"power_law"},"signal":{"top_k_ones":5},)"
                             R"("n":20,"tau":0.5,"lambda":0})")
            .find("spectrum.alpha") != std::string::npos);
  CHECK(config_error_message(R"({"name":"t","spectrum":{"family":"power_law","alpha":2},)"
                             R"("signal":{"top_k_ones":5},"n":[20,30],"tau":"big","lambda":0})")
            .find("'tau'") != std::string::npos);
  CHECK(config_error_message(R"({"name":"t","spectrum":{"family":"power_law","alpha":2},)"
                             R"("signal":{"top_k_ones":5},"n":[20,30],"tau":1,"lambda":[0.1,0.2]})")
            .find("'lambda'") != std::string::npos);
  CHECK(config_error_message(R"({"spectrum":{"family":"power_law","alpha":2},)"
                             R"("signal":{"top_k_ones":5},"n":20,"tau":1,"lambda":0})")
            .find("'name'") != std::string::npos);
  CHECK(config_error_message("{not json").find("JSON") != std::string::npos);
  CHECK_THROWS_AS(load_config(kConfigDir + "/does_not_exist.json"), Error);
}

TEST_CASE("CSV headers") {
  CHECK(std::string(kCsvSchemaVersion) == "1");
  CHECK(csv_header(Command::Predict) ==
        "schema_version,command,name,n,lambda,regime,lambda_star,v_n,b_n,r_n,kappa,chi_n,chi_n_prime,rho,"
        "c_sigma,eta,effective_rank,k_star,c_star,v_bound,b_bound,sample_budget_check");
  CHECK(csv_header(Command::Simulate) ==
        "schema_version,command,name,n,lambda,regime,lambda_star,v_n,b_n,r_n,truncation_dim,"
        "truncation_diagnostic,v_n_truncated,b_n_truncated,trials,v_x_median,v_x_q10,v_x_q90,b_x_median,"
        "b_x_q10,b_x_q90,r_x_median,r_x_q10,r_x_q90,v_x_mean,b_x_mean,s_min_median");
  CHECK(csv_header(Command::Asymptotics) ==
        "schema_version,command,name,n,case,nu,lambda,c_star,c_star_residual,sigma_n,lambda_star,"
        "lambda_star_pred,lambda_star_gap,v_n,variance_pred,b_n,bias_pred,decay_ratio,s_star,rho_star");
  CHECK(trial_csv_header() == "schema_version,name,n,truncation_dim,trial,seed,lambda,v_x,b_x,s_min");
  CHECK(parse_command("simulate") == Command::Simulate);
  CHECK_THROWS_AS(parse_command("fit"), Error);
}

TEST_CASE("predict on the lambda grids") {
  for (const char* name : {"lambda_sweep_power_law", "lambda_sweep_log_power_law"}) {
    const auto t = parse_csv(cmd_predict(load_config(kConfigDir + "/" + name + ".json")));
    REQUIRE(t.rows.size() == 11);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      CHECK(t.str(i, "schema_version") == "1");
      CHECK(t.str(i, "command") == "predict");
      CHECK(t.str(i, "regime") == "ridge");
      CHECK(t.num(i, "r_n") == doctest::Approx(t.num(i, "v_n") + t.num(i, "b_n")).epsilon(1e-15));
      CHECK(t.num(i, "v_bound") >= t.num(i, "v_n"));
      CHECK(t.num(i, "b_bound") >= t.num(i, "b_n"));
      if (i > 0) {
        CHECK(t.num(i, "lambda") > t.num(i - 1, "lambda"));
        CHECK(t.num(i, "lambda_star") > t.num(i - 1, "lambda_star"));
        CHECK(t.num(i, "v_n") < t.num(i - 1, "v_n"));
        CHECK(t.num(i, "b_n") > t.num(i - 1, "b_n"));
      }
    }
  }
  // Ridgeless n grid: the log power law variance decreases, the power law one levels off.
  const auto m2 = parse_csv(cmd_predict(load_config(kConfigDir + "/ridgeless_log_power_law.json")));
  for (std::size_t i = 1; i < m2.rows.size(); ++i) CHECK(m2.num(i, "v_n") < m2.num(i - 1, "v_n"));
  const auto m1 = parse_csv(cmd_predict(load_config(kConfigDir + "/ridgeless_power_law.json")));
  CHECK(m1.str(0, "regime") == "ridgeless_over");
  CHECK(m1.str(0, "kappa").empty());
  const std::size_t last = m1.rows.size() - 1;
  CHECK(std::abs(m1.num(last, "v_n") - m1.num(last - 1, "v_n")) / m1.num(last, "v_n") < 0.05);
}

TEST_CASE("asymptotics command") {
  const auto c1 = parse_csv(cmd_asymptotics(load_config(kConfigDir + "/asymptotics_power_law.json")));
  for (std::size_t i = 0; i < c1.rows.size(); ++i) {
    CHECK(c1.str(i, "case") == "regvar_alpha_gt1");
    CHECK(c1.num(i, "c_star") == doctest::Approx(4.23105333511899).epsilon(1e-12));
    if (i > 0) CHECK(c1.num(i, "lambda_star_gap") < c1.num(i - 1, "lambda_star_gap"));
  }
  const auto c2 = parse_csv(cmd_asymptotics(load_config(kConfigDir + "/asymptotics_log_power_law.json")));
  for (std::size_t i = 0; i < c2.rows.size(); ++i) {
    CHECK(c2.str(i, "case") == "regvar_alpha_eq1");
    CHECK(c2.num(i, "c_star") == 2.0);
    CHECK(c2.str(i, "s_star").empty());
    if (i > 0) CHECK(c2.num(i, "lambda_star_gap") < c2.num(i - 1, "lambda_star_gap"));
  }
  const auto c3 = parse_csv(cmd_asymptotics(load_config(kConfigDir + "/asymptotics_geometric_step.json")));
  for (std::size_t i = 0; i < c3.rows.size(); ++i) {
    CHECK(c3.str(i, "case") == "geometric_step");
    CHECK(std::abs(c3.num(i, "c_star_residual")) <= 1e-12);
    CHECK_FALSE(c3.str(i, "rho_star").empty());
  }
  CHECK(c3.num(0, "s_star") == 6.0);
  CHECK_THROWS_AS(cmd_asymptotics(parse_config(with(""))), Error);
}

TEST_CASE("simulate is reproducible") {
  const auto cfg = parse_config(with(R"(,"trials":1,"seed":9,"truncation_factor":5)"));
  const auto a = cmd_simulate(cfg);
  const auto b = cmd_simulate(cfg);
  CHECK(a.csv == b.csv);
  CHECK(a.trial_csv == b.trial_csv);
  const auto t = parse_csv(a.csv);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.num(0, "truncation_dim") == 100.0);
  CHECK(t.num(1, "truncation_dim") == 200.0);
  // With one trial every quantile is the trial value.
  CHECK(t.str(0, "v_x_median") == t.str(0, "v_x_q10"));
  const auto trials = parse_csv(a.trial_csv);
  REQUIRE(trials.rows.size() == 2);
  CHECK(trials.str(0, "v_x") == t.str(0, "v_x_median"));
  CHECK(trials.str(0, "seed") == "9");

  const auto many = parse_config(with(R"(,"trials":5,"seed":1,"truncation_factor":4)"));
  const auto one = run_command(Command::Simulate, many, {std::nullopt, 1});
  const auto three = run_command(Command::Simulate, many, {std::nullopt, 3});
  CHECK(one.csv == three.csv);
  CHECK(one.trial_csv == three.trial_csv);
  const auto reseeded = run_command(Command::Simulate, many, {std::uint64_t{2}, 1});
  CHECK(reseeded.csv != one.csv);
  CHECK(parse_csv(reseeded.trial_csv).str(0, "seed") == "2");
  CHECK(run_command(Command::Predict, many).csv == cmd_predict(many));
  CHECK(run_command(Command::Predict, many).trial_csv.empty());
}

TEST_CASE("simulated log power law variance decreases in n") {
  const auto cfg = parse_config(
      R"({"name":"m2","spectrum":{"family":"log_power_law","alpha":3.0},"signal":{"top_k_ones":20},)"
      R"("n":[50,100,200],"tau":0.2,"lambda":"ridgeless","trials":10,"seed":3,"truncation_factor":20})");
  const auto t = parse_csv(cmd_simulate(cfg).csv);
  REQUIRE(t.rows.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(t.num(i, "v_x_median") < t.num(i - 1, "v_x_median"));
    CHECK(t.num(i, "v_n") < t.num(i - 1, "v_n"));
  }
}

TEST_CASE("default thread count") {
  unsetenv("RIDGERISK_THREADS");
  CHECK(default_threads() == 1u);
  setenv("RIDGERISK_THREADS", "3", 1);
  CHECK(default_threads() == 3u);
  setenv("RIDGERISK_THREADS", "lots", 1);
  CHECK(default_threads() == 1u);
  unsetenv("RIDGERISK_THREADS");
}

}  // TEST_SUITE
