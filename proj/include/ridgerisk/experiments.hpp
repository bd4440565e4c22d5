#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ridgerisk/montecarlo.hpp"
#include "ridgerisk/signal.hpp"
#include "ridgerisk/spectrum.hpp"

namespace ridgerisk {

/// Spectrum as written in a config file. Values are kept exactly as read so a
/// config survives parse -> serialize -> parse unchanged.
struct SpectrumSpec {
  std::string family;  // power_law, log_power_law, geometric_step, explicit
  std::optional<double> alpha;
  std::optional<double> p;
  std::optional<double> q;
  std::vector<double> values;
  std::optional<Index> dimension;
  std::optional<double> scale;

  Spectrum build() const;
  bool operator==(const SpectrumSpec&) const = default;
};

struct SignalSpec {
  std::optional<Index> top_k_ones;
  std::vector<std::pair<Index, double>> coefficients;

  Signal build() const;
  bool operator==(const SignalSpec&) const = default;
};

enum class LambdaMode { Scalar, Grid, Ridgeless };

struct ExperimentConfig {
  std::string name;
  SpectrumSpec spectrum;
  SignalSpec signal;
  std::vector<Index> n;
  bool n_is_grid = false;
  double tau = 0.0;
  LambdaMode lambda_mode = LambdaMode::Ridgeless;
  std::vector<double> lambda;
  Index trials = 1;
  std::uint64_t seed = 0;
  std::optional<Index> truncation_dim;
  std::optional<double> truncation_factor;
  double eta = 0.1;
  Distribution distribution = Distribution::Gaussian;
  std::optional<std::string> output;
  std::optional<std::string> trial_output;
  std::optional<double> nu;

  /// Lambda values to evaluate (a single 0 for ridgeless).
  std::vector<double> lambdas() const;
  /// D used to simulate sample size n.
  Index truncation_for(Index n, const Spectrum& spectrum) const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws Error(Config) naming the offending field.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

enum class Command { Predict, Simulate, Asymptotics };

Command parse_command(std::string_view name);
const char* to_string(Command c) noexcept;

inline constexpr const char* kCsvSchemaVersion = "1";

/// Header row (without the trailing newline) for a command's main CSV.
std::string csv_header(Command c);
std::string trial_csv_header();

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  unsigned threads = 1;
};

struct CommandOutput {
  std::string csv;
  /// Per-trial rows; simulate only, empty otherwise.
  std::string trial_csv;
};

CommandOutput run_command(Command command, const ExperimentConfig& config,
                          const RunOptions& options = {});

std::string cmd_predict(const ExperimentConfig& config);
CommandOutput cmd_simulate(const ExperimentConfig& config, unsigned threads = 1);
std::string cmd_asymptotics(const ExperimentConfig& config);

/// Thread count from RIDGERISK_THREADS, or 1 when unset or malformed.
unsigned default_threads();

}  // namespace ridgerisk
