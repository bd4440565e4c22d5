// Command-line front end. Talks to the library only through the C interface.
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ridgerisk/ridgerisk.h"

int main(int argc, char** argv) {
  CLI::App app{"Deterministic-equivalent predictions and Monte Carlo checks for ridge regression risk"};
  app.set_version_flag("--version", std::string(rr_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = rr_default_threads();

  for (const char* name : {"predict", "simulate", "asymptotics"}) {
    const char* help = std::string(name) == "predict"    ? "Theoretical risk predictions on an n or lambda grid"
                       : std::string(name) == "simulate" ? "Monte Carlo trials alongside the theory"
                                                         : "Large-n predictions next to exact values";
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Experiment JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "CSV output path (defaults to the config 'output' field)");
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--threads", threads, "Worker threads for simulation (default: RIDGERISK_THREADS or 1)")
        ->check(CLI::Range(1u, 4096u));
  }

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  const rr_status status =
      rr_run_experiment_file(command.c_str(), config_path.c_str(), out_path.empty() ? nullptr : out_path.c_str(),
                             seed.has_value() ? 1 : 0, seed.value_or(0), threads);
  if (status != RR_OK) {
    std::fprintf(stderr, "ridgerisk %s: %s: %s\n", command.c_str(), rr_status_string(status), rr_last_error());
    return status == RR_ERR_CONFIG ? 2 : 1;
  }
  return 0;
}
