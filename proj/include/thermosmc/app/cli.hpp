#pragma once

#include <cstdlib>
#include <exception>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "thermosmc/app/commands.hpp"
#include "thermosmc/app/config.hpp"
#include "thermosmc/app/data_io.hpp"

namespace thermosmc::app {

namespace detail {

struct FlagKey {
  const char* flag;
  const char* key;
  const char* help;
};

inline constexpr FlagKey kValueFlags[] = {
    {"--model", "model", "ct | irt | gaussian-toy"},
    {"--particles", "particles", "ensemble size N"},
    {"--iterations", "iterations", "number of SMC iterations"},
    {"--temperature", "temperature", "temperature T"},
    {"--kb", "kb", "Boltzmann constant"},
    {"--step-size", "step_size", "leapfrog step size"},
    {"--leapfrog", "leapfrog", "leapfrog steps per HMC call"},
    {"--mass", "mass", "particle mass"},
    {"--ess-threshold", "ess_threshold", "resample when ESS < threshold * N"},
    {"--resample-scheme", "resample_scheme", "multinomial | systematic"},
    {"--hmc-calls", "hmc_calls", "HMC kernel calls per SMC iteration"},
    {"--seed", "seed", "root seed"},
    {"--workers", "workers", "worker threads (overrides THERMOSMC_WORKERS)"},
    {"--out", "out", "output path"},
    {"--summary", "summary", "summary JSON path (default <out>.summary.json)"},
    {"--data", "data", "data file"},
    {"--data-seed", "data_seed", "seed for synthetic data"},
    {"--points", "points", "gradcheck: number of random points"},
    {"--fd-step", "fd_step", "gradcheck: finite-difference step"},
    {"--corrupt-gradient", "gradient_perturbation", "gradcheck: add this offset to every gradient component"},
    {"--bench-particles", "bench_particles", "bench: comma-separated particle counts"},
    {"--bench-workers", "bench_workers", "bench: comma-separated worker counts"},
};

inline constexpr FlagKey kBoolFlags[] = {
    {"--invert-momentum", "invert_momentum", "negate momentum after accepted proposals"},
    {"--record-timing", "record_timing", "write measured wall_ms into the trace"},
};

}  // namespace detail

/// Parses argv, resolves the configuration and dispatches the subcommand.
/// Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequential Monte Carlo with a thermal HMC kernel"};
  app.require_subcommand(1);

  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> value_opts;
  std::map<std::string, bool> bools;
  std::map<std::string, CLI::Option*> bool_opts;
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, CLI::App*>> subs;

  for (const char* name : {"run", "gradcheck", "bench", "generate"}) {
    const char* desc = std::string(name) == "run"         ? "run SMC inference and write a trace"
                       : std::string(name) == "gradcheck" ? "compare analytic and finite-difference gradients"
                       : std::string(name) == "bench"     ? "time a particle/worker sweep"
                                                          : "write a synthetic data file";
    CLI::App* sub = app.add_subcommand(name, desc);
    subs.emplace_back(name, sub);
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--set", sets, "override KEY=VALUE (repeatable)");
    for (const auto& f : detail::kValueFlags) {
      auto* opt = sub->add_option(f.flag, values[f.key], f.help);
      value_opts[std::string(name) + f.key] = opt;
    }
    for (const auto& f : detail::kBoolFlags) {
      auto* opt = sub->add_flag(f.flag, bools[f.key], f.help);
      bool_opts[std::string(name) + f.key] = opt;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }

  try {
    KeyValues kv = config_path.empty() ? KeyValues{} : load_key_values(config_path);
    bool workers_given = false;
    for (const auto& f : detail::kValueFlags) {
      if (value_opts[command + f.key]->count() > 0) {
        kv[f.key] = values[f.key];
        workers_given |= std::string(f.key) == "workers";
      }
    }
    for (const auto& f : detail::kBoolFlags) {
      if (bool_opts[command + f.key]->count() > 0) kv[f.key] = bools[f.key] ? "true" : "false";
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(s, "--set expects KEY=VALUE");
      const std::string key = detail::trim(s.substr(0, eq));
      kv[key] = detail::trim(s.substr(eq + 1));
      workers_given |= key == "workers";
    }
    if (!workers_given) {
      if (const char* env = std::getenv(kWorkersEnv); env != nullptr && *env != '\0') {
        const auto w = detail::parse_count("workers", env, 1);
        kv["workers"] = std::to_string(w);
      }
    }
    if (command == "generate" && !kv.count("out")) kv["out"] = "data.csv";

    const RunConfig config = build_run_config(kv);
    if (command == "run") return cmd_run(config, out);
    if (command == "gradcheck") return cmd_gradcheck(config, out);
    if (command == "bench") return cmd_bench(config, out);
    return cmd_generate(config, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
}

}  // namespace thermosmc::app
