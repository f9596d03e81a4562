#pragma once

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "thermosmc/hmc.hpp"
#include "thermosmc/smc.hpp"

namespace thermosmc::app {

/// Configuration problem tied to one key. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error("config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Environment variable consulted for the worker count when --workers is absent.
inline constexpr const char* kWorkersEnv = "THERMOSMC_WORKERS";

struct RunConfig {
  std::string model = "ct";
  std::size_t particles = 1024;
  std::size_t iterations = 10;
  double temperature = 1.0;
  double kb = 1.0;
  double step_size = 0.01;
  int leapfrog = 100;
  double mass = 1.0;
  double ess_threshold = 0.5;
  bool invert_momentum = false;
  ResampleScheme resample_scheme = ResampleScheme::top_multinomial;
  int hmc_calls = 1;
  std::uint64_t seed = 0;
  std::size_t workers = 0;  ///< 0 = hardware concurrency
  std::string out = "trace.csv";
  std::string summary;      ///< empty = <out>.summary.json
  bool record_timing = false;

  // model data
  std::string data;         ///< optional data file
  std::uint64_t data_seed = 1;
  int ct_obs = 40;
  double ct_p1 = 0.5;
  double ct_p2 = 0.75;
  int ct_heads1 = -1;       ///< -1 = round(p * N)
  int ct_heads2 = -1;
  bool ct_sample = false;   ///< draw heads binomially instead of rounding
  std::size_t irt_persons = 100;
  std::size_t irt_items = 20;
  double irt_theta_sd = 1.0;
  double irt_loga_sd = 1.0;
  double irt_b_sd = 1.0;
  std::size_t gaussian_dim = 2;

  // gradcheck
  std::size_t points = 100;
  double fd_step = 1e-5;
  double gradient_perturbation = 0.0;  ///< fault-injection hook

  // bench
  std::vector<std::size_t> bench_particles{2048, 65538};
  std::vector<std::size_t> bench_workers{1, 2};

  std::size_t resolved_workers() const {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
  }

  std::string summary_path() const { return summary.empty() ? out + ".summary.json" : summary; }

  KernelConfig kernel() const {
    KernelConfig k;
    k.step_size = step_size;
    k.n_leapfrog = leapfrog;
    k.mass = {mass};
    k.invert_momentum_on_accept = invert_momentum;
    k.k_b = kb;
    return k;
  }

  SmcConfig smc() const {
    SmcConfig c;
    c.n_particles = particles;
    c.n_iterations = iterations;
    c.temperature = temperature;
    c.ess_threshold = ess_threshold;
    c.scheme = resample_scheme;
    c.hmc_calls = hmc_calls;
    c.n_workers = resolved_workers();
    c.seed = seed;
    return c;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) {
    throw ConfigError(key, "expected a finite number, got '" + v + "'");
  }
  return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  }
  return x;
}

inline std::size_t parse_count(const std::string& key, const std::string& v, long long min_value) {
  const long long x = parse_integer(key, v);
  if (x < min_value) throw ConfigError(key, "must be at least " + std::to_string(min_value));
  return static_cast<std::size_t>(x);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

inline std::vector<std::size_t> parse_count_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_count(key, trim(item), 1));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list");
  return out;
}

inline double positive(const std::string& key, double x) {
  if (!(x > 0.0)) throw ConfigError(key, "must be positive");
  return x;
}

}  // namespace detail

using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines; '#' starts a comment. Duplicate keys are errors.
inline KeyValues parse_key_values(std::istream& in, const std::string& origin = "config") {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", origin + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second) throw ConfigError(key, "given twice in " + origin);
  }
  return kv;
}

inline KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  return parse_key_values(in, path);
}

/// Applies every key to a default RunConfig. Unknown keys are rejected.
inline RunConfig build_run_config(const KeyValues& kv) {
  using namespace detail;
  RunConfig c;
  for (const auto& [key, v] : kv) {
    if (key == "model") {
      if (v != "ct" && v != "irt" && v != "gaussian-toy") throw ConfigError(key, "expected ct, irt or gaussian-toy");
      c.model = v;
    } else if (key == "particles") {
      c.particles = parse_count(key, v, 1);
    } else if (key == "iterations") {
      c.iterations = parse_count(key, v, 1);
    } else if (key == "temperature") {
      c.temperature = positive(key, parse_double(key, v));
    } else if (key == "kb") {
      c.kb = positive(key, parse_double(key, v));
    } else if (key == "step_size") {
      c.step_size = positive(key, parse_double(key, v));
    } else if (key == "leapfrog") {
      c.leapfrog = static_cast<int>(parse_count(key, v, 1));
    } else if (key == "mass") {
      c.mass = positive(key, parse_double(key, v));
    } else if (key == "ess_threshold") {
      c.ess_threshold = parse_double(key, v);
      if (c.ess_threshold < 0.0 || c.ess_threshold > 1.0) throw ConfigError(key, "must lie in [0, 1]");
    } else if (key == "invert_momentum") {
      c.invert_momentum = parse_bool(key, v);
    } else if (key == "resample_scheme") {
      if (v == "multinomial") {
        c.resample_scheme = ResampleScheme::top_multinomial;
      } else if (v == "systematic") {
        c.resample_scheme = ResampleScheme::top_systematic;
      } else {
        throw ConfigError(key, "expected multinomial or systematic");
      }
    } else if (key == "hmc_calls") {
      c.hmc_calls = static_cast<int>(parse_count(key, v, 1));
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(parse_count(key, v, 0));
    } else if (key == "workers") {
      c.workers = parse_count(key, v, 1);
    } else if (key == "out") {
      if (v.empty()) throw ConfigError(key, "must not be empty");
      c.out = v;
    } else if (key == "summary") {
      c.summary = v;
    } else if (key == "record_timing") {
      c.record_timing = parse_bool(key, v);
    } else if (key == "data") {
      c.data = v;
    } else if (key == "data_seed") {
      c.data_seed = static_cast<std::uint64_t>(parse_count(key, v, 0));
    } else if (key == "ct_obs") {
      c.ct_obs = static_cast<int>(parse_count(key, v, 1));
    } else if (key == "ct_p1" || key == "ct_p2") {
      const double p = parse_double(key, v);
      if (!(p > 0.0 && p < 1.0)) throw ConfigError(key, "must lie in (0, 1)");
      (key == "ct_p1" ? c.ct_p1 : c.ct_p2) = p;
    } else if (key == "ct_heads1" || key == "ct_heads2") {
      (key == "ct_heads1" ? c.ct_heads1 : c.ct_heads2) = static_cast<int>(parse_count(key, v, 0));
    } else if (key == "ct_sample") {
      c.ct_sample = parse_bool(key, v);
    } else if (key == "irt_persons") {
      c.irt_persons = parse_count(key, v, 1);
    } else if (key == "irt_items") {
      c.irt_items = parse_count(key, v, 1);
    } else if (key == "irt_theta_sd") {
      c.irt_theta_sd = positive(key, parse_double(key, v));
    } else if (key == "irt_loga_sd") {
      c.irt_loga_sd = positive(key, parse_double(key, v));
    } else if (key == "irt_b_sd") {
      c.irt_b_sd = positive(key, parse_double(key, v));
    } else if (key == "gaussian_dim") {
      c.gaussian_dim = parse_count(key, v, 1);
    } else if (key == "points") {
      c.points = parse_count(key, v, 1);
    } else if (key == "fd_step") {
      c.fd_step = positive(key, parse_double(key, v));
    } else if (key == "gradient_perturbation") {
      c.gradient_perturbation = parse_double(key, v);
    } else if (key == "bench_particles") {
      c.bench_particles = parse_count_list(key, v);
    } else if (key == "bench_workers") {
      c.bench_workers = parse_count_list(key, v);
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  if (c.ct_heads1 > c.ct_obs) throw ConfigError("ct_heads1", "exceeds ct_obs");
  if (c.ct_heads2 > c.ct_obs) throw ConfigError("ct_heads2", "exceeds ct_obs");
  for (std::size_t w : c.bench_workers) {
    for (std::size_t n : c.bench_particles) {
      if (w > n) throw ConfigError("bench_workers", "worker count exceeds a particle count");
    }
  }
  return c;
}

}  // namespace thermosmc::app
