#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermosmc/app/config.hpp"
#include "thermosmc/app/data_io.hpp"
#include "thermosmc/model.hpp"
#include "thermosmc/models.hpp"
#include "thermosmc/smc.hpp"

namespace thermosmc::app {

enum ExitCode : int { kSuccess = 0, kCheckFailed = 1, kUsageError = 2 };

/// Shortest text that round-trips a double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct BuiltModel {
  ModelSpec model;
  std::optional<CoinTossData> coin_toss;
};

inline BuiltModel build_model(const RunConfig& c) {
  if (c.model == "gaussian-toy") return {gaussian_toy(c.gaussian_dim), std::nullopt};

  if (c.model == "ct") {
    CoinTossData data;
    bool synthetic = true;
    if (!c.data.empty()) {
      std::ifstream in(c.data);
      if (!in) throw ConfigError("data", "cannot open '" + c.data + "'");
      try {
        data = read_ct_data(in);
      } catch (const DataFormatError& e) {
        throw ConfigError("data", e.what());
      }
      synthetic = false;
    } else if (c.ct_sample) {
      data = ct_generate({c.ct_p1, c.ct_p2}, c.ct_obs, c.data_seed);
    } else {
      data.n_obs = c.ct_obs;
      data.heads = {static_cast<int>(std::lround(c.ct_p1 * c.ct_obs)), static_cast<int>(std::lround(c.ct_p2 * c.ct_obs))};
      if (c.ct_heads1 >= 0) data.heads[0] = c.ct_heads1;
      if (c.ct_heads2 >= 0) data.heads[1] = c.ct_heads2;
      synthetic = c.ct_heads1 < 0 && c.ct_heads2 < 0;
    }
    BuiltModel b{ct_model(data), data};
    if (synthetic) b.model.set_truth({c.ct_p1, c.ct_p2});
    return b;
  }

  const IrtPriors priors{c.irt_theta_sd, c.irt_loga_sd, c.irt_b_sd};
  if (!c.data.empty()) {
    std::ifstream in(c.data);
    if (!in) throw ConfigError("data", "cannot open '" + c.data + "'");
    try {
      return {irt_model(read_irt_data(in), priors), std::nullopt};
    } catch (const DataFormatError& e) {
      throw ConfigError("data", e.what());
    }
  }
  const IrtProblem problem = irt_synthetic(c.irt_persons, c.irt_items, c.data_seed, priors);
  BuiltModel b{irt_model(problem.data, priors), std::nullopt};
  b.model.set_truth(problem.truth());
  return b;
}

// ---------------------------------------------------------------------------
// trace / summary
// ---------------------------------------------------------------------------

inline void write_trace_header(std::ostream& out, const ModelSpec& model) {
  out << "iteration,e_min,ess,resampled,acceptance_rate,wall_ms";
  for (const auto& name : model.param_names()) out << ",mean_" << name;
  out << '\n';
}

/// wall_ms is written as 0 unless timing is requested so that identical
/// runs produce identical files.
inline void write_trace_row(std::ostream& out, const TraceRecord& r, bool record_timing) {
  out << r.iteration << ',' << format_double(r.e_min) << ',' << format_double(r.ess) << ','
      << (r.resampled ? "true" : "false") << ',' << format_double(r.acceptance_rate) << ','
      << format_double(record_timing ? r.wall_time.count() : 0.0);
  for (double m : r.mean_params) out << ',' << format_double(m);
  out << '\n';
}

inline nlohmann::json summary_json(const RunConfig& c, const BuiltModel& built, const SmcRun& run,
                                   const std::vector<double>& estimate) {
  using nlohmann::json;
  const auto& names = built.model.param_names();
  json s;
  s["model"] = c.model;
  s["n_particles"] = c.particles;
  s["n_iterations"] = c.iterations;
  s["temperature"] = c.temperature;
  s["k_b"] = c.kb;
  s["step_size"] = c.step_size;
  s["leapfrog"] = c.leapfrog;
  s["ess_threshold"] = c.ess_threshold;
  s["invert_momentum"] = c.invert_momentum;
  s["seed"] = c.seed;

  json est = json::object();
  for (std::size_t j = 0; j < names.size(); ++j) est[names[j]] = estimate[j];
  s["estimate"] = est;

  if (const auto& truth = built.model.truth()) {
    json t = json::object();
    json err = json::object();
    double max_err = 0.0;
    for (std::size_t j = 0; j < names.size(); ++j) {
      t[names[j]] = (*truth)[j];
      const double e = std::abs(estimate[j] - (*truth)[j]);
      err[names[j]] = e;
      max_err = std::max(max_err, e);
    }
    s["truth"] = t;
    s["abs_error"] = err;
    s["max_abs_error"] = max_err;
  }
  if (built.coin_toss && built.coin_toss->n_obs > 0) {
    const auto map = ct_map(*built.coin_toss);
    s["map"] = {{"p1", map[0]}, {"p2", map[1]}};
    s["data"] = {{"n_obs", built.coin_toss->n_obs}, {"heads", {built.coin_toss->heads[0], built.coin_toss->heads[1]}}};
  }

  std::size_t resamples = 0;
  std::uint64_t divergences = 0;
  double acc = 0.0;
  for (const auto& r : run.trace) {
    resamples += r.resampled ? 1 : 0;
    divergences += r.divergences;
    acc += r.acceptance_rate;
  }
  s["resample_count"] = resamples;
  s["divergences"] = divergences;
  s["mean_acceptance_rate"] = acc / static_cast<double>(run.trace.size());
  s["final_ess"] = run.trace.back().ess;
  return s;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

/// Runs SMC, writes the trace CSV and the JSON summary, prints a short report.
inline int cmd_run(const RunConfig& c, std::ostream& report) {
  const BuiltModel built = build_model(c);
  const KernelConfig kernel = c.kernel();
  const SmcConfig smc = c.smc();

  std::ofstream trace(c.out, std::ios::binary);
  if (!trace) throw ConfigError("out", "cannot write '" + c.out + "'");
  write_trace_header(trace, built.model);
  const SmcRun run = run_smc(built.model, kernel, smc, [&](const TraceRecord& r) {
    write_trace_row(trace, r, c.record_timing);
  });
  trace.close();

  const auto estimate = weighted_estimate(run.trace, c.temperature, c.kb);
  const auto summary = summary_json(c, built, run, estimate);
  std::ofstream js(c.summary_path(), std::ios::binary);
  if (!js) throw ConfigError("summary", "cannot write '" + c.summary_path() + "'");
  js << summary.dump(2) << '\n';

  const auto& names = built.model.param_names();
  const auto& truth = built.model.truth();
  report << "model " << c.model << ", " << c.particles << " particles, " << c.iterations << " iterations, T="
         << c.temperature << ", workers=" << smc.n_workers << "\n";
  const std::size_t shown = std::min<std::size_t>(names.size(), 12);
  for (std::size_t j = 0; j < shown; ++j) {
    report << "  " << names[j] << " = " << format_double(estimate[j]);
    if (truth) report << "  (truth " << (*truth)[j] << ", |err| " << std::abs(estimate[j] - (*truth)[j]) << ")";
    report << '\n';
  }
  if (shown < names.size()) report << "  ... " << names.size() - shown << " more in " << c.summary_path() << '\n';
  report << "resamples " << summary["resample_count"].get<std::size_t>() << ", divergences "
         << summary["divergences"].get<std::uint64_t>() << ", mean acceptance "
         << summary["mean_acceptance_rate"].get<double>() << '\n';
  report << "trace: " << c.out << "\nsummary: " << c.summary_path() << '\n';
  return kSuccess;
}

struct GradcheckReport {
  double max_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> worst_point;
  std::size_t points = 0;
};

inline ModelSpec with_gradient_offset(const ModelSpec& m, double delta) {
  return ModelSpec(
      m.name(), m.supports(), [m](std::span<const double> q) { return m.potential(q); },
      [m, delta](std::span<const double> q, std::span<double> g) {
        m.gradient(q, g);
        for (double& x : g) x += delta;
      },
      m.param_names());
}

inline GradcheckReport gradcheck(const ModelSpec& model, std::size_t points, double h, std::uint64_t seed) {
  Engine rng = StreamFactory(seed).stream(StreamPurpose::diagnostics, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  GradcheckReport rep;
  rep.points = points;
  rep.max_error = -1.0;
  std::vector<double> q(model.dim());
  for (std::size_t k = 0; k < points; ++k) {
    for (double& x : q) x = normal(rng);
    const double err = check_gradient(model, q, h);
    if (err > rep.max_error) {
      rep.max_error = err;
      rep.worst_index = k;
      rep.worst_point = q;
    }
  }
  return rep;
}

inline constexpr double kGradcheckTolerance = 1e-5;

/// Exit 0 iff the worst relative gradient error is below 1e-5.
inline int cmd_gradcheck(const RunConfig& c, std::ostream& report) {
  BuiltModel built = build_model(c);
  const ModelSpec model =
      c.gradient_perturbation != 0.0 ? with_gradient_offset(built.model, c.gradient_perturbation) : built.model;
  const auto rep = gradcheck(model, c.points, c.fd_step, c.seed);
  const bool ok = rep.max_error < kGradcheckTolerance;
  report << "gradcheck model=" << c.model << " dim=" << model.dim() << " points=" << rep.points
         << " h=" << c.fd_step << '\n';
  report << "max_relative_error=" << format_double(rep.max_error) << " worst_point=" << rep.worst_index << '\n';
  report << "worst_q=";
  const std::size_t shown = std::min<std::size_t>(rep.worst_point.size(), 8);
  for (std::size_t j = 0; j < shown; ++j) report << (j ? "," : "") << format_double(rep.worst_point[j]);
  if (shown < rep.worst_point.size()) report << ",...";
  report << '\n' << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kSuccess : kCheckFailed;
}

struct BenchRow {
  std::size_t particles = 0;
  std::size_t workers = 0;
  double wall_ms = 0.0;
  double ms_per_particle = 0.0;
  double speedup = 1.0;
};

/// Times a full SMC run for every (N, W) pair. Speedup is t(W=1) / t(W) at
/// the same N; a W=1 baseline is timed even if absent from the sweep.
inline std::vector<BenchRow> bench_sweep(const RunConfig& c) {
  const BuiltModel built = build_model(c);
  const KernelConfig kernel = c.kernel();
  auto time_run = [&](std::size_t n, std::size_t w) {
    SmcConfig smc = c.smc();
    smc.n_particles = n;
    smc.n_workers = w;
    const auto t0 = std::chrono::steady_clock::now();
    (void)run_smc(built.model, kernel, smc);
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };
  std::vector<BenchRow> rows;
  for (std::size_t n : c.bench_particles) {
    std::map<std::size_t, double> times;
    for (std::size_t w : c.bench_workers) times[w] = time_run(n, w);
    if (!times.count(1)) times[1] = time_run(n, 1);
    for (std::size_t w : c.bench_workers) {
      BenchRow r;
      r.particles = n;
      r.workers = w;
      r.wall_ms = times[w];
      r.ms_per_particle = r.wall_ms / static_cast<double>(n);
      r.speedup = w == 1 ? 1.0 : times[1] / times[w];
      rows.push_back(r);
    }
  }
  return rows;
}

inline int cmd_bench(const RunConfig& c, std::ostream& table) {
  const auto rows = bench_sweep(c);
  table << "particles,workers,wall_ms,ms_per_particle,speedup\n";
  for (const auto& r : rows) {
    table << r.particles << ',' << r.workers << ',' << format_double(r.wall_ms) << ','
          << format_double(r.ms_per_particle) << ',' << format_double(r.speedup) << '\n';
  }
  return kSuccess;
}

/// Writes a synthetic data file for ct or irt to `out`.
inline int cmd_generate(const RunConfig& c, std::ostream& report) {
  if (c.model != "ct" && c.model != "irt") throw ConfigError("model", "generate supports ct and irt only");
  std::ofstream out(c.out, std::ios::binary);
  if (!out) throw ConfigError("out", "cannot write '" + c.out + "'");
  if (c.model == "ct") {
    const auto data = ct_generate({c.ct_p1, c.ct_p2}, c.ct_obs, c.data_seed);
    write_ct_data(out, data);
    report << "wrote coin toss data N=" << data.n_obs << " K=(" << data.heads[0] << "," << data.heads[1] << ") to "
           << c.out << '\n';
  } else {
    const auto problem = irt_synthetic(c.irt_persons, c.irt_items, c.data_seed,
                                       IrtPriors{c.irt_theta_sd, c.irt_loga_sd, c.irt_b_sd});
    write_irt_data(out, problem.data);
    report << "wrote IRT data P=" << problem.data.n_persons << " I=" << problem.data.n_items << " to " << c.out << '\n';
  }
  return kSuccess;
}

}  // namespace thermosmc::app
