#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "thermosmc/ensemble.hpp"
#include "thermosmc/hmc.hpp"
#include "thermosmc/model.hpp"
#include "thermosmc/parallel.hpp"
#include "thermosmc/rng.hpp"

namespace thermosmc {

enum class ResampleScheme {
  top_multinomial,  ///< multinomial draws within the top-ceil(ESS) particles
  top_systematic,   ///< systematic draws within the same subset
};

struct SmcConfig {
  std::size_t n_particles = 1024;
  std::size_t n_iterations = 10;
  double temperature = 1.0;
  /// Resample when ESS < ess_threshold * N.
  double ess_threshold = 0.5;
  ResampleScheme scheme = ResampleScheme::top_multinomial;
  int hmc_calls = 1;
  std::size_t n_workers = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_particles == 0) throw std::invalid_argument("smc: need at least one particle");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw std::invalid_argument("smc: temperature must be positive");
    if (!(ess_threshold >= 0.0 && ess_threshold <= 1.0)) throw std::invalid_argument("smc: ESS threshold must lie in [0, 1]");
    if (hmc_calls < 1) throw std::invalid_argument("smc: need at least one kernel call per iteration");
    if (n_workers == 0) throw std::invalid_argument("smc: need at least one worker");
  }
};

/// Standard-normal positions, thermal momenta, uniform weights.
inline Ensemble init_ensemble(std::size_t n, const ModelSpec& model, double temperature, const KernelConfig& kernel,
                              const StreamFactory& streams) {
  if (n == 0) throw std::invalid_argument("init_ensemble: need at least one particle");
  if (!(temperature > 0.0)) throw std::invalid_argument("init_ensemble: temperature must be positive");
  kernel.validate(model.dim());
  Ensemble ens;
  ens.temperature = temperature;
  ens.k_b = kernel.k_b;
  ens.particles.resize(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    Engine rng = streams.stream(StreamPurpose::init, 0, i);
    Particle& part = ens.particles[i];
    part.q.resize(model.dim());
    for (double& x : part.q) x = normal(rng);
    part.p = sample_momentum(model.dim(), temperature, kernel, rng);
    part.energy = hamiltonian({part.q, part.p}, model, kernel);
    part.weight = 1.0 / static_cast<double>(n);
  }
  return ens;
}

/// Shifts all energies so the minimum is zero; returns the old minimum.
inline double renormalize_energies(Ensemble& ensemble) {
  if (ensemble.particles.empty()) throw std::invalid_argument("renormalize_energies: empty ensemble");
  double e_min = ensemble.particles.front().energy;
  for (const auto& p : ensemble.particles) e_min = std::min(e_min, p.energy);
  for (auto& p : ensemble.particles) p.energy -= e_min;
  return e_min;
}

/// Boltzmann weights exp(-E_i / k_B T), normalized. The exponent is taken
/// relative to the lowest energy so at least one term equals 1.
inline std::vector<double> weights_from_energies(std::span<const double> energies, double temperature, double k_b) {
  if (!(temperature > 0.0) || !(k_b > 0.0)) throw std::invalid_argument("weights_from_energies: T and k_B must be positive");
  if (energies.empty()) throw std::invalid_argument("weights_from_energies: no energies");
  double e_min = energies.front();
  for (double e : energies) {
    if (!std::isfinite(e)) throw std::invalid_argument("weights_from_energies: non-finite energy");
    e_min = std::min(e_min, e);
  }
  const double kt = k_b * temperature;
  std::vector<double> w(energies.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(-(energies[i] - e_min) / kt);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

/// (sum w)^2 / sum w^2
inline double effective_size(std::span<const double> weights) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("effective_size: weights must be finite and non-negative");
    sum += w;
    sum_sq += w * w;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("effective_size: weights sum to zero");
  return (sum * sum) / sum_sq;
}

namespace detail {

inline std::vector<std::size_t> draw_multinomial(std::span<const double> weights, std::size_t n, Engine& rng) {
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(rng);
  return out;
}

inline std::vector<std::size_t> draw_systematic(std::span<const double> weights, std::size_t n, Engine& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double step = total / static_cast<double>(n);
  double u = std::uniform_real_distribution<double>(0.0, step)(rng);
  std::vector<std::size_t> out(n);
  std::size_t j = 0;
  double cumulative = weights[0];
  for (std::size_t k = 0; k < n; ++k) {
    while (u > cumulative && j + 1 < weights.size()) cumulative += weights[++j];
    out[k] = j;
    u += step;
  }
  return out;
}

}  // namespace detail

/// Keeps the ceil(ESS) highest-weight particles, refills the ensemble with
/// weighted duplicates of them, then gives every particle a fresh thermal
/// momentum, weight 1/N and a recomputed energy.
inline void resample(Ensemble& ensemble, const ModelSpec& model, const KernelConfig& kernel, Engine& rng,
                     ResampleScheme scheme = ResampleScheme::top_multinomial) {
  const std::size_t n = ensemble.size();
  if (n == 0) throw std::invalid_argument("resample: empty ensemble");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = ensemble.particles[i].weight;
  const double ess = effective_size(w);
  const std::size_t keep = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(ess)), 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
  order.resize(keep);
  std::vector<double> subset_w(keep);
  for (std::size_t k = 0; k < keep; ++k) subset_w[k] = w[order[k]];

  const auto picks = scheme == ResampleScheme::top_systematic ? detail::draw_systematic(subset_w, n, rng)
                                                               : detail::draw_multinomial(subset_w, n, rng);

  std::vector<Particle> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    next[i].q = ensemble.particles[order[picks[i]]].q;
    next[i].p = sample_momentum(model.dim(), ensemble.temperature, kernel, rng);
    next[i].energy = hamiltonian({next[i].q, next[i].p}, model, kernel);
    next[i].weight = 1.0 / static_cast<double>(n);
  }
  ensemble.particles = std::move(next);
}

/// One SMC iteration: propagate, renormalize, average, ESS, resample.
inline TraceRecord smc_iterate(Ensemble& ensemble, const ModelSpec& model, const KernelConfig& kernel,
                               const SmcConfig& config, const StreamFactory& streams) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = ensemble.size();
  ++ensemble.iteration;

  const ShardPlan plan = partition(n, std::min(config.n_workers, n));
  const PropagationStats stats = propagate_shards(ensemble, plan, model, kernel, streams, config.hmc_calls);

  const Reduction red = reduce_ensemble(ensemble.particles, model, ensemble.temperature, ensemble.k_b);
  TraceRecord rec;
  rec.iteration = ensemble.iteration;
  rec.e_min = renormalize_energies(ensemble);
  rec.mean_params = red.weighted_mean;

  std::vector<double> energies(n);
  for (std::size_t i = 0; i < n; ++i) energies[i] = ensemble.particles[i].energy;
  const auto w = weights_from_energies(energies, ensemble.temperature, ensemble.k_b);
  for (std::size_t i = 0; i < n; ++i) ensemble.particles[i].weight = w[i];

  rec.ess = std::clamp(effective_size(w), 1.0, static_cast<double>(n));
  rec.resampled = rec.ess < config.ess_threshold * static_cast<double>(n);
  if (rec.resampled) {
    Engine rng = streams.stream(StreamPurpose::resample, ensemble.iteration, 0);
    resample(ensemble, model, kernel, rng, config.scheme);
  }
  rec.acceptance_rate = stats.attempts ? static_cast<double>(stats.accepted) / static_cast<double>(stats.attempts) : 0.0;
  rec.divergences = stats.divergences;
  rec.wall_time = std::chrono::steady_clock::now() - t0;
  return rec;
}

/// Energy-weighted average of the per-iteration means, using the stored
/// minimum energies as Boltzmann weights relative to their global minimum.
inline std::vector<double> weighted_estimate(std::span<const TraceRecord> trace, double temperature, double k_b) {
  if (trace.empty()) throw std::invalid_argument("weighted_estimate: empty trace");
  double e_ref = trace.front().e_min;
  for (const auto& r : trace) e_ref = std::min(e_ref, r.e_min);
  const double kt = k_b * temperature;
  std::vector<double> est(trace.front().mean_params.size(), 0.0);
  double total = 0.0;
  for (const auto& r : trace) {
    const double w = std::exp(-(r.e_min - e_ref) / kt);
    total += w;
    for (std::size_t j = 0; j < est.size(); ++j) est[j] += w * r.mean_params[j];
  }
  for (double& x : est) x /= total;
  return est;
}

struct SmcRun {
  std::vector<TraceRecord> trace;
  Ensemble final_ensemble;
};

/// Full driver: init from the root seed, then n_iterations of smc_iterate.
/// `on_record` is called after every iteration.
inline SmcRun run_smc(const ModelSpec& model, const KernelConfig& kernel, const SmcConfig& config,
                      const std::function<void(const TraceRecord&)>& on_record = {}) {
  config.validate();
  kernel.validate(model.dim());
  const StreamFactory streams(config.seed);
  SmcRun run;
  run.final_ensemble = init_ensemble(config.n_particles, model, config.temperature, kernel, streams);
  run.trace.reserve(config.n_iterations);
  for (std::size_t t = 0; t < config.n_iterations; ++t) {
    run.trace.push_back(smc_iterate(run.final_ensemble, model, kernel, config, streams));
    if (on_record) on_record(run.trace.back());
  }
  return run;
}

}  // namespace thermosmc
