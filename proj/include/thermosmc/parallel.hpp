#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "thermosmc/ensemble.hpp"
#include "thermosmc/hmc.hpp"
#include "thermosmc/model.hpp"
#include "thermosmc/rng.hpp"

namespace thermosmc {

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

/// Contiguous balanced split of [0, N) across W workers.
struct ShardPlan {
  std::size_t n_particles = 0;
  std::size_t n_workers = 0;
  std::vector<IndexRange> ranges;
};

inline ShardPlan partition(std::size_t n, std::size_t workers) {
  if (n == 0) throw std::invalid_argument("partition: need at least one particle");
  if (workers == 0 || workers > n) throw std::invalid_argument("partition: worker count must lie in [1, N]");
  ShardPlan plan{n, workers, {}};
  const std::size_t base = n / workers;
  const std::size_t extra = n % workers;
  std::size_t start = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t len = base + (w < extra ? 1 : 0);
    plan.ranges.push_back({start, start + len});
    start += len;
  }
  return plan;
}

struct PropagationStats {
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
  std::uint64_t divergences = 0;
};

/// Runs `hmc_calls` kernel transitions on every particle. Particle i draws
/// only from the stream (root, propagate, iteration, i), so the outcome is
/// identical for every worker count. Workers write disjoint slots of a fresh
/// particle buffer that replaces the ensemble only once every worker has
/// succeeded; otherwise the first failure is rethrown and the ensemble is
/// left untouched.
inline PropagationStats propagate_shards(Ensemble& ensemble, const ShardPlan& plan, const ModelSpec& model,
                                         const KernelConfig& kernel, const StreamFactory& streams,
                                         int hmc_calls = 1) {
  if (plan.n_particles != ensemble.size()) throw std::invalid_argument("propagate_shards: plan does not match ensemble");
  if (hmc_calls < 1) throw std::invalid_argument("propagate_shards: need at least one kernel call");
  const double temperature = ensemble.temperature;
  const std::uint64_t iteration = ensemble.iteration;

  std::vector<PropagationStats> per_worker(plan.n_workers);
  std::vector<std::exception_ptr> errors(plan.n_workers);
  std::vector<Particle> updated(ensemble.size());

  auto work = [&](std::size_t w) {
    try {
      PropagationStats stats;
      const IndexRange r = plan.ranges[w];
      for (std::size_t i = r.begin; i < r.end; ++i) {
        const Particle& source = ensemble.particles[i];
        Engine rng = streams.stream(StreamPurpose::propagate, iteration, i);
        PhasePoint point{source.q, source.p};
        for (int c = 0; c < hmc_calls; ++c) {
          StepResult step = hmc_step(point, model, kernel, temperature, rng);
          ++stats.attempts;
          stats.accepted += step.accepted ? 1 : 0;
          stats.divergences += step.diverged ? 1 : 0;
          point = std::move(step.point);
        }
        Particle& out = updated[i];
        out.energy = hamiltonian(point, model, kernel);
        out.weight = source.weight;
        out.q = std::move(point.q);
        out.p = std::move(point.p);
      }
      per_worker[w] = stats;
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (plan.n_workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(plan.n_workers);
    for (std::size_t w = 0; w < plan.n_workers; ++w) threads.emplace_back(work, w);
  }  // join

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  ensemble.particles.swap(updated);
  PropagationStats total;
  for (const auto& s : per_worker) {
    total.attempts += s.attempts;
    total.accepted += s.accepted;
    total.divergences += s.divergences;
  }
  return total;
}

struct Reduction {
  double e_min = 0.0;
  std::vector<double> weighted_mean;  ///< constrained space
  double weight_sum = 0.0;            ///< sum of exp(-(E - e_min) / k_B T)
};

/// Sequential reduction in particle-index order, so the floating-point
/// result does not depend on how particles were sharded.
inline Reduction reduce_ensemble(std::span<const Particle> particles, const ModelSpec& model, double temperature,
                                 double k_b) {
  if (particles.empty()) throw std::invalid_argument("reduce_ensemble: empty ensemble");
  Reduction red;
  red.e_min = std::numeric_limits<double>::infinity();
  for (const auto& p : particles) red.e_min = std::min(red.e_min, p.energy);
  red.weighted_mean.assign(model.dim(), 0.0);
  const double kt = k_b * temperature;
  for (const auto& p : particles) {
    const double w = std::exp(-(p.energy - red.e_min) / kt);
    red.weight_sum += w;
    model.accumulate_support(p.q, w, red.weighted_mean);
  }
  for (double& m : red.weighted_mean) m /= red.weight_sum;
  return red;
}

}  // namespace thermosmc
