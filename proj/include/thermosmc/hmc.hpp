#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermosmc/model.hpp"

namespace thermosmc {

struct KernelConfig {
  double step_size = 0.01;
  int n_leapfrog = 100;
  /// Either one shared mass or one per coordinate.
  std::vector<double> mass{1.0};
  /// Negate the momentum after an accepted proposal. Off by default: on
  /// smooth potentials the inversion makes trajectories retrace themselves.
  bool invert_momentum_on_accept = false;
  /// Draw a fresh thermal momentum at the start of every step. Only switched
  /// off to study the raw dynamics.
  bool resample_momentum = true;
  double k_b = 1.0;

  double mass_at(std::size_t i) const { return mass.size() == 1 ? mass.front() : mass[i]; }

  void validate(std::size_t dim) const {
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw std::invalid_argument("kernel: step size must be positive");
    if (n_leapfrog < 1) throw std::invalid_argument("kernel: need at least one leapfrog step");
    if (!(k_b > 0.0) || !std::isfinite(k_b)) throw std::invalid_argument("kernel: k_B must be positive");
    if (mass.size() != 1 && mass.size() != dim) throw std::invalid_argument("kernel: mass must be shared or per-coordinate");
    for (double m : mass) {
      if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("kernel: mass must be positive");
    }
  }
};

struct PhasePoint {
  std::vector<double> q;
  std::vector<double> p;
};

/// Raised when the trajectory leaves the region where the gradient is finite.
class IntegrationDiverged : public std::runtime_error {
 public:
  explicit IntegrationDiverged(int step)
      : std::runtime_error("leapfrog diverged at step " + std::to_string(step)), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Thermal momentum: each component ~ Normal(0, m k_B T).
template <class Rng>
void sample_momentum(std::span<double> out, double temperature, const KernelConfig& config, Rng& rng) {
  if (temperature < 0.0 || !std::isfinite(temperature)) throw std::invalid_argument("sample_momentum: temperature must be >= 0");
  if (temperature == 0.0) {
    for (double& x : out) x = 0.0;
    return;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::sqrt(config.mass_at(i) * config.k_b * temperature) * normal(rng);
  }
}

template <class Rng>
std::vector<double> sample_momentum(std::size_t dim, double temperature, const KernelConfig& config, Rng& rng) {
  std::vector<double> p(dim);
  sample_momentum(std::span<double>(p), temperature, config, rng);
  return p;
}

inline double kinetic_energy(std::span<const double> p, const KernelConfig& config) {
  double k = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) k += p[i] * p[i] / (2.0 * config.mass_at(i));
  return k;
}

/// H(q, p) = |p|^2 / 2m + V(q)
inline double hamiltonian(const PhasePoint& point, const ModelSpec& model, const KernelConfig& config) {
  return kinetic_energy(point.p, config) + model.potential(point.q);
}

/// L velocity-Verlet steps (half kick, drift, half kick). The gradient at
/// the end of one step is reused for the first half kick of the next.
inline PhasePoint leapfrog(PhasePoint point, const ModelSpec& model, const KernelConfig& config) {
  const std::size_t d = model.dim();
  if (point.q.size() != d || point.p.size() != d) throw std::invalid_argument("leapfrog: phase point has wrong dimension");
  auto& q = point.q;
  auto& p = point.p;
  const double eps = config.step_size;
  std::vector<double> g(d);
  model.gradient(q, g);
  for (int step = 0; step < config.n_leapfrog; ++step) {
    for (std::size_t i = 0; i < d; ++i) p[i] -= 0.5 * eps * g[i];
    for (std::size_t i = 0; i < d; ++i) q[i] += eps * p[i] / config.mass_at(i);
    model.gradient(q, g);
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(g[i]) || !std::isfinite(q[i])) throw IntegrationDiverged(step);
      p[i] -= 0.5 * eps * g[i];
    }
  }
  return point;
}

/// Metropolis acceptance probability at temperature T.
inline double acceptance_probability(double delta_h, double temperature, double k_b) {
  if (delta_h <= 0.0) return 1.0;
  return std::exp(-delta_h / (k_b * temperature));
}

struct StepResult {
  PhasePoint point;
  bool accepted = false;
  bool diverged = false;
};

/// One HMC transition at temperature T. A rejected proposal keeps the prior
/// position together with the momentum the step started from.
template <class Rng>
StepResult hmc_step(const PhasePoint& start, const ModelSpec& model, const KernelConfig& config, double temperature,
                    Rng& rng) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw std::invalid_argument("hmc_step: temperature must be positive");
  PhasePoint current = start;
  if (config.resample_momentum) {
    current.p.resize(model.dim());
    sample_momentum(std::span<double>(current.p), temperature, config, rng);
  }
  const double h0 = hamiltonian(current, model, config);
  // the uniform is drawn unconditionally so stream consumption is the same
  // whether or not the trajectory diverges
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  StepResult result;
  PhasePoint proposal;
  try {
    proposal = leapfrog(current, model, config);
  } catch (const IntegrationDiverged&) {
    result.point = std::move(current);
    result.diverged = true;
    return result;
  }
  const double h1 = hamiltonian(proposal, model, config);
  const double delta_h = h1 - h0;
  if (!std::isfinite(h1) || std::abs(delta_h) > 1000.0 * config.k_b * temperature) {
    result.point = std::move(current);
    result.diverged = true;
    return result;
  }
  if (u < acceptance_probability(delta_h, temperature, config.k_b)) {
    if (config.invert_momentum_on_accept) {
      for (double& x : proposal.p) x = -x;
    }
    result.point = std::move(proposal);
    result.accepted = true;
  } else {
    result.point = std::move(current);
  }
  return result;
}

}  // namespace thermosmc
