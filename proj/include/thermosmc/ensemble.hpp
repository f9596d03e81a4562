#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

namespace thermosmc {

struct Particle {
  std::vector<double> q;  ///< unconstrained position
  std::vector<double> p;  ///< momentum
  double energy = 0.0;    ///< H(q, p), possibly shifted by renormalization
  double weight = 0.0;
};

struct Ensemble {
  std::vector<Particle> particles;
  double temperature = 1.0;
  double k_b = 1.0;
  std::uint64_t iteration = 0;

  std::size_t size() const { return particles.size(); }
};

/// Per-iteration record of the SMC loop.
struct TraceRecord {
  std::uint64_t iteration = 0;     ///< 1-based
  double e_min = 0.0;              ///< minimum energy before subtraction
  std::vector<double> mean_params; ///< weighted ensemble mean, constrained space
  double ess = 0.0;
  bool resampled = false;
  double acceptance_rate = 0.0;
  std::uint64_t divergences = 0;
  std::chrono::duration<double, std::milli> wall_time{0.0};
};

}  // namespace thermosmc
