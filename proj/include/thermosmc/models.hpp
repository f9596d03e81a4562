#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "thermosmc/model.hpp"
#include "thermosmc/rng.hpp"

namespace thermosmc {

// ---------------------------------------------------------------------------
// Gaussian toy
// ---------------------------------------------------------------------------

/// V(q) = |q|^2 / 2 on R^d.
inline ModelSpec gaussian_toy(std::size_t dim = 1) {
  if (dim == 0) throw std::invalid_argument("gaussian_toy: dimension must be positive");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i));
  ModelSpec m(
      "gaussian-toy", std::vector<Support>(dim, Support::real),
      [](std::span<const double> q) {
        double s = 0.0;
        for (double x : q) s += x * x;
        return 0.5 * s;
      },
      [](std::span<const double> q, std::span<double> g) {
        for (std::size_t i = 0; i < q.size(); ++i) g[i] = q[i];
      },
      std::move(names));
  m.set_truth(std::vector<double>(dim, 0.0));
  return m;
}

// ---------------------------------------------------------------------------
// Coin toss: two independent coins, N tosses each, uniform prior on (0,1)^2
// ---------------------------------------------------------------------------

struct CoinTossData {
  int n_obs = 40;
  std::array<int, 2> heads{20, 30};

  void validate() const {
    if (n_obs < 0) throw std::invalid_argument("coin toss: n_obs must be non-negative");
    for (int k : heads) {
      if (k < 0 || k > n_obs) throw std::invalid_argument("coin toss: heads must lie in [0, n_obs]");
    }
  }
};

/// Constrained-space log posterior (up to a constant) at biases p.
inline double ct_log_posterior(const CoinTossData& data, std::span<const double> p) {
  double s = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double k = data.heads[i];
    const double tails = data.n_obs - data.heads[i];
    if (k > 0) s += k * std::log(p[i]);
    if (tails > 0) s += tails * std::log1p(-p[i]);
  }
  return s;
}

/// In logit coordinates the Jacobian p(1-p) merges with the binomial terms:
///   V(q) = sum_i (K_i + 1) softplus(-q_i) + (N - K_i + 1) softplus(q_i)
///   dV/dq_i = (N + 2) p_i - (K_i + 1)
/// which stays finite for every finite q.
inline ModelSpec ct_model(const CoinTossData& data) {
  data.validate();
  const double n = data.n_obs;
  const std::array<double, 2> k{static_cast<double>(data.heads[0]), static_cast<double>(data.heads[1])};
  return ModelSpec(
      "ct", {Support::unit_interval, Support::unit_interval},
      [n, k](std::span<const double> q) {
        double v = 0.0;
        for (std::size_t i = 0; i < 2; ++i) v += (k[i] + 1.0) * softplus(-q[i]) + (n - k[i] + 1.0) * softplus(q[i]);
        return v;
      },
      [n, k](std::span<const double> q, std::span<double> g) {
        for (std::size_t i = 0; i < 2; ++i) g[i] = (n + 2.0) * logistic(q[i]) - (k[i] + 1.0);
      },
      {"p1", "p2"});
}

/// Maximum a-posteriori biases K_i / N.
inline std::array<double, 2> ct_map(const CoinTossData& data) {
  data.validate();
  if (data.n_obs == 0) throw std::invalid_argument("ct_map: no observations");
  return {static_cast<double>(data.heads[0]) / data.n_obs, static_cast<double>(data.heads[1]) / data.n_obs};
}

inline CoinTossData ct_generate(std::array<double, 2> p_true, int n_obs, std::uint64_t seed) {
  if (n_obs <= 0) throw std::invalid_argument("ct_generate: n_obs must be positive");
  for (double p : p_true) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("ct_generate: biases must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  CoinTossData d;
  d.n_obs = n_obs;
  for (std::size_t i = 0; i < 2; ++i) d.heads[i] = std::binomial_distribution<int>(n_obs, p_true[i])(rng);
  return d;
}

// ---------------------------------------------------------------------------
// IRT 2PL
// ---------------------------------------------------------------------------

inline double irt_response_prob(double theta, double a, double b) { return logistic(a * (theta - b)); }

/// Person-major binary response matrix.
struct IrtData {
  std::size_t n_persons = 0;
  std::size_t n_items = 0;
  std::vector<std::uint8_t> responses;  // responses[p * n_items + i]

  int response(std::size_t person, std::size_t item) const { return responses[person * n_items + item]; }

  void validate() const {
    if (n_persons == 0 || n_items == 0) throw std::invalid_argument("irt: persons and items must be positive");
    if (responses.size() != n_persons * n_items) {
      throw std::invalid_argument("irt: response matrix has " + std::to_string(responses.size()) +
                                  " entries, expected " + std::to_string(n_persons * n_items));
    }
    for (auto r : responses) {
      if (r > 1) throw std::invalid_argument("irt: responses must be 0 or 1");
    }
  }
};

/// Zero-mean normal priors on theta, ln a and b.
struct IrtPriors {
  double theta_sd = 1.0;
  double log_a_sd = 1.0;
  double b_sd = 1.0;
};

/// Coordinate layout: [theta_0..theta_{P-1}, ln a_0..ln a_{I-1}, b_0..b_{I-1}].
struct IrtLayout {
  std::size_t n_persons;
  std::size_t n_items;
  std::size_t theta(std::size_t p) const { return p; }
  std::size_t log_a(std::size_t i) const { return n_persons + i; }
  std::size_t b(std::size_t i) const { return n_persons + n_items + i; }
  std::size_t dim() const { return n_persons + 2 * n_items; }
};

/// With u = ln a the log-normal prior on a and the exp-Jacobian combine into
/// a plain normal on u, so
///   V = sum_{p,i} [softplus(eta) - y eta] + theta^2/2s_t^2 + u^2/2s_u^2 + b^2/2s_b^2
/// with eta = e^u (theta - b).
inline ModelSpec irt_model(const IrtData& data, const IrtPriors& priors = {}) {
  data.validate();
  if (!(priors.theta_sd > 0.0 && priors.log_a_sd > 0.0 && priors.b_sd > 0.0)) {
    throw std::invalid_argument("irt: prior scales must be positive");
  }
  const IrtLayout lay{data.n_persons, data.n_items};
  std::vector<Support> supports(lay.dim(), Support::real);
  std::vector<std::string> names(lay.dim());
  for (std::size_t p = 0; p < lay.n_persons; ++p) names[lay.theta(p)] = "theta" + std::to_string(p);
  for (std::size_t i = 0; i < lay.n_items; ++i) {
    supports[lay.log_a(i)] = Support::positive;
    names[lay.log_a(i)] = "a" + std::to_string(i);
    names[lay.b(i)] = "b" + std::to_string(i);
  }

  auto potential = [data, priors, lay](std::span<const double> q) {
    const double inv_t = 1.0 / (priors.theta_sd * priors.theta_sd);
    const double inv_u = 1.0 / (priors.log_a_sd * priors.log_a_sd);
    const double inv_b = 1.0 / (priors.b_sd * priors.b_sd);
    std::vector<double> a(lay.n_items);
    for (std::size_t i = 0; i < lay.n_items; ++i) a[i] = std::exp(q[lay.log_a(i)]);
    double v = 0.0;
    for (std::size_t p = 0; p < lay.n_persons; ++p) {
      const double theta = q[lay.theta(p)];
      v += 0.5 * theta * theta * inv_t;
      for (std::size_t i = 0; i < lay.n_items; ++i) {
        const double eta = a[i] * (theta - q[lay.b(i)]);
        v += softplus(eta) - data.response(p, i) * eta;
      }
    }
    for (std::size_t i = 0; i < lay.n_items; ++i) {
      const double u = q[lay.log_a(i)];
      const double b = q[lay.b(i)];
      v += 0.5 * u * u * inv_u + 0.5 * b * b * inv_b;
    }
    return v;
  };

  auto gradient = [data, priors, lay](std::span<const double> q, std::span<double> g) {
    const double inv_t = 1.0 / (priors.theta_sd * priors.theta_sd);
    const double inv_u = 1.0 / (priors.log_a_sd * priors.log_a_sd);
    const double inv_b = 1.0 / (priors.b_sd * priors.b_sd);
    std::vector<double> a(lay.n_items);
    for (std::size_t i = 0; i < lay.n_items; ++i) {
      a[i] = std::exp(q[lay.log_a(i)]);
      g[lay.log_a(i)] = q[lay.log_a(i)] * inv_u;
      g[lay.b(i)] = q[lay.b(i)] * inv_b;
    }
    for (std::size_t p = 0; p < lay.n_persons; ++p) {
      const double theta = q[lay.theta(p)];
      double g_theta = theta * inv_t;
      for (std::size_t i = 0; i < lay.n_items; ++i) {
        const double eta = a[i] * (theta - q[lay.b(i)]);
        const double r = logistic(eta) - data.response(p, i);  // dV/deta
        g_theta += r * a[i];
        g[lay.log_a(i)] += r * eta;
        g[lay.b(i)] -= r * a[i];
      }
      g[lay.theta(p)] = g_theta;
    }
  };

  return ModelSpec("irt", std::move(supports), std::move(potential), std::move(gradient), std::move(names));
}

inline IrtData irt_generate(std::span<const double> theta, std::span<const double> a, std::span<const double> b,
                            std::uint64_t seed) {
  if (a.size() != b.size()) throw std::invalid_argument("irt_generate: a and b must have equal length");
  for (double ai : a) {
    if (!(ai > 0.0)) throw std::invalid_argument("irt_generate: discrimination must be positive");
  }
  IrtData d;
  d.n_persons = theta.size();
  d.n_items = a.size();
  d.responses.resize(d.n_persons * d.n_items);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t p = 0; p < d.n_persons; ++p) {
    for (std::size_t i = 0; i < d.n_items; ++i) {
      d.responses[p * d.n_items + i] = unif(rng) < irt_response_prob(theta[p], a[i], b[i]) ? 1 : 0;
    }
  }
  return d;
}

/// Synthetic problem: parameters drawn from the priors, then responses.
struct IrtProblem {
  std::vector<double> theta;
  std::vector<double> a;
  std::vector<double> b;
  IrtData data;

  /// Truth in the model's constrained coordinate layout.
  std::vector<double> truth() const {
    std::vector<double> t = theta;
    t.insert(t.end(), a.begin(), a.end());
    t.insert(t.end(), b.begin(), b.end());
    return t;
  }
};

inline IrtProblem irt_synthetic(std::size_t n_persons, std::size_t n_items, std::uint64_t seed,
                                const IrtPriors& priors = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  IrtProblem pr;
  for (std::size_t p = 0; p < n_persons; ++p) pr.theta.push_back(priors.theta_sd * normal(rng));
  for (std::size_t i = 0; i < n_items; ++i) pr.a.push_back(std::exp(priors.log_a_sd * normal(rng)));
  for (std::size_t i = 0; i < n_items; ++i) pr.b.push_back(priors.b_sd * normal(rng));
  pr.data = irt_generate(pr.theta, pr.a, pr.b, splitmix64(seed));
  return pr;
}

}  // namespace thermosmc
