#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace thermosmc {

/// Natural domain of a single model coordinate.
enum class Support {
  real,           ///< identity map
  unit_interval,  ///< logistic map onto (0, 1)
  positive,       ///< exponential map onto (0, inf)
};

inline double softplus(double x) {
  // log(1 + e^x) without overflow for large |x|
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

namespace detail {

inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + ": non-finite component");
    }
  }
}

inline double to_support_scalar(Support s, double q) {
  switch (s) {
    case Support::unit_interval: return logistic(q);
    case Support::positive: return std::exp(q);
    case Support::real: break;
  }
  return q;
}

inline double from_support_scalar(Support s, double x) {
  switch (s) {
    case Support::unit_interval:
      if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("from_support: value outside (0, 1)");
      return logit(x);
    case Support::positive:
      if (!(x > 0.0)) throw std::invalid_argument("from_support: value not positive");
      return std::log(x);
    case Support::real: break;
  }
  return x;
}

// log |dx/dq| of the per-coordinate bijection
inline double log_jacobian_scalar(Support s, double q) {
  switch (s) {
    case Support::unit_interval: return -softplus(-q) - softplus(q);
    case Support::positive: return q;
    case Support::real: break;
  }
  return 0.0;
}

// d/dq log |dx/dq|
inline double log_jacobian_derivative_scalar(Support s, double q) {
  switch (s) {
    case Support::unit_interval: return 1.0 - 2.0 * logistic(q);
    case Support::positive: return 1.0;
    case Support::real: break;
  }
  return 0.0;
}

// dx/dq
inline double support_derivative_scalar(Support s, double q) {
  switch (s) {
    case Support::unit_interval: {
      const double p = logistic(q);
      return p * (1.0 - p);
    }
    case Support::positive: return std::exp(q);
    case Support::real: break;
  }
  return 1.0;
}

}  // namespace detail

/// A posterior expressed as a potential energy on unconstrained R^d.
///
/// The potential is V(q) = -ln P(x | X) - ln |J(q)| with x = to_support(q),
/// so running dynamics on q samples the posterior over x. Instances are
/// immutable once built and safe to share between threads.
class ModelSpec {
 public:
  using PotentialFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;

  ModelSpec(std::string name, std::vector<Support> supports, PotentialFn potential, GradientFn gradient,
            std::vector<std::string> param_names)
      : name_(std::move(name)),
        supports_(std::move(supports)),
        potential_(std::move(potential)),
        gradient_(std::move(gradient)),
        param_names_(std::move(param_names)) {
    if (supports_.empty()) throw std::invalid_argument("ModelSpec: dimension must be positive");
    if (param_names_.size() != supports_.size()) {
      throw std::invalid_argument("ModelSpec: need one parameter name per dimension");
    }
    if (!potential_ || !gradient_) throw std::invalid_argument("ModelSpec: potential and gradient required");
  }

  const std::string& name() const { return name_; }
  std::size_t dim() const { return supports_.size(); }
  const std::vector<Support>& supports() const { return supports_; }
  const std::vector<std::string>& param_names() const { return param_names_; }

  /// Ground-truth constrained parameters, when the data is synthetic.
  const std::optional<std::vector<double>>& truth() const { return truth_; }
  ModelSpec& set_truth(std::vector<double> truth) {
    if (truth.size() != dim()) throw std::invalid_argument("ModelSpec: truth has wrong dimension");
    truth_ = std::move(truth);
    return *this;
  }

  double potential(std::span<const double> q) const {
    check_size(q);
    return potential_(q);
  }

  void gradient(std::span<const double> q, std::span<double> out) const {
    check_size(q);
    if (out.size() != dim()) throw std::invalid_argument("gradient: output has wrong length");
    gradient_(q, out);
  }

  std::vector<double> gradient(std::span<const double> q) const {
    std::vector<double> g(dim());
    gradient(q, g);
    return g;
  }

  std::vector<double> to_support(std::span<const double> q) const {
    check_size(q);
    detail::require_finite(q, "to_support");
    std::vector<double> x(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) x[i] = detail::to_support_scalar(supports_[i], q[i]);
    return x;
  }

  /// Adds w * to_support(q) into acc without allocating.
  void accumulate_support(std::span<const double> q, double w, std::span<double> acc) const {
    for (std::size_t i = 0; i < q.size(); ++i) acc[i] += w * detail::to_support_scalar(supports_[i], q[i]);
  }

  std::vector<double> from_support(std::span<const double> x) const {
    check_size(x);
    std::vector<double> q(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) q[i] = detail::from_support_scalar(supports_[i], x[i]);
    return q;
  }

  /// ln |det d to_support / dq|
  double log_jacobian(std::span<const double> q) const {
    check_size(q);
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += detail::log_jacobian_scalar(supports_[i], q[i]);
    return s;
  }

 private:
  void check_size(std::span<const double> q) const {
    if (q.size() != dim()) {
      throw std::invalid_argument("model '" + name_ + "': expected " + std::to_string(dim()) +
                                  " coordinates, got " + std::to_string(q.size()));
    }
  }

  std::string name_;
  std::vector<Support> supports_;
  PotentialFn potential_;
  GradientFn gradient_;
  std::vector<std::string> param_names_;
  std::optional<std::vector<double>> truth_;
};

/// Builds a model from a log-posterior and its gradient over the constrained
/// space. The bijection and its log-Jacobian are composed in automatically.
/// Prefer a hand-written unconstrained potential when the constrained form
/// loses precision far from the origin.
inline ModelSpec from_constrained(std::string name, std::vector<Support> supports,
                                  std::function<double(std::span<const double>)> log_posterior,
                                  std::function<void(std::span<const double>, std::span<double>)> grad_log_posterior,
                                  std::vector<std::string> param_names) {
  auto sup = supports;
  auto potential = [sup, log_posterior](std::span<const double> q) {
    std::vector<double> x(q.size());
    double log_jac = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      x[i] = detail::to_support_scalar(sup[i], q[i]);
      log_jac += detail::log_jacobian_scalar(sup[i], q[i]);
    }
    return -log_posterior(x) - log_jac;
  };
  auto gradient = [sup, grad_log_posterior](std::span<const double> q, std::span<double> out) {
    std::vector<double> x(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) x[i] = detail::to_support_scalar(sup[i], q[i]);
    grad_log_posterior(x, out);
    for (std::size_t i = 0; i < q.size(); ++i) {
      out[i] = -out[i] * detail::support_derivative_scalar(sup[i], q[i]) -
               detail::log_jacobian_derivative_scalar(sup[i], q[i]);
    }
  };
  return ModelSpec(std::move(name), std::move(supports), std::move(potential), std::move(gradient),
                   std::move(param_names));
}

/// Largest per-coordinate deviation between the analytic gradient and a
/// central difference, |g - fd| / max(1, |g|).
inline double check_gradient(const ModelSpec& model, std::span<const double> q, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("check_gradient: step must be positive");
  detail::require_finite(q, "check_gradient");
  const auto analytic = model.gradient(q);
  std::vector<double> probe(q.begin(), q.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = model.potential(probe);
    probe[i] = orig - h;
    const double down = model.potential(probe);
    probe[i] = orig;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

}  // namespace thermosmc
