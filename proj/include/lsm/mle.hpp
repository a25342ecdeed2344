#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lsm/common.hpp"
#include "lsm/model.hpp"

namespace lsm {

struct OptimizerConfig {
  double eta = 1.0;             // initial step size
  double rho = 0.5;             // backtracking factor
  double c = 1e-4;              // sufficient-ascent constant
  int max_iters = 5000;
  double grad_tolerance = 1e-6;  // max-norm of the (tangent-projected) gradient
  int restarts = 1;
  std::uint64_t seed = 0;
  bool record_trace = false;
  double beta_init = 10.0;

  void validate() const {
    if (eta <= 0.0) throw std::invalid_argument("optimizer: eta must be > 0");
    if (rho <= 0.0 || rho >= 1.0) throw std::invalid_argument("optimizer: rho must be in (0,1)");
    if (c <= 0.0 || c >= 1.0) throw std::invalid_argument("optimizer: c must be in (0,1)");
    if (max_iters < 1 || restarts < 1)
      throw std::invalid_argument("optimizer: max_iters and restarts must be >= 1");
  }
};

struct IterationRecord {
  int iter;
  double step;
  double value;
};

struct AscentResult {
  Eigen::VectorXd x;
  double value = -std::numeric_limits<double>::infinity();
  bool converged = false;
  bool stationary = false;  // line search could not find an ascent step
  int iterations = 0;
  std::vector<IterationRecord> trace;
};

// Gradient ascent with backtracking: step r shrinks by rho until
// f(x + r g) >= f(x) + c r ||g||^2. The direction is the raw gradient; any
// manifold projection is applied after the accepted step.
inline AscentResult armijo_ascent(
    const std::function<double(const Eigen::VectorXd&)>& value_fn,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_fn,
    Eigen::VectorXd x, const OptimizerConfig& cfg,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& project = nullptr,
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>&
        convergence_norm = nullptr) {
  cfg.validate();
  constexpr double min_step = 1e-18;

  AscentResult result;
  double value = value_fn(x);
  if (!std::isfinite(value)) throw std::invalid_argument("armijo_ascent: non-finite start value");

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const Eigen::VectorXd g = grad_fn(x);
    const double gnorm =
        convergence_norm ? convergence_norm(x, g) : g.lpNorm<Eigen::Infinity>();
    if (gnorm <= cfg.grad_tolerance) {
      result.converged = true;
      break;
    }

    const double slope = g.squaredNorm();
    double r = cfg.eta;
    Eigen::VectorXd candidate = x + r * g;
    double cval = value_fn(candidate);
    while (!(cval >= value + cfg.c * r * slope)) {
      r *= cfg.rho;
      if (r < min_step) {
        result.stationary = true;
        break;
      }
      candidate = x + r * g;
      cval = value_fn(candidate);
    }
    if (result.stationary) break;

    if (project) {
      x = project(candidate);
      value = value_fn(x);
    } else {
      x = std::move(candidate);
      value = cval;
    }
    ++result.iterations;
    if (cfg.record_trace) result.trace.push_back({iter, r, value});
  }

  result.x = std::move(x);
  result.value = value;
  return result;
}

inline int state_dimension(const GeometrySpec& geometry, int n) {
  return 1 + (geometry.is_spherical() ? 1 : 0) + n * geometry.ambient_dim;
}

inline Eigen::VectorXd state_to_vector(const ParameterState& state) {
  const int n = state.node_count();
  Eigen::VectorXd x(state_dimension(state.geometry, n));
  int k = 0;
  x[k++] = state.alpha;
  if (state.beta) x[k++] = *state.beta;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < state.geometry.ambient_dim; ++d) x[k++] = state.z(i, d);
  return x;
}

inline ParameterState vector_to_state(const Eigen::VectorXd& x, const GeometrySpec& geometry,
                                      int n) {
  ParameterState state;
  state.geometry = geometry;
  state.z.resize(n, geometry.ambient_dim);
  int k = 0;
  state.alpha = x[k++];
  if (geometry.is_spherical()) state.beta = x[k++];
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < geometry.ambient_dim; ++d) state.z(i, d) = x[k++];
  return state;
}

inline Eigen::VectorXd gradient_to_vector(const ModelGradient& grad, const GeometrySpec& geometry) {
  const int n = static_cast<int>(grad.d_z.rows());
  Eigen::VectorXd g(state_dimension(geometry, n));
  int k = 0;
  g[k++] = grad.d_alpha;
  if (grad.d_beta) g[k++] = *grad.d_beta;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < geometry.ambient_dim; ++d) g[k++] = grad.d_z(i, d);
  return g;
}

struct MlFit {
  ParameterState state;
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
  bool stationary = false;
  int iterations = 0;
  std::vector<IterationRecord> trace;
};

inline ParameterState random_initial_state(const GeometrySpec& geometry, int n, double beta_init,
                                           Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ParameterState state;
  state.geometry = geometry;
  state.alpha = normal(rng);
  state.z.resize(n, geometry.ambient_dim);
  if (geometry.is_spherical()) {
    state.beta = beta_init;
    for (int i = 0; i < n; ++i) state.z.row(i) = uniform_on_sphere(geometry.ambient_dim, rng);
  } else {
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < geometry.ambient_dim; ++d) state.z(i, d) = normal(rng);
  }
  return state;
}

// Maximum likelihood via joint gradient ascent over (theta, Z), best of
// `restarts` random initializations. Spherical runs re-project latent rows
// after every accepted step and measure convergence on the tangent gradient.
inline MlFit fit_ml(const Network& net, const GeometrySpec& geometry, const OptimizerConfig& cfg,
                    const DyadMask* mask = nullptr) {
  cfg.validate();
  const int n = net.node_count();
  const bool spherical = geometry.is_spherical();
  const int theta_count = spherical ? 2 : 1;

  const auto value_fn = [&](const Eigen::VectorXd& x) {
    return log_likelihood(vector_to_state(x, geometry, n), net, mask);
  };
  const auto grad_fn = [&](const Eigen::VectorXd& x) {
    return gradient_to_vector(grad_log_likelihood(vector_to_state(x, geometry, n), net, mask),
                              geometry);
  };

  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> project;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> convergence_norm;
  if (spherical) {
    project = [&](const Eigen::VectorXd& x) {
      ParameterState s = vector_to_state(x, geometry, n);
      s.project_rows_to_sphere();
      return state_to_vector(s);
    };
    convergence_norm = [&, theta_count](const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
      double norm = 0.0;
      for (int k = 0; k < theta_count; ++k) norm = std::max(norm, std::abs(g[k]));
      const int d = geometry.ambient_dim;
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd zi = x.segment(theta_count + i * d, d);
        const Eigen::VectorXd gi = g.segment(theta_count + i * d, d);
        norm = std::max(norm, tangent_project(zi, gi).lpNorm<Eigen::Infinity>());
      }
      return norm;
    };
  }

  MlFit best;
  for (int restart = 0; restart < cfg.restarts; ++restart) {
    Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(restart));
    const ParameterState init = random_initial_state(geometry, n, cfg.beta_init, rng);
    AscentResult run =
        armijo_ascent(value_fn, grad_fn, state_to_vector(init), cfg, project, convergence_norm);
    if (run.value > best.loglik) {
      best.state = vector_to_state(run.x, geometry, n);
      best.loglik = run.value;
      best.converged = run.converged;
      best.stationary = run.stationary;
      best.iterations = run.iterations;
      best.trace = std::move(run.trace);
    }
  }
  return best;
}

}  // namespace lsm
