#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lsm/common.hpp"
#include "lsm/geometry.hpp"
#include "lsm/network.hpp"

namespace lsm {

// Prior constants. sigma_z applies to Euclidean positions; (mu_beta,
// sigma_beta, rho) only to the spherical intercept/slope pair.
struct HyperParameters {
  double sigma_z = 5.0;
  double mu_alpha = 0.0;
  double sigma_alpha = 5.0;
  double mu_beta = 10.0;
  double sigma_beta = 5.0;
  double rho = 0.0;

  void validate() const {
    if (sigma_z <= 0.0 || sigma_alpha <= 0.0 || sigma_beta <= 0.0)
      throw std::invalid_argument("hyperparameters: standard deviations must be positive");
    if (std::abs(rho) >= 1.0)
      throw std::invalid_argument("hyperparameters: |rho| must be < 1");
  }

  static HyperParameters euclidean_defaults() { return {5.0, 0.0, 5.0, 10.0, 5.0, 0.0}; }
  static HyperParameters spherical_defaults() { return {5.0, 0.0, 1.0, 10.0, 5.0, -0.5}; }
  static HyperParameters defaults_for(const GeometrySpec& geometry) {
    return geometry.is_spherical() ? spherical_defaults() : euclidean_defaults();
  }
};

// Full parameter point: intercept, similarity slope (spherical only), and
// one latent position per row of z.
struct ParameterState {
  double alpha = 0.0;
  std::optional<double> beta;
  Eigen::MatrixXd z;
  GeometrySpec geometry;

  int node_count() const { return static_cast<int>(z.rows()); }

  void validate() const {
    if (z.cols() != geometry.ambient_dim)
      throw std::invalid_argument("state: latent dimension mismatch");
    if (geometry.is_spherical() != beta.has_value())
      throw std::invalid_argument("state: beta present iff geometry is spherical");
    if (!z.allFinite()) throw std::invalid_argument("state: non-finite latent positions");
    if (geometry.is_spherical())
      for (int i = 0; i < node_count(); ++i)
        if (std::abs(z.row(i).norm() - 1.0) > 1e-10)
          throw std::invalid_argument("state: latent row not on the unit sphere");
  }

  void project_rows_to_sphere() {
    for (int i = 0; i < node_count(); ++i) {
      const double norm = z.row(i).norm();
      if (norm <= 0.0) throw std::invalid_argument("state: zero latent row");
      z.row(i) /= norm;
    }
  }
};

// Observation mask for held-out dyads; null pointer everywhere means fully
// observed. Masked dyads contribute nothing to likelihood or gradients.
struct DyadMask {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> observed;

  static DyadMask all_observed(int n) {
    DyadMask mask;
    mask.observed.setOnes(n, n);
    return mask;
  }
  bool is_observed(int i, int j) const { return observed(i, j) != 0; }
  void hide(int i, int j) { observed(i, j) = observed(j, i) = 0; }
};

inline bool dyad_observed(const DyadMask* mask, int i, int j) {
  return mask == nullptr || mask->is_observed(i, j);
}

struct ModelGradient {
  double d_alpha = 0.0;
  std::optional<double> d_beta;
  Eigen::MatrixXd d_z;
};

inline double linear_predictor(const ParameterState& state, int i, int j) {
  if (state.geometry.is_spherical())
    return state.alpha + *state.beta * state.z.row(i).dot(state.z.row(j));
  return state.alpha - (state.z.row(i) - state.z.row(j)).norm();
}

// eta for every ordered pair (diagonal meaningless, set to 0).
inline Eigen::MatrixXd eta_matrix(const ParameterState& state) {
  const int n = state.node_count();
  Eigen::MatrixXd eta(n, n);
  if (state.geometry.is_spherical()) {
    eta = (state.alpha + (*state.beta * (state.z * state.z.transpose())).array()).matrix();
  } else {
    const Eigen::VectorXd sq = state.z.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                         2.0 * (state.z * state.z.transpose());
    eta = state.alpha - d2.array().max(0.0).sqrt();
  }
  eta.diagonal().setZero();
  return eta;
}

inline double log_likelihood(const ParameterState& state, const Network& net,
                             const DyadMask* mask = nullptr) {
  const int n = net.node_count();
  if (state.node_count() != n) throw std::invalid_argument("log_likelihood: size mismatch");
  const Eigen::MatrixXd eta = eta_matrix(state);
  double ll = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (!dyad_observed(mask, i, j)) continue;
      ll += net.adjacency(i, j) * eta(i, j) - softplus(eta(i, j));
    }
  return ll;
}

// Per-dyad likelihood terms over observed dyads i<j in lexicographic order.
inline Eigen::VectorXd pointwise_log_likelihood(const ParameterState& state, const Network& net,
                                                const DyadMask* mask = nullptr) {
  const int n = net.node_count();
  const Eigen::MatrixXd eta = eta_matrix(state);
  std::vector<double> terms;
  terms.reserve(net.dyad_count());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (!dyad_observed(mask, i, j)) continue;
      terms.push_back(net.adjacency(i, j) * eta(i, j) - softplus(eta(i, j)));
    }
  return Eigen::Map<Eigen::VectorXd>(terms.data(), static_cast<long>(terms.size()));
}

inline std::vector<std::pair<int, int>> observed_dyads(const Network& net,
                                                       const DyadMask* mask = nullptr) {
  std::vector<std::pair<int, int>> dyads;
  for (int i = 0; i < net.node_count(); ++i)
    for (int j = i + 1; j < net.node_count(); ++j)
      if (dyad_observed(mask, i, j)) dyads.emplace_back(i, j);
  return dyads;
}

// Residual-form gradient of the log-likelihood. Spherical position gradients
// are returned in the ambient space; coincident Euclidean pairs contribute a
// zero direction (subgradient choice at the distance kink).
inline ModelGradient grad_log_likelihood(const ParameterState& state, const Network& net,
                                         const DyadMask* mask = nullptr) {
  const int n = net.node_count();
  const Eigen::MatrixXd eta = eta_matrix(state);
  ModelGradient grad;
  grad.d_z = Eigen::MatrixXd::Zero(n, state.geometry.ambient_dim);
  const bool spherical = state.geometry.is_spherical();
  if (spherical) grad.d_beta = 0.0;

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (!dyad_observed(mask, i, j)) continue;
      const double resid = net.adjacency(i, j) - logistic(eta(i, j));
      grad.d_alpha += resid;
      if (spherical) {
        *grad.d_beta += resid * state.z.row(i).dot(state.z.row(j));
        grad.d_z.row(i) += resid * *state.beta * state.z.row(j);
        grad.d_z.row(j) += resid * *state.beta * state.z.row(i);
      } else {
        const Eigen::RowVectorXd diff = state.z.row(i) - state.z.row(j);
        const double dist = diff.norm();
        if (dist > 1e-12) {
          grad.d_z.row(i) -= resid * diff / dist;
          grad.d_z.row(j) += resid * diff / dist;
        }
      }
    }
  return grad;
}

// Unnormalized log prior. Spherical latent positions are uniform on the
// sphere (constant taken as zero); (alpha, beta) carry a correlated Gaussian
// kernel with quadratic form Q scaled by -1/(2(1-rho^2)).
inline double log_prior(const ParameterState& state, const HyperParameters& hp) {
  hp.validate();
  if (state.geometry.is_spherical()) {
    const double da = (state.alpha - hp.mu_alpha) / hp.sigma_alpha;
    const double db = (*state.beta - hp.mu_beta) / hp.sigma_beta;
    const double q = da * da - 2.0 * hp.rho * da * db + db * db;
    return -q / (2.0 * (1.0 - hp.rho * hp.rho));
  }
  const double da = (state.alpha - hp.mu_alpha) / hp.sigma_alpha;
  return -state.z.squaredNorm() / (2.0 * hp.sigma_z * hp.sigma_z) - da * da / 2.0;
}

inline ModelGradient grad_log_prior(const ParameterState& state, const HyperParameters& hp) {
  hp.validate();
  ModelGradient grad;
  if (state.geometry.is_spherical()) {
    const double scale = 1.0 / (1.0 - hp.rho * hp.rho);
    const double da = (state.alpha - hp.mu_alpha) / hp.sigma_alpha;
    const double db = (*state.beta - hp.mu_beta) / hp.sigma_beta;
    grad.d_alpha = -scale * (da - hp.rho * db) / hp.sigma_alpha;
    grad.d_beta = -scale * (db - hp.rho * da) / hp.sigma_beta;
    grad.d_z = Eigen::MatrixXd::Zero(state.node_count(), state.geometry.ambient_dim);
  } else {
    grad.d_alpha = -(state.alpha - hp.mu_alpha) / (hp.sigma_alpha * hp.sigma_alpha);
    grad.d_z = -state.z / (hp.sigma_z * hp.sigma_z);
  }
  return grad;
}

inline double log_posterior(const ParameterState& state, const Network& net,
                            const HyperParameters& hp, const DyadMask* mask = nullptr) {
  return log_likelihood(state, net, mask) + log_prior(state, hp);
}

inline ModelGradient grad_log_posterior(const ParameterState& state, const Network& net,
                                        const HyperParameters& hp,
                                        const DyadMask* mask = nullptr) {
  ModelGradient grad = grad_log_likelihood(state, net, mask);
  const ModelGradient prior = grad_log_prior(state, hp);
  grad.d_alpha += prior.d_alpha;
  if (grad.d_beta) *grad.d_beta += *prior.d_beta;
  grad.d_z += prior.d_z;
  return grad;
}

// Likelihood and prior contribution of node i alone (all dyads incident to
// i plus the position prior); enough for single-site Metropolis decisions.
inline double node_conditional_log_posterior(const ParameterState& state, const Network& net,
                                             const HyperParameters& hp, int i,
                                             const Eigen::VectorXd& zi,
                                             const DyadMask* mask = nullptr) {
  const int n = net.node_count();
  double value = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j == i || !dyad_observed(mask, i, j)) continue;
    double eta;
    if (state.geometry.is_spherical())
      eta = state.alpha + *state.beta * zi.dot(state.z.row(j));
    else
      eta = state.alpha - (zi.transpose() - state.z.row(j)).norm();
    value += net.adjacency(i, j) * eta - softplus(eta);
  }
  if (!state.geometry.is_spherical())
    value -= zi.squaredNorm() / (2.0 * hp.sigma_z * hp.sigma_z);
  return value;
}

// Ambient-space gradient of the node-i conditional above.
inline Eigen::VectorXd node_conditional_gradient(const ParameterState& state, const Network& net,
                                                 const HyperParameters& hp, int i,
                                                 const Eigen::VectorXd& zi,
                                                 const DyadMask* mask = nullptr) {
  const int n = net.node_count();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(state.geometry.ambient_dim);
  for (int j = 0; j < n; ++j) {
    if (j == i || !dyad_observed(mask, i, j)) continue;
    if (state.geometry.is_spherical()) {
      const double eta = state.alpha + *state.beta * zi.dot(state.z.row(j));
      const double resid = net.adjacency(i, j) - logistic(eta);
      grad += resid * *state.beta * state.z.row(j).transpose();
    } else {
      const Eigen::VectorXd diff = zi - state.z.row(j).transpose();
      const double dist = diff.norm();
      const double eta = state.alpha - dist;
      const double resid = net.adjacency(i, j) - logistic(eta);
      if (dist > 1e-12) grad -= resid * diff / dist;
    }
  }
  if (!state.geometry.is_spherical()) grad -= zi / (hp.sigma_z * hp.sigma_z);
  return grad;
}

}  // namespace lsm
