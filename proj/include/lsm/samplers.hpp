#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lsm/common.hpp"
#include "lsm/geometry.hpp"
#include "lsm/mle.hpp"
#include "lsm/model.hpp"

namespace lsm {

enum class Algorithm { mh, hmc, ghmc };

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::mh: return "mh";
    case Algorithm::hmc: return "hmc";
    default: return "ghmc";
  }
}

inline Algorithm algorithm_from_name(const std::string& name) {
  if (name == "mh") return Algorithm::mh;
  if (name == "hmc") return Algorithm::hmc;
  if (name == "ghmc") return Algorithm::ghmc;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

struct SamplerConfig {
  Algorithm algorithm = Algorithm::mh;
  int iters = 30000;  // total iterations B
  int burn_in = 10000;
  int thin = 10;
  int chains = 2;
  std::uint64_t seed = 1;
  double tau_z = 0.0;      // latent proposal scale: Gaussian variance | vMF concentration (0 = auto)
  double tau_theta = 0.25; // global-parameter proposal variance
  double epsilon = 0.05;   // leapfrog step size
  int leapfrog_steps = 20; // L
  double target_accept = 0.0;  // 0 = per-algorithm default
  int adapt_interval = 100;

  void validate() const {
    if (iters <= 0 || burn_in < 0 || burn_in >= iters)
      throw std::invalid_argument("sampler: need 0 <= burn_in < iters");
    if (thin < 1 || chains < 1) throw std::invalid_argument("sampler: thin and chains must be >= 1");
    if (epsilon <= 0.0) throw std::invalid_argument("sampler: epsilon must be > 0");
    if (leapfrog_steps < 1) throw std::invalid_argument("sampler: leapfrog steps must be >= 1");
    if (adapt_interval < 1) throw std::invalid_argument("sampler: adapt interval must be >= 1");
  }

  int retained_count() const { return (iters - burn_in) / thin; }
  bool retain(int iteration) const {
    return iteration > burn_in && (iteration - burn_in) % thin == 0;
  }
  double resolved_target_accept() const {
    if (target_accept > 0.0) return target_accept;
    return algorithm == Algorithm::mh ? 0.40 : 0.65;
  }
  double resolved_tau_z(bool spherical) const {
    if (tau_z > 0.0) return tau_z;
    return spherical ? 50.0 : 0.25;
  }
};

struct VectorTarget {
  std::function<double(const Eigen::VectorXd&)> log_density;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;  // may be empty for MH
};

// Burn-in proposal tuning: multiplicative log-scale updates with decaying
// gain, frozen once burn-in ends. `direction` is +1 when a higher acceptance
// rate should widen the scale (step sizes, variances) and -1 when it should
// shrink it (vMF concentrations).
struct ScaleAdapter {
  double scale = 0.25;
  double target = 0.4;
  double direction = 1.0;
  int accepted = 0;
  int attempts = 0;
  int windows = 0;

  void record(bool accept) {
    attempts += 1;
    accepted += accept ? 1 : 0;
  }
  void maybe_adapt(int interval) {
    if (attempts < interval) return;
    const double rate = static_cast<double>(accepted) / attempts;
    windows += 1;
    const double gain = 2.0 / std::sqrt(static_cast<double>(windows));
    scale *= std::exp(direction * gain * (rate - target));
    scale = std::clamp(scale, 1e-8, 1e8);
    accepted = 0;
    attempts = 0;
  }
};

struct AcceptanceCounter {
  long long accepted = 0;
  long long attempts = 0;
  void record(bool accept) {
    attempts += 1;
    accepted += accept ? 1 : 0;
  }
  double rate() const { return attempts > 0 ? static_cast<double>(accepted) / attempts : 0.0; }
};

inline bool metropolis_accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return std::log(unif(rng)) < log_ratio;
}

// --- single transitions -----------------------------------------------------

inline bool rw_transition(Eigen::VectorXd& x, double& log_density_value,
                          const std::function<double(const Eigen::VectorXd&)>& log_density,
                          double variance, Rng& rng) {
  const double sd = std::sqrt(variance);
  const Eigen::VectorXd proposal =
      x + sd * standard_normal_vector(static_cast<int>(x.size()), rng);
  const double prop_value = log_density(proposal);
  if (std::isfinite(prop_value) && metropolis_accept(prop_value - log_density_value, rng)) {
    x = proposal;
    log_density_value = prop_value;
    return true;
  }
  return false;
}

inline bool sphere_rw_transition(Eigen::VectorXd& x, double& log_density_value,
                                 const std::function<double(const Eigen::VectorXd&)>& log_density,
                                 double kappa, Rng& rng) {
  const Eigen::VectorXd proposal = sample_vmf(x, kappa, rng);
  const double prop_value = log_density(proposal);
  if (std::isfinite(prop_value) && metropolis_accept(prop_value - log_density_value, rng)) {
    x = proposal;
    log_density_value = prop_value;
    return true;
  }
  return false;
}

// One Hamiltonian transition: unit-mass momenta, L leapfrog steps of size
// epsilon, Metropolis correction on the Hamiltonian difference. Non-finite
// values mid-trajectory reject the proposal.
inline bool hmc_transition(Eigen::VectorXd& x, double& log_density_value,
                           const VectorTarget& target, double epsilon, int leapfrog_steps,
                           Rng& rng) {
  const int dim = static_cast<int>(x.size());
  const Eigen::VectorXd p0 = standard_normal_vector(dim, rng);
  const double h_current = -log_density_value + 0.5 * p0.squaredNorm();

  Eigen::VectorXd q = x;
  Eigen::VectorXd p = p0;
  for (int step = 0; step < leapfrog_steps; ++step) {
    p += 0.5 * epsilon * target.gradient(q);
    q += epsilon * p;
    p += 0.5 * epsilon * target.gradient(q);
    if (!q.allFinite() || !p.allFinite()) return false;
  }

  const double prop_value = target.log_density(q);
  if (!std::isfinite(prop_value)) return false;
  const double h_proposed = -prop_value + 0.5 * p.squaredNorm();
  if (metropolis_accept(h_current - h_proposed, rng)) {
    x = std::move(q);
    log_density_value = prop_value;
    return true;
  }
  return false;
}

// Geodesic variant on the unit sphere: tangent-projected momenta, half-step
// gradient kicks, and exact great-circle flow in between. Zero angular speed
// leaves the position unchanged.
inline bool ghmc_transition(Eigen::VectorXd& x, double& log_density_value,
                            const VectorTarget& target, double epsilon, int leapfrog_steps,
                            Rng& rng) {
  const int dim = static_cast<int>(x.size());
  Eigen::VectorXd p0 = tangent_project(x, standard_normal_vector(dim, rng));
  const double h_current = -log_density_value + 0.5 * p0.squaredNorm();

  Eigen::VectorXd q = x;
  Eigen::VectorXd p = p0;
  for (int step = 0; step < leapfrog_steps; ++step) {
    p += 0.5 * epsilon * target.gradient(q);
    p = tangent_project(q, p);
    const double speed = p.norm();
    if (speed > 0.0) {
      const double angle = speed * epsilon;
      const Eigen::VectorXd q_old = q;
      q = std::cos(angle) * q_old + (std::sin(angle) / speed) * p;
      q /= q.norm();
      p = std::cos(angle) * p - speed * std::sin(angle) * q_old;
    }
    p += 0.5 * epsilon * target.gradient(q);
    p = tangent_project(q, p);
    if (!q.allFinite() || !p.allFinite()) return false;
  }

  const double prop_value = target.log_density(q);
  if (!std::isfinite(prop_value)) return false;
  const double h_proposed = -prop_value + 0.5 * p.squaredNorm();
  if (metropolis_accept(h_current - h_proposed, rng)) {
    x = std::move(q);
    log_density_value = prop_value;
    return true;
  }
  return false;
}

// --- generic chains over a single vector target ------------------------------

enum class ChainKind { rw, hmc, sphere_rw, ghmc };

struct GenericChainOutput {
  Eigen::MatrixXd samples;  // retained x dim
  std::vector<double> log_density;
  std::vector<int> retained_iters;
  double acceptance = 0.0;  // post-burn-in
  double tuned_scale = 0.0;
  std::uint64_t chain_seed = 0;
};

inline GenericChainOutput run_generic_chain(ChainKind kind, const VectorTarget& target,
                                            const Eigen::VectorXd& x0, const SamplerConfig& cfg,
                                            std::uint64_t chain_seed) {
  cfg.validate();
  const bool on_sphere = kind == ChainKind::sphere_rw || kind == ChainKind::ghmc;
  Rng rng(chain_seed);

  Eigen::VectorXd x = x0;
  if (on_sphere) x = project_to_sphere(x);
  double value = target.log_density(x);
  if (!std::isfinite(value))
    throw std::invalid_argument("generic chain: non-finite log-density at initial state");

  ScaleAdapter adapter;
  adapter.target = cfg.resolved_target_accept();
  switch (kind) {
    case ChainKind::rw: adapter.scale = cfg.resolved_tau_z(false); break;
    case ChainKind::sphere_rw:
      adapter.scale = cfg.resolved_tau_z(true);
      adapter.direction = -1.0;
      break;
    default: adapter.scale = cfg.epsilon; break;
  }
  if (cfg.tau_z > 0.0 && (kind == ChainKind::rw || kind == ChainKind::sphere_rw))
    adapter.scale = cfg.tau_z;

  GenericChainOutput out;
  out.chain_seed = chain_seed;
  const int retained = cfg.retained_count();
  out.samples.resize(retained, x.size());
  out.log_density.reserve(retained);
  AcceptanceCounter counter;
  int row = 0;

  for (int b = 1; b <= cfg.iters; ++b) {
    bool accepted = false;
    switch (kind) {
      case ChainKind::rw:
        accepted = rw_transition(x, value, target.log_density, adapter.scale, rng);
        break;
      case ChainKind::sphere_rw:
        accepted = sphere_rw_transition(x, value, target.log_density, adapter.scale, rng);
        break;
      case ChainKind::hmc:
        accepted = hmc_transition(x, value, target, adapter.scale, cfg.leapfrog_steps, rng);
        break;
      case ChainKind::ghmc:
        accepted = ghmc_transition(x, value, target, adapter.scale, cfg.leapfrog_steps, rng);
        break;
    }
    if (b <= cfg.burn_in) {
      adapter.record(accepted);
      adapter.maybe_adapt(cfg.adapt_interval);
    } else {
      counter.record(accepted);
    }
    if (cfg.retain(b) && row < retained) {
      out.samples.row(row++) = x;
      out.log_density.push_back(value);
      out.retained_iters.push_back(b);
    }
  }
  out.acceptance = counter.rate();
  out.tuned_scale = adapter.scale;
  return out;
}

inline std::vector<GenericChainOutput> run_generic_chains(ChainKind kind,
                                                          const VectorTarget& target,
                                                          const Eigen::VectorXd& x0,
                                                          const SamplerConfig& cfg) {
  std::vector<std::future<GenericChainOutput>> futures;
  futures.reserve(cfg.chains);
  for (int chain = 0; chain < cfg.chains; ++chain)
    futures.push_back(std::async(std::launch::async, [&, chain] {
      return run_generic_chain(kind, target, x0, cfg, mix_seed(cfg.seed, chain));
    }));
  std::vector<GenericChainOutput> outputs;
  outputs.reserve(cfg.chains);
  for (auto& f : futures) outputs.push_back(f.get());
  return outputs;
}

inline std::vector<GenericChainOutput> run_hmc(const VectorTarget& target,
                                               const Eigen::VectorXd& x0,
                                               const SamplerConfig& cfg) {
  return run_generic_chains(ChainKind::hmc, target, x0, cfg);
}

inline std::vector<GenericChainOutput> run_ghmc(const VectorTarget& target,
                                                const Eigen::VectorXd& x0,
                                                const SamplerConfig& cfg) {
  return run_generic_chains(ChainKind::ghmc, target, x0, cfg);
}

inline std::vector<GenericChainOutput> run_random_walk(const VectorTarget& target,
                                                       const Eigen::VectorXd& x0,
                                                       const SamplerConfig& cfg) {
  return run_generic_chains(ChainKind::rw, target, x0, cfg);
}

inline std::vector<GenericChainOutput> run_sphere_random_walk(const VectorTarget& target,
                                                              const Eigen::VectorXd& x0,
                                                              const SamplerConfig& cfg) {
  return run_generic_chains(ChainKind::sphere_rw, target, x0, cfg);
}

// --- latent space model chains -----------------------------------------------

struct ChainOutput {
  std::vector<ParameterState> draws;  // aligned to the reference configuration
  std::vector<int> retained_iters;
  std::vector<double> loglik_trace;
  std::vector<double> logpost_trace;
  Eigen::MatrixXd pointwise_loglik;  // retained x observed dyads
  std::map<std::string, double> acceptance;
  std::map<std::string, double> tuned_scales;
  std::uint64_t chain_seed = 0;
};

inline ParameterState draw_from_prior(const GeometrySpec& geometry, int n,
                                      const HyperParameters& hp, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ParameterState state;
  state.geometry = geometry;
  state.z.resize(n, geometry.ambient_dim);
  state.alpha = hp.mu_alpha + hp.sigma_alpha * normal(rng);
  if (geometry.is_spherical()) {
    const double cond_mean =
        hp.mu_beta + hp.rho * hp.sigma_beta / hp.sigma_alpha * (state.alpha - hp.mu_alpha);
    const double cond_sd = hp.sigma_beta * std::sqrt(1.0 - hp.rho * hp.rho);
    state.beta = cond_mean + cond_sd * normal(rng);
    for (int i = 0; i < n; ++i) state.z.row(i) = uniform_on_sphere(geometry.ambient_dim, rng);
  } else {
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < geometry.ambient_dim; ++d) state.z(i, d) = hp.sigma_z * normal(rng);
  }
  return state;
}

inline double theta_log_prior(const ParameterState& state, const HyperParameters& hp) {
  if (state.geometry.is_spherical()) return log_prior(state, hp);
  const double da = (state.alpha - hp.mu_alpha) / hp.sigma_alpha;
  return -da * da / 2.0;
}

// One posterior chain with blockwise updates: every latent position in turn,
// then the global parameters. MH uses single-site Metropolis proposals;
// hmc/ghmc use one Hamiltonian transition per block. Retained draws are
// Procrustes-aligned to `reference`.
inline ChainOutput run_latent_chain(const Network& net, const GeometrySpec& geometry,
                                    const HyperParameters& hp, const SamplerConfig& cfg,
                                    const Eigen::MatrixXd& reference, std::uint64_t chain_seed,
                                    const DyadMask* mask = nullptr) {
  cfg.validate();
  hp.validate();
  if (cfg.algorithm == Algorithm::ghmc && !geometry.is_spherical())
    throw std::invalid_argument("sampler: geodesic updates require a spherical geometry");
  const bool spherical = geometry.is_spherical();
  const bool use_hamiltonian = cfg.algorithm != Algorithm::mh;
  const int n = net.node_count();
  Rng rng(chain_seed);

  ParameterState state = draw_from_prior(geometry, n, hp, rng);
  if (!std::isfinite(log_posterior(state, net, hp, mask)))
    throw std::runtime_error("sampler: non-finite log-posterior at initialization");

  // Per-block adapters: one per node plus the global block(s).
  std::vector<ScaleAdapter> z_adapters(n);
  for (auto& adapter : z_adapters) {
    adapter.target = cfg.resolved_target_accept();
    if (use_hamiltonian) {
      adapter.scale = cfg.epsilon;
    } else {
      adapter.scale = cfg.resolved_tau_z(spherical);
      if (spherical) adapter.direction = -1.0;
    }
  }
  const int theta_blocks = use_hamiltonian ? 1 : (spherical ? 2 : 1);
  std::vector<ScaleAdapter> theta_adapters(theta_blocks);
  for (auto& adapter : theta_adapters) {
    adapter.target = cfg.resolved_target_accept();
    adapter.scale = use_hamiltonian ? cfg.epsilon : cfg.tau_theta;
  }
  std::vector<AcceptanceCounter> z_counters(n);
  std::vector<AcceptanceCounter> theta_counters(theta_blocks);

  const auto dyads = observed_dyads(net, mask);
  const int retained = cfg.retained_count();
  ChainOutput out;
  out.chain_seed = chain_seed;
  out.pointwise_loglik.resize(retained, static_cast<long>(dyads.size()));
  out.draws.reserve(retained);
  int row = 0;

  const ProcrustesMode align_mode =
      spherical ? ProcrustesMode::orthogonal : ProcrustesMode::euclidean;

  for (int b = 1; b <= cfg.iters; ++b) {
    const bool adapting = b <= cfg.burn_in;

    // Latent positions, one node at a time.
    for (int i = 0; i < n; ++i) {
      bool accepted = false;
      if (use_hamiltonian) {
        VectorTarget target{
            [&](const Eigen::VectorXd& zi) {
              return node_conditional_log_posterior(state, net, hp, i, zi, mask);
            },
            [&](const Eigen::VectorXd& zi) {
              return node_conditional_gradient(state, net, hp, i, zi, mask);
            }};
        Eigen::VectorXd zi = state.z.row(i);
        double value = target.log_density(zi);
        accepted = spherical ? ghmc_transition(zi, value, target, z_adapters[i].scale,
                                               cfg.leapfrog_steps, rng)
                             : hmc_transition(zi, value, target, z_adapters[i].scale,
                                              cfg.leapfrog_steps, rng);
        if (accepted) state.z.row(i) = zi;
      } else {
        Eigen::VectorXd proposal;
        if (spherical) {
          proposal = sample_vmf(state.z.row(i), z_adapters[i].scale, rng);
        } else {
          proposal = state.z.row(i).transpose() +
                     std::sqrt(z_adapters[i].scale) *
                         standard_normal_vector(geometry.ambient_dim, rng);
        }
        const double current = node_conditional_log_posterior(state, net, hp, i, state.z.row(i), mask);
        const double proposed = node_conditional_log_posterior(state, net, hp, i, proposal, mask);
        accepted = std::isfinite(proposed) && metropolis_accept(proposed - current, rng);
        if (accepted) state.z.row(i) = proposal;
      }
      if (adapting) {
        z_adapters[i].record(accepted);
        z_adapters[i].maybe_adapt(cfg.adapt_interval);
      } else {
        z_counters[i].record(accepted);
      }
    }

    // Global parameters: jointly under Hamiltonian updates, one at a time
    // under Metropolis.
    if (use_hamiltonian) {
      VectorTarget target{
          [&](const Eigen::VectorXd& theta) {
            ParameterState candidate = state;
            candidate.alpha = theta[0];
            if (spherical) candidate.beta = theta[1];
            return log_likelihood(candidate, net, mask) + theta_log_prior(candidate, hp);
          },
          [&](const Eigen::VectorXd& theta) {
            ParameterState candidate = state;
            candidate.alpha = theta[0];
            if (spherical) candidate.beta = theta[1];
            const ModelGradient lik = grad_log_likelihood(candidate, net, mask);
            const ModelGradient prior = grad_log_prior(candidate, hp);
            Eigen::VectorXd g(spherical ? 2 : 1);
            g[0] = lik.d_alpha + prior.d_alpha;
            if (spherical) g[1] = *lik.d_beta + *prior.d_beta;
            return g;
          }};
      Eigen::VectorXd theta(spherical ? 2 : 1);
      theta[0] = state.alpha;
      if (spherical) theta[1] = *state.beta;
      double value = target.log_density(theta);
      const bool accepted =
          hmc_transition(theta, value, target, theta_adapters[0].scale, cfg.leapfrog_steps, rng);
      if (accepted) {
        state.alpha = theta[0];
        if (spherical) state.beta = theta[1];
      }
      if (adapting) {
        theta_adapters[0].record(accepted);
        theta_adapters[0].maybe_adapt(cfg.adapt_interval);
      } else {
        theta_counters[0].record(accepted);
      }
    } else {
      double current_ll = log_likelihood(state, net, mask);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int block = 0; block < theta_blocks; ++block) {
        ParameterState candidate = state;
        if (block == 0)
          candidate.alpha += std::sqrt(theta_adapters[block].scale) * normal(rng);
        else
          *candidate.beta += std::sqrt(theta_adapters[block].scale) * normal(rng);
        const double candidate_ll = log_likelihood(candidate, net, mask);
        const double log_ratio = candidate_ll + theta_log_prior(candidate, hp) -
                                 (current_ll + theta_log_prior(state, hp));
        const bool accepted = std::isfinite(candidate_ll) && metropolis_accept(log_ratio, rng);
        if (accepted) {
          state = std::move(candidate);
          current_ll = candidate_ll;
        }
        if (adapting) {
          theta_adapters[block].record(accepted);
          theta_adapters[block].maybe_adapt(cfg.adapt_interval);
        } else {
          theta_counters[block].record(accepted);
        }
      }
    }

    if (cfg.retain(b) && row < retained) {
      const double ll = log_likelihood(state, net, mask);
      out.loglik_trace.push_back(ll);
      out.logpost_trace.push_back(ll + log_prior(state, hp));
      out.pointwise_loglik.row(row) = pointwise_log_likelihood(state, net, mask).transpose();
      ParameterState aligned = state;
      aligned.z = procrustes_align(state.z, reference, align_mode);
      if (spherical) aligned.project_rows_to_sphere();
      out.draws.push_back(std::move(aligned));
      out.retained_iters.push_back(b);
      ++row;
    }
  }

  for (int i = 0; i < n; ++i) {
    out.acceptance["z_" + std::to_string(i)] = z_counters[i].rate();
    out.tuned_scales["z_" + std::to_string(i)] = z_adapters[i].scale;
  }
  if (use_hamiltonian) {
    out.acceptance["theta"] = theta_counters[0].rate();
    out.tuned_scales["theta"] = theta_adapters[0].scale;
  } else {
    out.acceptance["alpha"] = theta_counters[0].rate();
    out.tuned_scales["alpha"] = theta_adapters[0].scale;
    if (spherical) {
      out.acceptance["beta"] = theta_counters[1].rate();
      out.tuned_scales["beta"] = theta_adapters[1].scale;
    }
  }
  return out;
}

inline ChainOutput run_mh(const Network& net, const GeometrySpec& geometry,
                          const HyperParameters& hp, SamplerConfig cfg,
                          const Eigen::MatrixXd& reference, std::uint64_t chain_seed,
                          const DyadMask* mask = nullptr) {
  cfg.algorithm = Algorithm::mh;
  return run_latent_chain(net, geometry, hp, cfg, reference, chain_seed, mask);
}

struct PosteriorRun {
  MlFit ml;
  std::vector<ChainOutput> chains;
  std::vector<std::pair<int, int>> pointwise_dyads;
  GeometrySpec geometry;
  HyperParameters hyper;
  SamplerConfig config;
};

// Full posterior simulation: ML fit for the alignment reference, then
// independent chains (prior-seeded, per-chain RNG streams).
inline PosteriorRun sample_posterior(const Network& net, const GeometrySpec& geometry,
                                     const HyperParameters& hp, const SamplerConfig& cfg,
                                     const DyadMask* mask = nullptr,
                                     const OptimizerConfig* ml_cfg = nullptr) {
  cfg.validate();
  OptimizerConfig opt;
  if (ml_cfg) {
    opt = *ml_cfg;
  } else {
    opt.restarts = 10;
    opt.seed = cfg.seed;
  }

  PosteriorRun run;
  run.geometry = geometry;
  run.hyper = hp;
  run.config = cfg;
  run.ml = fit_ml(net, geometry, opt, mask);
  run.pointwise_dyads = observed_dyads(net, mask);

  std::vector<std::future<ChainOutput>> futures;
  futures.reserve(cfg.chains);
  for (int chain = 0; chain < cfg.chains; ++chain)
    futures.push_back(std::async(std::launch::async, [&, chain] {
      return run_latent_chain(net, geometry, hp, cfg, run.ml.state.z, mix_seed(cfg.seed, chain),
                              mask);
    }));
  for (auto& f : futures) run.chains.push_back(f.get());
  return run;
}

}  // namespace lsm
