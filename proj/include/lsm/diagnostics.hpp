#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsm/samplers.hpp"

namespace lsm {

namespace detail {

inline std::size_t common_length(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw std::invalid_argument("diagnostics: no chains");
  std::size_t n = chains[0].size();
  for (const auto& chain : chains) n = std::min(n, chain.size());
  return n;
}

// Autocovariance at a given lag, 1/N normalization.
inline double autocovariance(const std::vector<double>& xs, std::size_t n, double mean,
                             std::size_t lag) {
  double s = 0.0;
  for (std::size_t k = 0; k + lag < n; ++k) s += (xs[k] - mean) * (xs[k + lag] - mean);
  return s / static_cast<double>(n);
}

}  // namespace detail

// Autocorrelation-based ESS with Geyer's initial monotone truncation over
// pairwise lag sums, combined across chains. Constant chains report the raw
// draw count and set `degenerate`.
inline double effective_sample_size(const std::vector<std::vector<double>>& chains,
                                    bool* degenerate = nullptr) {
  const std::size_t m = chains.size();
  const std::size_t n = detail::common_length(chains);
  if (m < 2 && n < 100)
    throw std::invalid_argument("ess: need >= 2 chains or one chain with >= 100 draws");
  if (n < 4) throw std::invalid_argument("ess: chains too short");
  if (degenerate) *degenerate = false;
  const double total = static_cast<double>(m * n);

  std::vector<double> means(m);
  std::vector<double> vars(m);  // unbiased within-chain variances
  double overall = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += chains[c][k];
    means[c] = s / static_cast<double>(n);
    overall += means[c];
  }
  overall /= static_cast<double>(m);
  double w = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    vars[c] = detail::autocovariance(chains[c], n, means[c], 0) * static_cast<double>(n) /
              static_cast<double>(n - 1);
    w += vars[c];
  }
  w /= static_cast<double>(m);

  double var_plus;
  if (m >= 2) {
    double b = 0.0;
    for (std::size_t c = 0; c < m; ++c) b += (means[c] - overall) * (means[c] - overall);
    b *= static_cast<double>(n) / static_cast<double>(m - 1);
    var_plus = w * static_cast<double>(n - 1) / static_cast<double>(n) + b / static_cast<double>(n);
  } else {
    var_plus = w;
  }
  if (!(var_plus > 0.0) || !std::isfinite(var_plus)) {
    if (degenerate) *degenerate = true;
    return total;
  }

  const auto rho_hat = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < m; ++c)
      acov += detail::autocovariance(chains[c], n, means[c], lag);
    acov /= static_cast<double>(m);
    return 1.0 - (w - acov) / var_plus;
  };

  // Sum pairwise rho terms while positive, then enforce monotone decay.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho_hat(2 * k) + rho_hat(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau = std::max(tau, 1e-10);
  return total / tau;
}

// Split potential scale reduction factor (classic B/W form on half-chains).
inline double split_rhat(const std::vector<std::vector<double>>& chains,
                         bool* degenerate = nullptr) {
  const std::size_t n_full = detail::common_length(chains);
  if (n_full < 4) throw std::invalid_argument("split_rhat: chains must have length >= 4");
  if (degenerate) *degenerate = false;

  std::vector<std::vector<double>> halves;
  const std::size_t half = n_full / 2;
  for (const auto& chain : chains) {
    halves.emplace_back(chain.begin(), chain.begin() + half);
    halves.emplace_back(chain.end() - static_cast<long>(half), chain.end());
  }

  const std::size_t m = halves.size();
  const std::size_t n = half;
  std::vector<double> means(m);
  double overall = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    double s = 0.0;
    for (double x : halves[c]) s += x;
    means[c] = s / static_cast<double>(n);
    overall += means[c];
  }
  overall /= static_cast<double>(m);

  double w = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    double s = 0.0;
    for (double x : halves[c]) s += (x - means[c]) * (x - means[c]);
    w += s / static_cast<double>(n - 1);
  }
  w /= static_cast<double>(m);
  double b = 0.0;
  for (std::size_t c = 0; c < m; ++c) b += (means[c] - overall) * (means[c] - overall);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);

  if (w <= 0.0) {
    if (degenerate) *degenerate = true;
    return 1.0;
  }
  const double var_plus =
      w * static_cast<double>(n - 1) / static_cast<double>(n) + b / static_cast<double>(n);
  return std::sqrt(var_plus / w);
}

struct ScalarDiagnostic {
  std::string name;
  double ess = 0.0;
  double rel_ess = 0.0;
  double rhat = 1.0;
  bool degenerate = false;
};

struct DiagnosticsReport {
  std::vector<ScalarDiagnostic> scalars;
  std::map<std::string, double> acceptance;  // mean rate per block across chains

  double max_rhat() const {
    double v = 0.0;
    for (const auto& s : scalars) v = std::max(v, s.rhat);
    return v;
  }
  double min_rel_ess() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& s : scalars) v = std::min(v, s.rel_ess);
    return v;
  }
};

inline ScalarDiagnostic scalar_diagnostic(const std::string& name,
                                          const std::vector<std::vector<double>>& chains) {
  ScalarDiagnostic diag;
  diag.name = name;
  bool deg_ess = false, deg_rhat = false;
  diag.ess = effective_sample_size(chains, &deg_ess);
  diag.rhat = split_rhat(chains, &deg_rhat);
  diag.degenerate = deg_ess || deg_rhat;
  std::size_t total = 0;
  for (const auto& c : chains) total += c.size();
  diag.rel_ess = diag.ess / static_cast<double>(total);
  return diag;
}

// Monitors alpha, beta (when present) and the log-likelihood trace.
inline DiagnosticsReport diagnose(const std::vector<ChainOutput>& chains) {
  if (chains.empty()) throw std::invalid_argument("diagnose: no chains");
  DiagnosticsReport report;

  const bool has_beta = !chains[0].draws.empty() && chains[0].draws[0].beta.has_value();
  std::vector<std::vector<double>> alpha, beta, loglik;
  for (const auto& chain : chains) {
    std::vector<double> a, bvals;
    for (const auto& draw : chain.draws) {
      a.push_back(draw.alpha);
      if (has_beta) bvals.push_back(*draw.beta);
    }
    alpha.push_back(std::move(a));
    if (has_beta) beta.push_back(std::move(bvals));
    loglik.push_back(chain.loglik_trace);
  }
  report.scalars.push_back(scalar_diagnostic("alpha", alpha));
  if (has_beta) report.scalars.push_back(scalar_diagnostic("beta", beta));
  report.scalars.push_back(scalar_diagnostic("loglik", loglik));

  std::map<std::string, double> sums;
  for (const auto& chain : chains)
    for (const auto& [block, rate] : chain.acceptance) sums[block] += rate;
  for (const auto& [block, sum] : sums)
    report.acceptance[block] = sum / static_cast<double>(chains.size());
  return report;
}

// Monitors every coordinate plus the log-density.
inline DiagnosticsReport diagnose_generic(const std::vector<GenericChainOutput>& chains) {
  if (chains.empty()) throw std::invalid_argument("diagnose: no chains");
  DiagnosticsReport report;
  const int dim = static_cast<int>(chains[0].samples.cols());
  for (int d = 0; d < dim; ++d) {
    std::vector<std::vector<double>> coord;
    for (const auto& chain : chains) {
      std::vector<double> xs(chain.samples.rows());
      for (int r = 0; r < chain.samples.rows(); ++r) xs[r] = chain.samples(r, d);
      coord.push_back(std::move(xs));
    }
    report.scalars.push_back(scalar_diagnostic("x" + std::to_string(d), coord));
  }
  std::vector<std::vector<double>> logf;
  for (const auto& chain : chains) logf.push_back(chain.log_density);
  report.scalars.push_back(scalar_diagnostic("log_density", logf));

  double rate = 0.0;
  for (const auto& chain : chains) rate += chain.acceptance;
  report.acceptance["chain"] = rate / static_cast<double>(chains.size());
  return report;
}

}  // namespace lsm
