#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "sccm/cdn.hpp"
#include "sccm/model.hpp"
#include "sccm/quadrature.hpp"

namespace sccm {

inline constexpr double kEdgePriorOn = 0.1;  // prior probability an edge is present

inline int pair_index(int i, int j, int p) {
  // lexicographic rank of (i,j), i < j
  return i * (2 * p - i - 1) / 2 + (j - i - 1);
}

inline std::pair<int, int> pair_from_index(int pi, int p) {
  int i = 0;
  while (pair_index(i, p - 1, p) < pi) ++i;
  return {i, pi - pair_index(i, i + 1, p) + i + 1};
}

// Everything the pairwise scores need from the data, gathered in one pass.
struct SufficientStats {
  std::size_t n = 0;
  std::vector<double> zero_counts;                 // per variable, #{y = 0}
  std::vector<std::array<double, 4>> pair_counts;  // per pair, cfg = y_i*2 + y_j
  // Per group pair (m < n): distinct joint configurations of the two groups'
  // children (bit t = value of the t-th joint child) with multiplicities.
  std::map<std::pair<int, int>, std::vector<std::pair<std::uint32_t, double>>> group_configs;

  double p0_hat(int var) const { return zero_counts[var] / static_cast<double>(n); }
  // Empirical marginal clipped away from 0/1 so probit intercepts stay finite.
  double p0_clipped(int var) const;
};

SufficientStats compute_stats(const Dataset& data, const Partition& part);

// u_i(x_k) = P(Y_i = 0 | x_k) at every quadrature point.
void fill_u_grid(double slope, double intercept, const QuadratureCache& cache,
                 std::span<double> out);

// Log-likelihood contribution of one pair at a fixed dependence value, with
// the latent dimension integrated over the grid. For same-group pairs both u
// arrays are indexed by the shared latent's grid; sigma is ignored.
double pair_loglik_grid(std::span<const double> ui, std::span<const double> uj,
                        const PairShape& shape, double theta, bool same_group,
                        double sigma, const QuadratureCache& cache,
                        const std::array<double, 4>& counts);

enum class ThetaReduce {
  LogMeanExp,  // log of the prior-weighted likelihood mixture
  Mean         // weighted posterior expectation of the log-likelihood
};

double pair_score_thetas(std::span<const double> ui, std::span<const double> uj,
                         const PairShape& shape, bool same_group, double sigma,
                         const QuadratureCache& cache, const std::array<double, 4>& counts,
                         std::span<const double> thetas, std::span<const double> weights,
                         ThetaReduce reduce);

// Normalized posterior weights over a theta grid with equal prior weights.
std::vector<double> theta_grid_posterior(std::span<const double> ui,
                                         std::span<const double> uj, const PairShape& shape,
                                         bool same_group, double sigma,
                                         const QuadratureCache& cache,
                                         const std::array<double, 4>& counts,
                                         std::span<const double> thetas);

// Pair log-likelihood at a given theta, u arrays derived from params.
// Returns -inf (never throws) when an observed configuration has zero mass.
double pair_loglik_given_theta(int i, int j, const MixedGraph& g, const ModelParams& params,
                               const SufficientStats& stats, const QuadratureCache& cache,
                               double theta);

// Marginal pair score: plain log-likelihood without an edge, log-mean-exp
// over the prior theta grid with one.
double pair_score(int i, int j, const MixedGraph& g, const ModelParams& params,
                  const SufficientStats& stats, const QuadratureCache& cache, int k_theta);

double graph_log_prior(const MixedGraph& g);

// Penalized composite likelihood: sum of pair scores plus the graph prior.
double pcl(const MixedGraph& g, const ModelParams& params, const SufficientStats& stats,
           const QuadratureCache& cache, int k_theta);

// Per-edge theta grids standing in for posterior expectations, keyed by group
// pair (m < n) then edge.
using ThetaGrids = std::map<std::pair<int, int>, std::map<Edge, std::vector<double>>>;

// Lower-bound surrogate objective: no-edge pairs keep their plain terms;
// cross-group edged pairs average the log-likelihood over their posterior
// grid; within-group edged pairs average over the posteriors of every group
// pair containing the group. Graph prior and the constant kappa are excluded.
double q_objective(const MixedGraph& g, const ModelParams& params, const ThetaGrids& grids,
                   const SufficientStats& stats, const QuadratureCache& cache);

// Log-likelihood of the four pair cells implied by the (0,0) mass and the two
// univariate marginal masses; applies the shared negativity policy.
double cells_loglik(double s00, double si, double sj, const std::array<double, 4>& counts);

double log_mean_exp(std::span<const double> vals, std::span<const double> weights);

}  // namespace sccm
