#pragma once

#include <span>
#include <vector>

#include "sccm/model.hpp"
#include "sccm/quadrature.hpp"
#include "sccm/score.hpp"

namespace sccm {

struct LaplaceConfig {
  int max_iters = 200;
  double grad_tol = 1e-5;   // infinity norm of the FD gradient at the mode
  double fd_step = 1e-4;    // central-difference step in z-space
  double eig_floor = 1e-8;  // eigenvalue floor for the negated Hessian
  double max_step = 4.0;    // trust cap on the Newton step norm (z-space)
};

// Gaussian approximation of the posterior over the z-space dependence
// parameters of all edges inside one group pair's joint children.
struct LaplacePosterior {
  int m = 0, n = 0;
  std::vector<Edge> edges;   // sorted; z/mode/cov dimensions follow this order
  std::vector<double> mode;  // z-space
  std::vector<double> cov;   // dim x dim, row-major
  bool converged = true;
  int iters = 0;

  int dim() const { return static_cast<int>(edges.size()); }
};

// Data log-likelihood of group pair (m,n) as a function of the z-space
// dependence vector (one entry per edge among the joint children, sorted
// edge order). The standard-normal prior on z is not included.
double group_pair_loglik(int m, int n, const MixedGraph& g, const ModelParams& params,
                         const SufficientStats& stats, const QuadratureCache& cache,
                         std::span<const double> z);

// The prior itself in posterior form: mode 0, identity covariance over the
// group pair's edges.
LaplacePosterior prior_posterior(int m, int n, const MixedGraph& g);

// Damped Newton ascent on log-likelihood + log-prior with finite-difference
// derivatives; covariance from the eigenvalue-floored negated Hessian at the
// mode. No data for the pair -> standard normal posterior.
LaplacePosterior fit_group_pair_posterior(int m, int n, const MixedGraph& g,
                                          const ModelParams& params,
                                          const SufficientStats& stats,
                                          const QuadratureCache& cache,
                                          const LaplaceConfig& cfg = {});

// Quantile grid of the univariate posterior marginal of one edge, mapped to
// theta space. The edge must belong to the posterior.
std::vector<double> marginal_theta_grid(const LaplacePosterior& post, const Edge& e,
                                        int k_theta);

// Grids for every group pair's edges, ready for q_objective.
ThetaGrids grids_from_posteriors(const std::vector<LaplacePosterior>& posts, int k_theta);

// Spec-shaped convenience overload of the surrogate objective.
double q_objective(const MixedGraph& g, const ModelParams& params,
                   const std::vector<LaplacePosterior>& posts, const SufficientStats& stats,
                   const QuadratureCache& cache, int k_theta);

}  // namespace sccm
