#pragma once

#include <memory>
#include <vector>

#include "sccm/model.hpp"
#include "sccm/rng.hpp"

namespace sccm {

struct SynthConfig {
  int n_groups = 4;
  int children_per_group = 4;
  double edge_prob = 0.2;
  int max_degree = 3;
  int independence_size = 3;  // per group: children pairwise non-adjacent
  double slope_s_lo = 0.2, slope_s_hi = 0.6;
  double marg_lo = 0.1, marg_hi = 0.9;
  double theta_lo = 10.0, theta_hi = 15.0;
};

struct TrueModel {
  std::shared_ptr<const Partition> partition;
  MixedGraph graph;
  ModelParams params;             // sigma snapped to the grid
  std::vector<double> sigma_raw;  // unsnapped correlations used for sampling
};

// Random ground-truth instance: Bernoulli edges pruned until each group keeps
// an induced independent triple and no variable exceeds the degree cap, then
// random coefficients and a Wishart-derived latent correlation matrix.
TrueModel gen_true_model(const SynthConfig& cfg, Rng& rng);

// N rows sampled exactly: latents by Cholesky, observations by sequential
// conditionals.
Dataset gen_dataset(const TrueModel& truth, std::size_t n, Rng& rng);

}  // namespace sccm
