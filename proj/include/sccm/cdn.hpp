#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "sccm/model.hpp"
#include "sccm/rng.hpp"

namespace sccm {

// Largest bi-directed component (and elimination scope) exact inference will
// attempt; beyond this the tables are too big to be worth building.
inline constexpr int kComponentCap = 25;
// PMF values in [-1e-9, 0) are rounding noise and get clamped to zero;
// anything more negative indicates a real inconsistency.
inline constexpr double kNegativityTol = -1e-9;

// Joint CDF of the variables in `vars` evaluated at integer arguments
// (y < 0 -> impossible, y = 0 -> {Y=0}, y >= 1 -> sure event), conditional on
// latent values x (one per group). Variables outside `vars` are marginalized,
// which in a CDN just means their arguments are +inf. Exponents always come
// from the full graph.
double conditional_cdf(std::span<const int> vars, std::span<const int> y,
                       const MixedGraph& g, const ModelParams& params,
                       std::span<const double> x);

// Exact joint PMF of the variables in `vars` (y values 0/1) given latents x.
// Factorizes over the bi-directed components induced on `vars`; each
// component is summed by inclusion-exclusion over sign-carrying flip
// variables, organized as variable elimination with a min-degree order.
double pmf(std::span<const int> vars, std::span<const int> y, const MixedGraph& g,
           const ModelParams& params, std::span<const double> x);

// Fixed per-pair quantities for the closed-form bivariate marginal.
struct PairShape {
  double inv_hi = 1.0;
  double inv_hj = 1.0;
  bool edged = false;
};
PairShape pair_shape(int i, int j, const MixedGraph& g);

// u^(1/h) for the small integer factor counts that actually occur.
inline double pow_inv_h(double u, double inv_h) {
  if (inv_h == 1.0) return u;
  if (inv_h == 0.5) return std::sqrt(u);
  return std::pow(u, inv_h);
}

// All four cells of the bivariate marginal of (Y_i, Y_j) given u_i = P(Y_i=0|x)
// and u_j, indexed y_i*2 + y_j. Only the (0,0) cell needs the copula; the rest
// follow from the univariate marginals.
std::array<double, 4> biv_cells(double ui, double uj, const PairShape& shape, double theta);

// Convenience wrapper computing u's from params and latents.
std::array<double, 4> bivariate_pmf(int i, int j, const MixedGraph& g,
                                    const ModelParams& params, double xi, double xj);

// One exact draw of all observed variables given latents x, by sequential
// conditionals in canonical order.
std::vector<std::uint8_t> sample_config(const MixedGraph& g, const ModelParams& params,
                                        std::span<const double> x, Rng& rng);

}  // namespace sccm
