#pragma once

#include <functional>
#include <vector>

namespace sccm {

// Discretization of the latent Gaussians shared by every score evaluation.
//
// The real line is cut into K cells: a uniform grid on [-q99, q99]
// (q99 = Phi^{-1}(0.99)) supplies the interior evaluation points, cell
// boundaries sit at grid midpoints, and the two outer cells run to +-inf.
// Weights are exact cell masses (1-D) and exact rectangle masses under the
// bivariate normal for every grid correlation (2-D, adaptive quadrature).
// The two unbounded cells are evaluated at their conditional means rather
// than at the grid endpoints; with endpoint abscissae the tail mass sits too
// far in, and grid moments of high-|sigma| bivariate normals come out
// visibly biased no matter how large K is.
struct QuadratureCache {
  int K = 0;
  std::vector<double> points;      // evaluation abscissae, size K
  std::vector<double> boundaries;  // size K+1; [0] = -inf, [K] = +inf
  std::vector<double> w1;          // 1-D cell masses, sum 1
  std::vector<std::vector<double>> w2;        // per grid sigma, K*K row-major
  std::vector<std::vector<double>> w2_rows;   // per grid sigma, row sums
  std::vector<std::vector<double>> w2_cols;   // per grid sigma, column sums

  const std::vector<double>& weights2(double sigma) const;
  const std::vector<double>& row_sums(double sigma) const;
  const std::vector<double>& col_sums(double sigma) const;
};

// K must be odd (>= 3). Builds all 100 grid correlations; the negative-sigma
// tables reuse the positive ones via column reversal, and each positive table
// only needs its upper triangle integrated.
QuadratureCache build_quadrature_cache(int K = 21);

// Index into sigma_grid(); errors if sigma is not a grid value.
int sigma_index(double sigma);

// Grid expectations of f under the latent normal(s). Exact for constant f;
// sigma must be a grid correlation.
double integrate_latent_1d(const std::function<double(double)>& f,
                           const QuadratureCache& cache);
double integrate_pair_latent(const std::function<double(double, double)>& f, double sigma,
                             const QuadratureCache& cache);

// Equal-weight quantile grids for the dependence parameter, mapped through
// the logistic squash. The prior grid uses a standard normal in z-space.
std::vector<double> theta_grid_prior(int k_theta);
std::vector<double> theta_grid_gaussian(double mean, double var, int k_theta);

// Adaptive Simpson integration to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol);

}  // namespace sccm
