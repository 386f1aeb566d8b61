#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "sccm/errors.hpp"
#include "sccm/normal.hpp"

namespace sccm {

// Dependence parameters live on (-th_max, th_max) via the logistic squash.
inline constexpr double kThetaMax = 25.0;
inline constexpr double kThetaIndepEps = 1e-6;

inline double squash_theta(double z) { return 50.0 / (1.0 + std::exp(-z)) - 25.0; }

inline double unsquash_theta(double theta) {
  if (!(std::fabs(theta) < kThetaMax))
    throw DomainError("unsquash_theta: |theta| must be < 25");
  return std::log((kThetaMax + theta) / (kThetaMax - theta));
}

namespace detail {

// Clamp to the Frechet-Hoeffding bounds; sub-ulp rounding spill outside them
// would otherwise surface as negative cell probabilities downstream.
inline double frechet_clamp(double c, double u, double v) {
  double lo = std::max(0.0, u + v - 1.0);
  double hi = std::min(u, v);
  return std::min(std::max(c, lo), hi);
}

}  // namespace detail

// Frank copula CDF. Branches avoid catastrophic cancellation on both signs of
// theta; near zero the copula is the independence product to O(theta).
inline double frank_cdf(double u, double v, double theta) {
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0))
    throw DomainError("frank_cdf: u and v must lie in [0,1]");
  if (std::fabs(theta) <= kThetaIndepEps) return u * v;

  double c;
  if (theta < 0.0) {
    double a = std::expm1(-theta * u);
    double b = std::expm1(-theta * v);
    double d = std::expm1(-theta);
    c = -std::log1p(a * b / d) / theta;
  } else {
    // d - (1-e^{-t u})(1-e^{-t v}) rewritten as a sum of positive terms.
    double d = -std::expm1(-theta);
    double s = std::exp(-theta * u) * (-std::expm1(-theta * v)) +
               std::exp(-theta * v) * (-std::expm1(-theta * (1.0 - v)));
    c = -(std::log(s) - std::log(d)) / theta;
  }
  return detail::frechet_clamp(c, u, v);
}

// Dense evaluation of C(us[r], vs[c]; theta) into out[r*vs.size()+c].
// Same branch structure as frank_cdf with the per-axis transcendentals hoisted.
inline void frank_cdf_grid(std::span<const double> us, std::span<const double> vs,
                           double theta, std::span<double> out) {
  const std::size_t nu = us.size(), nv = vs.size();
  if (std::fabs(theta) <= kThetaIndepEps) {
    for (std::size_t r = 0; r < nu; ++r)
      for (std::size_t c = 0; c < nv; ++c) out[r * nv + c] = us[r] * vs[c];
    return;
  }
  std::vector<double> colA(nv), colB(nv);
  if (theta < 0.0) {
    double inv_d = 1.0 / std::expm1(-theta);
    for (std::size_t c = 0; c < nv; ++c) colA[c] = std::expm1(-theta * vs[c]) * inv_d;
    for (std::size_t r = 0; r < nu; ++r) {
      double a = std::expm1(-theta * us[r]);
      for (std::size_t c = 0; c < nv; ++c) {
        double val = -std::log1p(a * colA[c]) / theta;
        out[r * nv + c] = detail::frechet_clamp(val, us[r], vs[c]);
      }
    }
  } else {
    double logd = std::log(-std::expm1(-theta));
    for (std::size_t c = 0; c < nv; ++c) {
      colA[c] = -std::expm1(-theta * vs[c]);
      colB[c] = std::exp(-theta * vs[c]) * (-std::expm1(-theta * (1.0 - vs[c])));
    }
    for (std::size_t r = 0; r < nu; ++r) {
      double eu = std::exp(-theta * us[r]);
      for (std::size_t c = 0; c < nv; ++c) {
        double s = eu * colA[c] + colB[c];
        double val = -(std::log(s) - logd) / theta;
        out[r * nv + c] = detail::frechet_clamp(val, us[r], vs[c]);
      }
    }
  }
}

// P(Y <= y | x) for the probit link; binary y, so only y=0 is nontrivial.
inline double probit_cond_cdf(int y, double x, double slope, double intercept) {
  if (y < 0) return 0.0;
  if (y >= 1) return 1.0;
  return norm_cdf(-(slope * x + intercept));
}

// Intercept that reproduces a target marginal P(Y=0) = p0 for a given slope
// when the latent parent is standard normal.
inline double intercept_from_marginal(double slope, double p0) {
  if (!(p0 > 0.0 && p0 < 1.0))
    throw DataError("intercept_from_marginal: marginal must lie strictly in (0,1)");
  return -std::sqrt(1.0 + slope * slope) * norm_ppf(p0);
}

}  // namespace sccm
