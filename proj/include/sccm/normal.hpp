#pragma once

#include <cmath>

#include "sccm/errors.hpp"

namespace sccm {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Complement-based form keeps full relative accuracy in the lower tail.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

// Acklam's rational approximation (|rel err| < 1.2e-9) plus one Halley step,
// which is near machine precision everywhere we evaluate it.
inline double norm_ppf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("norm_ppf: p must lie in (0,1)");

  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};

  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  double pdf = norm_pdf(x);
  if (pdf > 1e-280) {
    double e = norm_cdf(x) - p;
    double u = e / pdf;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

// Log of the bivariate standard normal density with correlation rho.
inline double binorm_logpdf(double a, double b, double rho) {
  double om = 1.0 - rho * rho;
  if (om <= 0.0) throw DomainError("binorm_logpdf: |rho| must be < 1");
  return -std::log(2.0 * M_PI) - 0.5 * std::log(om) -
         (a * a - 2.0 * rho * a * b + b * b) / (2.0 * om);
}

}  // namespace sccm
