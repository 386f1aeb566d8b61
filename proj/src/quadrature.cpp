#include "sccm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sccm/copula.hpp"
#include "sccm/errors.hpp"
#include "sccm/model.hpp"
#include "sccm/normal.hpp"

namespace sccm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Integration window: normal mass beyond +-9 is ~1e-19, far under tolerance.
constexpr double kXCut = 9.0;

// Compensated (Neumaier) sum; integrate_* use the same accumulation so the
// exactness fix-up below carries over to constant integrands bit-for-bit.
double comp_sum(const double* v, std::size_t n) {
  double acc = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = acc + v[i];
    comp += std::fabs(acc) >= std::fabs(v[i]) ? (acc - t) + v[i] : (v[i] - t) + acc;
    acc = t;
  }
  return acc + comp;
}

// Scale to unit total, then nudge the largest cell until the compensated
// sum is exactly 1.0, so a constant integrand comes out bit-exact.
void normalize_exact(std::vector<double>& w) {
  double tot = comp_sum(w.data(), w.size());
  for (double& v : w) v /= tot;
  std::size_t big = 0;
  for (std::size_t i = 1; i < w.size(); ++i)
    if (w[i] > w[big]) big = i;
  for (int pass = 0; pass < 8; ++pass) {
    double s = comp_sum(w.data(), w.size());
    if (s == 1.0) return;
    w[big] += 1.0 - s;
  }
}

double simpson_rec(const std::function<double(double)>& f, double a, double m, double b,
                   double fa, double fm, double fb, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  if (!(a < b)) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, 40);
}

int sigma_index(double sigma) {
  if (!sigma_on_grid(sigma)) throw NumericError("sigma is not on the correlation grid");
  double snapped = snap_sigma(sigma);
  return static_cast<int>(std::lround((snapped + 0.99) / 0.02));
}

const std::vector<double>& QuadratureCache::weights2(double sigma) const {
  return w2[sigma_index(sigma)];
}
const std::vector<double>& QuadratureCache::row_sums(double sigma) const {
  return w2_rows[sigma_index(sigma)];
}
const std::vector<double>& QuadratureCache::col_sums(double sigma) const {
  return w2_cols[sigma_index(sigma)];
}

QuadratureCache build_quadrature_cache(int K) {
  if (K < 3 || K % 2 == 0) throw UsageError("quadrature grid size must be odd and >= 3");

  QuadratureCache c;
  c.K = K;
  const double q99 = norm_ppf(0.99);
  const double step = 2.0 * q99 / (K - 1);

  std::vector<double> grid(K);
  for (int k = 0; k < K; ++k) grid[k] = -q99 + step * k;

  c.boundaries.assign(K + 1, 0.0);
  c.boundaries[0] = -kInf;
  c.boundaries[K] = kInf;
  for (int k = 1; k < K; ++k) c.boundaries[k] = 0.5 * (grid[k - 1] + grid[k]);

  c.points = grid;
  double b1 = c.boundaries[1];
  double tail_mean = norm_pdf(b1) / norm_cdf(b1);  // E[X | X < b1], magnitude
  c.points[0] = -tail_mean;
  c.points[K - 1] = tail_mean;

  c.w1.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    double hi = c.boundaries[k + 1] == kInf ? 1.0 : norm_cdf(c.boundaries[k + 1]);
    double lo = c.boundaries[k] == -kInf ? 0.0 : norm_cdf(c.boundaries[k]);
    c.w1[k] = hi - lo;
  }
  normalize_exact(c.w1);

  const auto& sgrid = sigma_grid();
  c.w2.assign(sgrid.size(), {});
  c.w2_rows.assign(sgrid.size(), {});
  c.w2_cols.assign(sgrid.size(), {});

  for (std::size_t s = 0; s < sgrid.size(); ++s) {
    double sigma = sgrid[s];
    if (sigma < 0.0) continue;  // filled from the mirrored positive table below
    double root = std::sqrt(1.0 - sigma * sigma);
    std::vector<double>& w = c.w2[s];
    w.assign(static_cast<std::size_t>(K) * K, 0.0);
    for (int k = 0; k < K; ++k) {
      double xa = std::max(c.boundaries[k], -kXCut);
      double xb = std::min(c.boundaries[k + 1], kXCut);
      for (int l = k; l < K; ++l) {
        double bl = c.boundaries[l], bh = c.boundaries[l + 1];
        auto f = [&](double x) {
          double hi = bh == kInf ? 1.0 : norm_cdf((bh - sigma * x) / root);
          double lo = bl == -kInf ? 0.0 : norm_cdf((bl - sigma * x) / root);
          return norm_pdf(x) * (hi - lo);
        };
        double mass = adaptive_simpson(f, xa, xb, 1e-8);
        w[k * K + l] = mass;
        w[l * K + k] = mass;
      }
    }
    normalize_exact(w);
  }
  for (std::size_t s = 0; s < sgrid.size(); ++s) {
    if (sgrid[s] >= 0.0) continue;
    int mirror = sigma_index(-sgrid[s]);
    const std::vector<double>& src = c.w2[mirror];
    std::vector<double>& w = c.w2[s];
    w.assign(static_cast<std::size_t>(K) * K, 0.0);
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l) w[k * K + l] = src[k * K + (K - 1 - l)];
    normalize_exact(w);
  }
  for (std::size_t s = 0; s < sgrid.size(); ++s) {
    auto& rows = c.w2_rows[s];
    auto& cols = c.w2_cols[s];
    rows.assign(K, 0.0);
    cols.assign(K, 0.0);
    const auto& w = c.w2[s];
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l) {
        rows[k] += w[k * K + l];
        cols[l] += w[k * K + l];
      }
  }
  return c;
}

double integrate_latent_1d(const std::function<double(double)>& f,
                           const QuadratureCache& cache) {
  std::vector<double> terms(cache.K);
  for (int k = 0; k < cache.K; ++k) terms[k] = cache.w1[k] * f(cache.points[k]);
  return comp_sum(terms.data(), terms.size());
}

double integrate_pair_latent(const std::function<double(double, double)>& f, double sigma,
                             const QuadratureCache& cache) {
  const std::vector<double>& w = cache.weights2(sigma);
  const int K = cache.K;
  std::vector<double> terms(static_cast<std::size_t>(K) * K);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l)
      terms[k * K + l] = w[k * K + l] * f(cache.points[k], cache.points[l]);
  return comp_sum(terms.data(), terms.size());
}

std::vector<double> theta_grid_prior(int k_theta) {
  if (k_theta < 1) throw UsageError("theta grid size must be positive");
  std::vector<double> out(k_theta);
  for (int t = 1; t <= k_theta; ++t)
    out[t - 1] = squash_theta(norm_ppf((t - 0.5) / k_theta));
  return out;
}

std::vector<double> theta_grid_gaussian(double mean, double var, int k_theta) {
  if (k_theta < 1) throw UsageError("theta grid size must be positive");
  if (!(var >= 0.0)) throw DomainError("theta grid: variance must be nonnegative");
  double sd = std::sqrt(var);
  std::vector<double> out(k_theta);
  for (int t = 1; t <= k_theta; ++t)
    out[t - 1] = squash_theta(mean + sd * norm_ppf((t - 0.5) / k_theta));
  return out;
}

}  // namespace sccm
