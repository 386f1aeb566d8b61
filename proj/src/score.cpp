#include "sccm/score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "sccm/copula.hpp"
#include "sccm/errors.hpp"
#include "sccm/normal.hpp"

namespace sccm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::array<double, 4> cells_from_sums(double s00, double si, double sj);

// Four cell masses of a pair marginal after integrating the latents over the
// grid. Only the (0,0) cell needs the copula table; the others follow from
// the univariate grid marginals and total mass 1.
std::array<double, 4> cell_masses(std::span<const double> ui, std::span<const double> uj,
                                  const PairShape& shape, double theta, bool same_group,
                                  double sigma, const QuadratureCache& cache) {
  const int K = cache.K;
  thread_local std::vector<double> uhi, uhj, franks;
  double s00 = 0.0, si = 0.0, sj = 0.0;

  if (same_group) {
    const double* w1 = cache.w1.data();
    for (int k = 0; k < K; ++k) {
      si += w1[k] * ui[k];
      sj += w1[k] * uj[k];
    }
    if (!shape.edged) {
      for (int k = 0; k < K; ++k) s00 += w1[k] * ui[k] * uj[k];
    } else {
      for (int k = 0; k < K; ++k) {
        double uh_i = pow_inv_h(ui[k], shape.inv_hi);
        double uh_j = pow_inv_h(uj[k], shape.inv_hj);
        double resid = (uh_i > 0.0 ? ui[k] / uh_i : 0.0) * (uh_j > 0.0 ? uj[k] / uh_j : 0.0);
        s00 += w1[k] * frank_cdf(uh_i, uh_j, theta) * resid;
      }
    }
  } else {
    const std::vector<double>& w2 = cache.weights2(sigma);
    const std::vector<double>& rows = cache.row_sums(sigma);
    const std::vector<double>& cols = cache.col_sums(sigma);
    for (int k = 0; k < K; ++k) si += rows[k] * ui[k];
    for (int l = 0; l < K; ++l) sj += cols[l] * uj[l];
    if (!shape.edged) {
      for (int k = 0; k < K; ++k) {
        double acc = 0.0;
        const double* wrow = w2.data() + static_cast<std::size_t>(k) * K;
        for (int l = 0; l < K; ++l) acc += wrow[l] * uj[l];
        s00 += ui[k] * acc;
      }
    } else {
      uhi.resize(K);
      uhj.resize(K);
      franks.resize(static_cast<std::size_t>(K) * K);
      for (int k = 0; k < K; ++k) uhi[k] = pow_inv_h(ui[k], shape.inv_hi);
      for (int l = 0; l < K; ++l) uhj[l] = pow_inv_h(uj[l], shape.inv_hj);
      frank_cdf_grid(std::span(uhi).subspan(0, K), std::span(uhj).subspan(0, K), theta,
                     std::span(franks).subspan(0, static_cast<std::size_t>(K) * K));
      for (int k = 0; k < K; ++k) {
        double ri = uhi[k] > 0.0 ? ui[k] / uhi[k] : 0.0;
        const double* wrow = w2.data() + static_cast<std::size_t>(k) * K;
        const double* frow = franks.data() + static_cast<std::size_t>(k) * K;
        double acc = 0.0;
        for (int l = 0; l < K; ++l) {
          double rj = uhj[l] > 0.0 ? uj[l] / uhj[l] : 0.0;
          acc += wrow[l] * frow[l] * rj;
        }
        s00 += ri * acc;
      }
    }
  }

  return cells_from_sums(s00, si, sj);
}

double counts_loglik(const std::array<double, 4>& p, const std::array<double, 4>& counts) {
  double ll = 0.0;
  for (int c = 0; c < 4; ++c) {
    if (counts[c] <= 0.0) continue;
    if (p[c] <= 0.0) return kNegInf;
    ll += counts[c] * std::log(p[c]);
  }
  return ll;
}

std::array<double, 4> cells_from_sums(double s00, double si, double sj) {
  std::array<double, 4> p{s00, si - s00, sj - s00, 1.0 - si - sj + s00};
  for (double& v : p) {
    if (v < 0.0) {
      if (v < kNegativityTol) throw NumericError("pair marginal: negative cell mass");
      v = 0.0;
    }
  }
  return p;
}

}  // namespace

double cells_loglik(double s00, double si, double sj, const std::array<double, 4>& counts) {
  return counts_loglik(cells_from_sums(s00, si, sj), counts);
}

double SufficientStats::p0_clipped(int var) const {
  double lo = 1.0 / (static_cast<double>(n) + 2.0);
  return std::min(std::max(p0_hat(var), lo), 1.0 - lo);
}

SufficientStats compute_stats(const Dataset& data, const Partition& part) {
  if (data.n == 0) throw DataError("stats: empty dataset");
  if (data.p != static_cast<std::size_t>(part.n_vars()) || data.names != part.var_names())
    throw DataError("stats: dataset not aligned with partition");

  const int p = part.n_vars();
  const int G = part.n_groups();
  SufficientStats s;
  s.n = data.n;
  s.zero_counts.assign(p, 0.0);
  s.pair_counts.assign(static_cast<std::size_t>(p) * (p - 1) / 2, {0.0, 0.0, 0.0, 0.0});

  std::vector<std::pair<int, int>> gpairs;
  std::vector<std::vector<int>> gp_vars;
  for (int m = 0; m < G; ++m)
    for (int n2 = m + 1; n2 < G; ++n2) {
      gpairs.emplace_back(m, n2);
      std::vector<int> vars = part.group_members(m);
      const auto& other = part.group_members(n2);
      vars.insert(vars.end(), other.begin(), other.end());
      std::sort(vars.begin(), vars.end());
      if (vars.size() > 31) throw DataError("stats: group pair too large for config masks");
      gp_vars.push_back(std::move(vars));
    }
  std::vector<std::unordered_map<std::uint32_t, double>> gp_counts(gpairs.size());

  for (std::size_t r = 0; r < data.n; ++r) {
    const std::uint8_t* row = data.values.data() + r * data.p;
    for (int i = 0; i < p; ++i)
      if (row[i] == 0) s.zero_counts[i] += 1.0;
    int pi = 0;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j, ++pi)
        s.pair_counts[pi][row[i] * 2 + row[j]] += 1.0;
    for (std::size_t gp = 0; gp < gpairs.size(); ++gp) {
      std::uint32_t mask = 0;
      for (std::size_t t = 0; t < gp_vars[gp].size(); ++t)
        mask |= static_cast<std::uint32_t>(row[gp_vars[gp][t]]) << t;
      gp_counts[gp][mask] += 1.0;
    }
  }
  for (std::size_t gp = 0; gp < gpairs.size(); ++gp) {
    auto& out = s.group_configs[gpairs[gp]];
    out.assign(gp_counts[gp].begin(), gp_counts[gp].end());
    std::sort(out.begin(), out.end());
  }
  return s;
}

void fill_u_grid(double slope, double intercept, const QuadratureCache& cache,
                 std::span<double> out) {
  for (int k = 0; k < cache.K; ++k)
    out[k] = norm_cdf(-(slope * cache.points[k] + intercept));
}

double pair_loglik_grid(std::span<const double> ui, std::span<const double> uj,
                        const PairShape& shape, double theta, bool same_group,
                        double sigma, const QuadratureCache& cache,
                        const std::array<double, 4>& counts) {
  return counts_loglik(cell_masses(ui, uj, shape, theta, same_group, sigma, cache), counts);
}

double pair_score_thetas(std::span<const double> ui, std::span<const double> uj,
                         const PairShape& shape, bool same_group, double sigma,
                         const QuadratureCache& cache, const std::array<double, 4>& counts,
                         std::span<const double> thetas, std::span<const double> weights,
                         ThetaReduce reduce) {
  std::vector<double> lls(thetas.size());
  for (std::size_t t = 0; t < thetas.size(); ++t)
    lls[t] = pair_loglik_grid(ui, uj, shape, thetas[t], same_group, sigma, cache, counts);
  if (reduce == ThetaReduce::LogMeanExp) return log_mean_exp(lls, weights);
  double acc = 0.0;
  for (std::size_t t = 0; t < lls.size(); ++t) {
    if (lls[t] == kNegInf) return kNegInf;
    acc += weights[t] * lls[t];
  }
  return acc;
}

std::vector<double> theta_grid_posterior(std::span<const double> ui,
                                         std::span<const double> uj, const PairShape& shape,
                                         bool same_group, double sigma,
                                         const QuadratureCache& cache,
                                         const std::array<double, 4>& counts,
                                         std::span<const double> thetas) {
  std::vector<double> ll(thetas.size());
  double mx = kNegInf;
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    ll[t] = pair_loglik_grid(ui, uj, shape, thetas[t], same_group, sigma, cache, counts);
    mx = std::max(mx, ll[t]);
  }
  if (mx == kNegInf) throw NumericError("theta posterior: likelihood vanished on entire grid");
  double z = 0.0;
  for (double& v : ll) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : ll) v /= z;
  return ll;
}

namespace {

struct PairUBuffers {
  std::vector<double> ui, uj;
};

double pair_sigma(const Partition& part, const ModelParams& params, int i, int j,
                  bool& same_group) {
  int m = part.group_of(i), n = part.group_of(j);
  same_group = (m == n);
  return same_group ? 0.0 : params.sig(m, n, part.n_groups());
}

}  // namespace

double pair_loglik_given_theta(int i, int j, const MixedGraph& g, const ModelParams& params,
                               const SufficientStats& stats, const QuadratureCache& cache,
                               double theta) {
  if (i > j) std::swap(i, j);
  const Partition& part = g.partition();
  thread_local PairUBuffers buf;
  buf.ui.resize(cache.K);
  buf.uj.resize(cache.K);
  fill_u_grid(params.slopes[i], params.intercepts[i], cache, buf.ui);
  fill_u_grid(params.slopes[j], params.intercepts[j], cache, buf.uj);
  bool same_group = false;
  double sigma = pair_sigma(part, params, i, j, same_group);
  return pair_loglik_grid(buf.ui, buf.uj, pair_shape(i, j, g), theta, same_group, sigma,
                          cache, stats.pair_counts[pair_index(i, j, part.n_vars())]);
}

double pair_score(int i, int j, const MixedGraph& g, const ModelParams& params,
                  const SufficientStats& stats, const QuadratureCache& cache, int k_theta) {
  if (i > j) std::swap(i, j);
  const Partition& part = g.partition();
  PairShape shape = pair_shape(i, j, g);
  if (!shape.edged) return pair_loglik_given_theta(i, j, g, params, stats, cache, 0.0);

  thread_local PairUBuffers buf;
  buf.ui.resize(cache.K);
  buf.uj.resize(cache.K);
  fill_u_grid(params.slopes[i], params.intercepts[i], cache, buf.ui);
  fill_u_grid(params.slopes[j], params.intercepts[j], cache, buf.uj);
  bool same_group = false;
  double sigma = pair_sigma(part, params, i, j, same_group);
  std::vector<double> thetas = theta_grid_prior(k_theta);
  std::vector<double> weights(thetas.size(), 1.0 / k_theta);
  return pair_score_thetas(buf.ui, buf.uj, shape, same_group, sigma, cache,
                           stats.pair_counts[pair_index(i, j, part.n_vars())], thetas,
                           weights, ThetaReduce::LogMeanExp);
}

double graph_log_prior(const MixedGraph& g) {
  int p = g.partition().n_vars();
  double total = p * (p - 1) / 2.0;
  double e = g.edge_count();
  return e * std::log(kEdgePriorOn) + (total - e) * std::log(1.0 - kEdgePriorOn);
}

double pcl(const MixedGraph& g, const ModelParams& params, const SufficientStats& stats,
           const QuadratureCache& cache, int k_theta) {
  const int p = g.partition().n_vars();
  double total = graph_log_prior(g);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      total += pair_score(i, j, g, params, stats, cache, k_theta);
  return total;
}

double q_objective(const MixedGraph& g, const ModelParams& params, const ThetaGrids& grids,
                   const SufficientStats& stats, const QuadratureCache& cache) {
  const Partition& part = g.partition();
  const int p = part.n_vars();
  const int G = part.n_groups();
  if (G < 2) throw DataError("q objective: needs at least two groups");

  thread_local PairUBuffers buf;
  buf.ui.resize(cache.K);
  buf.uj.resize(cache.K);

  double total = 0.0;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      PairShape shape = pair_shape(i, j, g);
      const auto& counts = stats.pair_counts[pair_index(i, j, p)];
      bool same_group = false;
      double sigma = pair_sigma(part, params, i, j, same_group);
      if (!shape.edged) {
        total += pair_loglik_given_theta(i, j, g, params, stats, cache, 0.0);
        continue;
      }
      fill_u_grid(params.slopes[i], params.intercepts[i], cache, buf.ui);
      fill_u_grid(params.slopes[j], params.intercepts[j], cache, buf.uj);
      Edge e(i, j);
      std::vector<double> thetas;
      std::vector<double> weights;
      if (!same_group) {
        int m = part.group_of(i), n = part.group_of(j);
        const auto& grid = grids.at({std::min(m, n), std::max(m, n)}).at(e);
        thetas.assign(grid.begin(), grid.end());
        weights.assign(grid.size(), 1.0 / static_cast<double>(grid.size()));
      } else {
        int m = part.group_of(i);
        double gw = 1.0 / static_cast<double>(G - 1);
        for (int n2 = 0; n2 < G; ++n2) {
          if (n2 == m) continue;
          const auto& grid = grids.at({std::min(m, n2), std::max(m, n2)}).at(e);
          for (double th : grid) {
            thetas.push_back(th);
            weights.push_back(gw / static_cast<double>(grid.size()));
          }
        }
      }
      total += pair_score_thetas(buf.ui, buf.uj, shape, same_group, sigma, cache, counts,
                                 thetas, weights, ThetaReduce::Mean);
    }
  return total;
}

double log_mean_exp(std::span<const double> vals, std::span<const double> weights) {
  double mx = kNegInf;
  for (double v : vals) mx = std::max(mx, v);
  if (mx == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t t = 0; t < vals.size(); ++t)
    if (vals[t] != kNegInf) acc += weights[t] * std::exp(vals[t] - mx);
  return mx + std::log(acc);
}

}  // namespace sccm
