#include "sccm/laplace.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sccm/copula.hpp"
#include "sccm/errors.hpp"

namespace sccm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Edges whose both endpoints lie among the joint children of (m,n).
std::vector<Edge> edges_within(int m, int n, const MixedGraph& g) {
  std::vector<int> vars = g.joint_children(m, n);
  std::vector<Edge> out;
  for (const Edge& e : g.edges())
    if (std::binary_search(vars.begin(), vars.end(), e.a) &&
        std::binary_search(vars.begin(), vars.end(), e.b))
      out.push_back(e);
  return out;
}

// Precomputed machinery for repeated evaluations of one group pair's
// log-likelihood at different dependence vectors. Everything that does not
// depend on z (u grids, residual exponents, per-config factor wiring) is
// built once; per evaluation we only rebuild Frank tables and component PMFs.
class GroupPairLikelihood {
 public:
  GroupPairLikelihood(int m, int n, const MixedGraph& g, const ModelParams& params,
                      const SufficientStats& stats, const QuadratureCache& cache)
      : g_(g), cache_(cache), K_(cache.K) {
    const Partition& part = g.partition();
    vars_ = g.joint_children(m, n);
    edges_ = edges_within(m, n, g);
    sigma_ = params.sig(std::min(m, n), std::max(m, n), part.n_groups());
    auto it = stats.group_configs.find({std::min(m, n), std::max(m, n)});
    if (it != stats.group_configs.end()) configs_ = it->second;

    // Per variable: grid of u values on its own group's axis, plus the
    // residual exponent left after in-pair copula factors are taken out.
    int axis_group = std::min(m, n);
    u0_.assign(vars_.size(), {});
    ur_.assign(vars_.size(), {});
    axis_.assign(vars_.size(), 0);
    slot_.clear();
    for (std::size_t t = 0; t < vars_.size(); ++t) slot_[vars_[t]] = static_cast<int>(t);

    std::vector<int> deg_in(vars_.size(), 0);
    for (const Edge& e : edges_) {
      ++deg_in[slot_[e.a]];
      ++deg_in[slot_[e.b]];
    }
    for (std::size_t t = 0; t < vars_.size(); ++t) {
      int v = vars_[t];
      axis_[t] = part.group_of(v) == axis_group ? 0 : 1;
      u0_[t].resize(K_);
      fill_u_grid(params.slopes[v], params.intercepts[v], cache, u0_[t]);
      int deg = g.degree(v);
      double resid = deg > 0 ? static_cast<double>(deg - deg_in[t]) / g.factor_count(v) : 1.0;
      ur_[t].resize(K_);
      for (int k = 0; k < K_; ++k)
        ur_[t][k] = resid == 0.0 ? 1.0 : std::pow(u0_[t][k], resid);
      // u^{1/h} for in-pair copula arguments.
      uh_.emplace_back(K_);
      double inv_h = 1.0 / g.factor_count(v);
      for (int k = 0; k < K_; ++k) uh_.back()[k] = pow_inv_h(u0_[t][k], inv_h);
    }

    // Components with >= 2 members get the inclusion-exclusion treatment;
    // singletons are plain Bernoulli factors.
    for (const auto& comp : g_.bidirected_components(vars_)) {
      if (comp.size() == 1) {
        singles_.push_back(slot_[comp[0]]);
        continue;
      }
      Component c;
      for (int v : comp) c.slots.push_back(slot_[v]);
      if (c.slots.size() > 20)
        throw CapacityError("group pair likelihood: component too large");
      for (std::size_t ei = 0; ei < edges_.size(); ++ei) {
        const Edge& e = edges_[ei];
        int sa = slot_[e.a], sb = slot_[e.b];
        if (std::find(c.slots.begin(), c.slots.end(), sa) != c.slots.end() &&
            std::find(c.slots.begin(), c.slots.end(), sb) != c.slots.end())
          c.edge_ids.push_back(static_cast<int>(ei));
      }
      comps_.push_back(std::move(c));
    }

    // Observed configs mapped to per-component masks and per-axis Bernoulli
    // products over the singleton variables.
    for (const auto& [mask, count] : configs_) {
      ObsConfig oc;
      oc.count = count;
      for (const Component& c : comps_) {
        std::uint32_t sub = 0;
        for (std::size_t t = 0; t < c.slots.size(); ++t)
          sub |= ((mask >> c.slots[t]) & 1U) << t;
        oc.comp_masks.push_back(sub);
      }
      oc.single0.assign(K_, 1.0);
      oc.single1.assign(K_, 1.0);
      for (int s : singles_) {
        int y = (mask >> s) & 1;
        auto& dst = axis_[s] == 0 ? oc.single0 : oc.single1;
        for (int k = 0; k < K_; ++k) {
          double u = u0_[s][k];
          dst[k] *= y == 0 ? u : 1.0 - u;
        }
      }
      obs_.push_back(std::move(oc));
    }
  }

  const std::vector<Edge>& edges() const { return edges_; }
  bool has_data() const { return !obs_.empty(); }

  double loglik(std::span<const double> z) const {
    const std::size_t cells = static_cast<std::size_t>(K_) * K_;
    const std::vector<double>& w2 = cache_.weights2(sigma_);

    // Frank tables per edge over the (k,l) grid. Same-axis edges only vary
    // along their own axis but are stored dense for uniform indexing.
    std::vector<std::vector<double>> ce(edges_.size());
    for (std::size_t ei = 0; ei < edges_.size(); ++ei) {
      double theta = squash_theta(z[ei]);
      int sa = slot_.at(edges_[ei].a), sb = slot_.at(edges_[ei].b);
      ce[ei].assign(cells, 0.0);
      if (axis_[sa] == axis_[sb]) {
        int ax = axis_[sa];
        std::vector<double> diag(K_);
        for (int k = 0; k < K_; ++k) diag[k] = frank_cdf(uh_[sa][k], uh_[sb][k], theta);
        for (int k = 0; k < K_; ++k)
          for (int l = 0; l < K_; ++l)
            ce[ei][k * K_ + l] = diag[ax == 0 ? k : l];
      } else {
        const auto& ua = axis_[sa] == 0 ? uh_[sa] : uh_[sb];
        const auto& ub = axis_[sa] == 0 ? uh_[sb] : uh_[sa];
        frank_cdf_grid(std::span<const double>(ua.data(), K_),
                       std::span<const double>(ub.data(), K_), theta,
                       std::span<double>(ce[ei].data(), cells));
      }
    }

    // Per component: subset-CDF grid, then an in-place Moebius transform
    // turns CDF values into config probabilities for every (k,l) at once.
    std::vector<std::vector<double>> comp_pmf(comps_.size());
    for (std::size_t ci = 0; ci < comps_.size(); ++ci) {
      const Component& c = comps_[ci];
      const std::size_t nmask = 1ULL << c.slots.size();
      std::vector<double>& tables = comp_pmf[ci];
      tables.assign(nmask * cells, 0.0);
      for (std::size_t mask = 0; mask < nmask; ++mask) {
        double* dst = tables.data() + mask * cells;
        std::fill(dst, dst + cells, 1.0);
        for (int ei : c.edge_ids) {
          const Edge& e = edges_[ei];
          int sa = slot_.at(e.a), sb = slot_.at(e.b);
          int ta = static_cast<int>(std::find(c.slots.begin(), c.slots.end(), sa) -
                                    c.slots.begin());
          int tb = static_cast<int>(std::find(c.slots.begin(), c.slots.end(), sb) -
                                    c.slots.begin());
          bool ma = (mask >> ta) & 1, mb = (mask >> tb) & 1;
          if (!ma && !mb) {
            const double* t = ce[ei].data();
            for (std::size_t q = 0; q < cells; ++q) dst[q] *= t[q];
          } else if (!ma || !mb) {
            int s = !ma ? sa : sb;
            const auto& uh = uh_[s];
            if (axis_[s] == 0) {
              for (int k = 0; k < K_; ++k) {
                double f = uh[k];
                double* row = dst + static_cast<std::size_t>(k) * K_;
                for (int l = 0; l < K_; ++l) row[l] *= f;
              }
            } else {
              for (int k = 0; k < K_; ++k) {
                double* row = dst + static_cast<std::size_t>(k) * K_;
                for (int l = 0; l < K_; ++l) row[l] *= uh[l];
              }
            }
          }
        }
        // Residual exponents for variables retained at zero.
        for (std::size_t t = 0; t < c.slots.size(); ++t) {
          if ((mask >> t) & 1) continue;
          int s = c.slots[t];
          const auto& ur = ur_[s];
          bool trivial = true;
          for (int k = 0; k < K_; ++k)
            if (ur[k] != 1.0) {
              trivial = false;
              break;
            }
          if (trivial) continue;
          if (axis_[s] == 0) {
            for (int k = 0; k < K_; ++k) {
              double f = ur[k];
              double* row = dst + static_cast<std::size_t>(k) * K_;
              for (int l = 0; l < K_; ++l) row[l] *= f;
            }
          } else {
            for (int k = 0; k < K_; ++k) {
              double* row = dst + static_cast<std::size_t>(k) * K_;
              for (int l = 0; l < K_; ++l) row[l] *= ur[l];
            }
          }
        }
      }
      // Moebius: P(y) = sum_{b <= y} (-1)^{|y|-|b|} F(b), done in place.
      for (std::size_t t = 0; t < c.slots.size(); ++t) {
        std::size_t bit = 1ULL << t;
        for (std::size_t mask = 0; mask < nmask; ++mask) {
          if (!(mask & bit)) continue;
          double* hi = tables.data() + mask * cells;
          const double* lo = tables.data() + (mask ^ bit) * cells;
          for (std::size_t q = 0; q < cells; ++q) hi[q] -= lo[q];
        }
      }
      for (double& v : tables) {
        if (v < 0.0) {
          if (v < kNegativityTol)
            throw NumericError("group pair likelihood: negative component probability");
          v = 0.0;
        }
      }
    }

    double ll = 0.0;
    std::vector<double> cell(cells);
    for (const ObsConfig& oc : obs_) {
      for (int k = 0; k < K_; ++k) {
        double f = oc.single0[k];
        double* row = cell.data() + static_cast<std::size_t>(k) * K_;
        for (int l = 0; l < K_; ++l) row[l] = f * oc.single1[l];
      }
      for (std::size_t ci = 0; ci < comps_.size(); ++ci) {
        const double* t = comp_pmf[ci].data() + oc.comp_masks[ci] * cells;
        for (std::size_t q = 0; q < cells; ++q) cell[q] *= t[q];
      }
      double prob = 0.0;
      for (std::size_t q = 0; q < cells; ++q) prob += w2[q] * cell[q];
      if (prob <= 0.0) return kNegInf;
      ll += oc.count * std::log(prob);
    }
    return ll;
  }

 private:
  struct Component {
    std::vector<int> slots;
    std::vector<int> edge_ids;
  };
  struct ObsConfig {
    double count = 0.0;
    std::vector<std::uint32_t> comp_masks;
    std::vector<double> single0, single1;  // Bernoulli products per axis
  };

  const MixedGraph& g_;
  const QuadratureCache& cache_;
  int K_;
  double sigma_ = 0.0;
  std::vector<int> vars_;
  std::vector<Edge> edges_;
  std::map<int, int> slot_;
  std::vector<std::pair<std::uint32_t, double>> configs_;
  std::vector<std::vector<double>> u0_, ur_, uh_;
  std::vector<int> axis_;
  std::vector<int> singles_;
  std::vector<Component> comps_;
  std::vector<ObsConfig> obs_;
};

}  // namespace

double group_pair_loglik(int m, int n, const MixedGraph& g, const ModelParams& params,
                         const SufficientStats& stats, const QuadratureCache& cache,
                         std::span<const double> z) {
  GroupPairLikelihood lik(m, n, g, params, stats, cache);
  if (z.size() != lik.edges().size())
    throw DataError("group_pair_loglik: z dimension mismatch");
  return lik.loglik(z);
}

LaplacePosterior prior_posterior(int m, int n, const MixedGraph& g) {
  LaplacePosterior post;
  post.m = std::min(m, n);
  post.n = std::max(m, n);
  post.edges = edges_within(m, n, g);
  const int d = post.dim();
  post.mode.assign(d, 0.0);
  post.cov.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int t = 0; t < d; ++t) post.cov[t * d + t] = 1.0;
  return post;
}

LaplacePosterior fit_group_pair_posterior(int m, int n, const MixedGraph& g,
                                          const ModelParams& params,
                                          const SufficientStats& stats,
                                          const QuadratureCache& cache,
                                          const LaplaceConfig& cfg) {
  LaplacePosterior post = prior_posterior(m, n, g);
  const int d = post.dim();
  if (d == 0) return post;

  GroupPairLikelihood lik(m, n, g, params, stats, cache);
  if (!lik.has_data()) return post;  // prior falls through unchanged

  auto objective = [&](const std::vector<double>& z) {
    double prior = 0.0;
    for (double v : z) prior -= 0.5 * v * v;
    double ll = lik.loglik(z);
    return ll + prior;
  };

  std::vector<double> z(d, 0.0);
  double f0 = objective(z);
  if (!std::isfinite(f0))
    throw NumericError("laplace fit: objective not finite at initialization");

  const double h = cfg.fd_step;
  std::vector<double> grad(d);
  Eigen::MatrixXd H(d, d);
  auto eval_shift = [&](const std::vector<double>& base, int i, double di, int j, double dj) {
    std::vector<double> zz = base;
    zz[i] += di;
    if (j >= 0) zz[j] += dj;
    return objective(zz);
  };

  bool converged = false;
  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    std::vector<double> fp(d), fm(d);
    for (int i = 0; i < d; ++i) {
      fp[i] = eval_shift(z, i, h, -1, 0.0);
      fm[i] = eval_shift(z, i, -h, -1, 0.0);
      grad[i] = (fp[i] - fm[i]) / (2.0 * h);
    }
    double gnorm = 0.0;
    for (double v : grad) gnorm = std::max(gnorm, std::fabs(v));
    if (gnorm < cfg.grad_tol) {
      converged = true;
      break;
    }
    for (int i = 0; i < d; ++i) {
      H(i, i) = (fp[i] - 2.0 * f0 + fm[i]) / (h * h);
      for (int j = i + 1; j < d; ++j) {
        double fpp = eval_shift(z, i, h, j, h);
        double fpm = eval_shift(z, i, h, j, -h);
        double fmp = eval_shift(z, i, -h, j, h);
        double fmm = eval_shift(z, i, -h, j, -h);
        double v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
        H(i, j) = v;
        H(j, i) = v;
      }
    }
    // Modified Newton: floor eigenvalue magnitudes so saddle directions
    // (negative curvature of -H) still produce a sensibly scaled ascent
    // step, and cap the step norm as a crude trust region.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-H);
    Eigen::VectorXd lam = es.eigenvalues().cwiseAbs().cwiseMax(cfg.eig_floor);
    Eigen::VectorXd gv = Eigen::Map<Eigen::VectorXd>(grad.data(), d);
    Eigen::VectorXd step =
        es.eigenvectors() * (es.eigenvectors().transpose() * gv).cwiseQuotient(lam);
    if (step.norm() > cfg.max_step) step *= cfg.max_step / step.norm();

    auto try_direction = [&](const Eigen::VectorXd& dir) {
      double t = 1.0;
      while (t > 1e-10) {
        std::vector<double> zc = z;
        for (int i = 0; i < d; ++i) zc[i] += t * dir(i);
        double fc = objective(zc);
        if (std::isfinite(fc) && fc > f0) {
          z = std::move(zc);
          f0 = fc;
          return true;
        }
        t *= 0.5;
      }
      return false;
    };

    bool accepted = try_direction(step);
    if (!accepted && gv.norm() > 0.0)
      accepted = try_direction(gv * (std::min(cfg.max_step, 1.0) / gv.norm()));
    if (!accepted) break;  // stalled; gradient check next round decides flag
  }
  post.iters = iter;
  post.converged = converged;
  post.mode = z;

  // Covariance from the (floored) negated Hessian at the mode.
  std::vector<double> fp(d), fm(d);
  for (int i = 0; i < d; ++i) {
    fp[i] = eval_shift(z, i, h, -1, 0.0);
    fm[i] = eval_shift(z, i, -h, -1, 0.0);
  }
  for (int i = 0; i < d; ++i) {
    H(i, i) = (fp[i] - 2.0 * f0 + fm[i]) / (h * h);
    for (int j = i + 1; j < d; ++j) {
      double fpp = eval_shift(z, i, h, j, h);
      double fpm = eval_shift(z, i, h, j, -h);
      double fmp = eval_shift(z, i, -h, j, h);
      double fmm = eval_shift(z, i, -h, j, -h);
      double v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-H);
  Eigen::VectorXd lam = es.eigenvalues().cwiseAbs().cwiseMax(cfg.eig_floor);
  Eigen::MatrixXd cov = es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) post.cov[i * d + j] = cov(i, j);
  return post;
}

std::vector<double> marginal_theta_grid(const LaplacePosterior& post, const Edge& e,
                                        int k_theta) {
  auto it = std::find(post.edges.begin(), post.edges.end(), e);
  if (it == post.edges.end())
    throw NumericError("marginal_theta_grid: edge not covered by this posterior");
  int idx = static_cast<int>(it - post.edges.begin());
  double var = post.cov[static_cast<std::size_t>(idx) * post.dim() + idx];
  return theta_grid_gaussian(post.mode[idx], var, k_theta);
}

ThetaGrids grids_from_posteriors(const std::vector<LaplacePosterior>& posts, int k_theta) {
  ThetaGrids grids;
  for (const LaplacePosterior& post : posts) {
    auto& slot = grids[{post.m, post.n}];
    for (const Edge& e : post.edges) slot[e] = marginal_theta_grid(post, e, k_theta);
  }
  return grids;
}

double q_objective(const MixedGraph& g, const ModelParams& params,
                   const std::vector<LaplacePosterior>& posts, const SufficientStats& stats,
                   const QuadratureCache& cache, int k_theta) {
  return q_objective(g, params, grids_from_posteriors(posts, k_theta), stats, cache);
}

}  // namespace sccm
