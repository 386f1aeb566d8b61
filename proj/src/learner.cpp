#include "sccm/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "sccm/cdn.hpp"
#include "sccm/copula.hpp"
#include "sccm/errors.hpp"
#include "sccm/normal.hpp"

namespace sccm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// One pair's contribution to the parameter objective: which theta values it
// averages over and how.
struct PairSpec {
  int i = 0, j = 0, pi = 0;
  bool same_group = false;
  int gm = 0, gn = 0;  // group pair (gm < gn) when cross-group
  PairShape shape;
  std::vector<double> thetas{0.0};
  std::vector<double> weights{1.0};
  ThetaReduce reduce = ThetaReduce::LogMeanExp;
};

std::vector<PairSpec> build_specs(ObjectiveKind kind, const MixedGraph& g, int k_theta,
                                  const ThetaGrids* grids) {
  const Partition& part = g.partition();
  const int p = part.n_vars();
  const int G = part.n_groups();
  if (kind == ObjectiveKind::QBound && grids == nullptr)
    throw UsageError("QBound objective needs posterior theta grids");

  std::vector<double> prior = theta_grid_prior(k_theta);
  std::vector<PairSpec> specs;
  specs.reserve(static_cast<std::size_t>(p) * (p - 1) / 2);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      PairSpec s;
      s.i = i;
      s.j = j;
      s.pi = pair_index(i, j, p);
      int m = part.group_of(i), n = part.group_of(j);
      s.same_group = (m == n);
      s.gm = std::min(m, n);
      s.gn = std::max(m, n);
      s.shape = pair_shape(i, j, g);
      if (s.shape.edged) {
        if (kind == ObjectiveKind::PclF) {
          s.thetas = prior;
          s.weights.assign(prior.size(), 1.0 / k_theta);
          s.reduce = ThetaReduce::LogMeanExp;
        } else {
          Edge e(i, j);
          s.thetas.clear();
          s.weights.clear();
          s.reduce = ThetaReduce::Mean;
          if (!s.same_group) {
            const auto& grid = grids->at({s.gm, s.gn}).at(e);
            s.thetas.assign(grid.begin(), grid.end());
            s.weights.assign(grid.size(), 1.0 / static_cast<double>(grid.size()));
          } else {
            double gw = 1.0 / static_cast<double>(G - 1);
            for (int n2 = 0; n2 < G; ++n2) {
              if (n2 == m) continue;
              const auto& grid = grids->at({std::min(m, n2), std::max(m, n2)}).at(e);
              for (double th : grid) {
                s.thetas.push_back(th);
                s.weights.push_back(gw / static_cast<double>(grid.size()));
              }
            }
          }
        }
      }
      specs.push_back(std::move(s));
    }
  return specs;
}

double eval_spec(const PairSpec& s, std::span<const double> ui, std::span<const double> uj,
                 const std::vector<double>& sigma, int G, const SufficientStats& stats,
                 const QuadratureCache& cache) {
  double sg = s.same_group ? 0.0 : sigma[s.gm * G + s.gn];
  return pair_score_thetas(ui, uj, s.shape, s.same_group, sg, cache,
                           stats.pair_counts[s.pi], s.thetas, s.weights, s.reduce);
}

// Grid correlations in tie-break preference order: ascending |sigma|,
// negative before positive.
const std::vector<double>& sigma_preference_order() {
  static const std::vector<double> order = [] {
    std::vector<double> o = sigma_grid();
    std::stable_sort(o.begin(), o.end(), [](double a, double b) {
      double fa = std::fabs(a), fb = std::fabs(b);
      if (fa != fb) return fa < fb;
      return a < b;
    });
    return o;
  }();
  return order;
}

// Mutable optimizer state: slopes with derived intercepts, per-variable u
// grids, sigma matrix, cached per-pair terms.
struct OptState {
  std::vector<double> slopes, intercepts;
  std::vector<std::vector<double>> U;
  std::vector<double> sigma;
  std::vector<double> terms;
  double total = 0.0;
};

class ParamOptimizer {
 public:
  ParamOptimizer(ObjectiveKind kind, const MixedGraph& g, const ModelParams& start,
                 const SufficientStats& stats, const QuadratureCache& cache,
                 const LearnConfig& cfg, const ThetaGrids* grids)
      : g_(g),
        part_(g.partition()),
        stats_(stats),
        cache_(cache),
        cfg_(cfg),
        specs_(build_specs(kind, g, cfg.k_theta, grids)),
        p_(part_.n_vars()),
        G_(part_.n_groups()) {
    touch_.assign(p_, {});
    for (std::size_t t = 0; t < specs_.size(); ++t) {
      touch_[specs_[t].i].push_back(static_cast<int>(t));
      touch_[specs_[t].j].push_back(static_cast<int>(t));
    }
    st_.slopes = start.slopes;
    st_.sigma = start.sigma;
    st_.intercepts.resize(p_);
    st_.U.assign(p_, std::vector<double>(cache.K));
    for (int v = 0; v < p_; ++v) refresh_var(st_, v);
    st_.terms.resize(specs_.size());
    for (std::size_t t = 0; t < specs_.size(); ++t)
      st_.terms[t] = eval_spec(specs_[t], st_.U[specs_[t].i], st_.U[specs_[t].j], st_.sigma,
                               G_, stats_, cache_);
    st_.total = sum_terms(st_.terms);
    if (!std::isfinite(st_.total))
      throw NumericError("optimize_params: objective not finite at start");
  }

  void run() {
    for (int sweep = 0; sweep < cfg_.param_sweeps; ++sweep) {
      slope_phase();
      sigma_phase();
    }
  }

  ModelParams result(const ModelParams& start) const {
    ModelParams out = start;
    out.slopes = st_.slopes;
    out.intercepts = st_.intercepts;
    out.sigma = st_.sigma;
    return out;
  }

 private:
  void refresh_var(OptState& st, int v) const {
    st.intercepts[v] = intercept_from_marginal(st.slopes[v], stats_.p0_clipped(v));
    fill_u_grid(st.slopes[v], st.intercepts[v], cache_, st.U[v]);
  }

  static double sum_terms(const std::vector<double>& terms) {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
  }

  // Sum of terms touching variable v with that variable's slope replaced.
  double partial_with_slope(int v, double slope) const {
    std::vector<double> u(cache_.K);
    double b0 = intercept_from_marginal(slope, stats_.p0_clipped(v));
    fill_u_grid(slope, b0, cache_, u);
    double acc = 0.0;
    for (int t : touch_[v]) {
      const PairSpec& s = specs_[t];
      std::span<const double> ui = s.i == v ? std::span<const double>(u)
                                            : std::span<const double>(st_.U[s.i]);
      std::span<const double> uj = s.j == v ? std::span<const double>(u)
                                            : std::span<const double>(st_.U[s.j]);
      acc += eval_spec(s, ui, uj, st_.sigma, G_, stats_, cache_);
    }
    return acc;
  }

  void slope_phase() {
    const double h = cfg_.fd_step;
    double eta = 0.5;
    for (int it = 0; it < cfg_.max_grad_iters; ++it) {
      std::vector<double> grad(p_);
      double gnorm = 0.0;
      for (int v = 0; v < p_; ++v) {
        double up = partial_with_slope(v, st_.slopes[v] + h);
        double dn = partial_with_slope(v, st_.slopes[v] - h);
        grad[v] = (up - dn) / (2.0 * h);
        gnorm += grad[v] * grad[v];
      }
      gnorm = std::sqrt(gnorm);
      if (!(gnorm > 1e-14)) break;

      bool first_try = true;
      bool improved = false;
      double trial = eta;
      while (trial > 1e-10) {
        OptState cand = st_;
        for (int v = 0; v < p_; ++v) {
          cand.slopes[v] = std::clamp(st_.slopes[v] + trial * grad[v] / gnorm,
                                      -cfg_.slope_cap, cfg_.slope_cap);
          refresh_var(cand, v);
        }
        for (std::size_t t = 0; t < specs_.size(); ++t)
          cand.terms[t] = eval_spec(specs_[t], cand.U[specs_[t].i], cand.U[specs_[t].j],
                                    cand.sigma, G_, stats_, cache_);
        cand.total = sum_terms(cand.terms);
        if (cand.total > st_.total + cfg_.accept_margin) {
          double delta = cand.total - st_.total;
          st_ = std::move(cand);
          eta = first_try ? std::min(trial * 2.0, 4.0) : trial;
          improved = true;
          if (delta <= cfg_.obj_rel_tol * (1.0 + std::fabs(st_.total))) it = cfg_.max_grad_iters;
          break;
        }
        trial *= 0.5;
        first_try = false;
      }
      if (!improved) break;
    }
  }

  // Exact coordinate maximization of each cross-group correlation over the
  // grid. The per-theta integrand tables do not depend on sigma, so each
  // candidate costs one weighted dot product per table.
  void sigma_phase() {
    const int K = cache_.K;
    const std::size_t cells = static_cast<std::size_t>(K) * K;
    for (int a = 0; a < G_; ++a)
      for (int b = a + 1; b < G_; ++b) {
        std::vector<int> members;
        for (std::size_t t = 0; t < specs_.size(); ++t)
          if (!specs_[t].same_group && specs_[t].gm == a && specs_[t].gn == b)
            members.push_back(static_cast<int>(t));
        if (members.empty()) continue;

        // tables[t] = per-theta integrand of the (0,0) cell for spec t.
        std::vector<std::vector<std::vector<double>>> tables(members.size());
        for (std::size_t mi = 0; mi < members.size(); ++mi) {
          const PairSpec& s = specs_[members[mi]];
          const auto& ui = st_.U[s.i];
          const auto& uj = st_.U[s.j];
          if (!s.shape.edged) {
            tables[mi].assign(1, std::vector<double>(cells));
            for (int k = 0; k < K; ++k)
              for (int l = 0; l < K; ++l) tables[mi][0][k * K + l] = ui[k] * uj[l];
          } else {
            tables[mi].assign(s.thetas.size(), std::vector<double>(cells));
            std::vector<double> uhi(K), uhj(K), ri(K), rj(K);
            for (int k = 0; k < K; ++k) {
              uhi[k] = pow_inv_h(ui[k], s.shape.inv_hi);
              ri[k] = uhi[k] > 0.0 ? ui[k] / uhi[k] : 0.0;
              uhj[k] = pow_inv_h(uj[k], s.shape.inv_hj);
              rj[k] = uhj[k] > 0.0 ? uj[k] / uhj[k] : 0.0;
            }
            for (std::size_t th = 0; th < s.thetas.size(); ++th) {
              frank_cdf_grid(std::span<const double>(uhi), std::span<const double>(uhj),
                             s.thetas[th], tables[mi][th]);
              for (int k = 0; k < K; ++k)
                for (int l = 0; l < K; ++l) tables[mi][th][k * K + l] *= ri[k] * rj[l];
            }
          }
        }

        auto score_at = [&](double sig) {
          const std::vector<double>& w2 = cache_.weights2(sig);
          const std::vector<double>& rows = cache_.row_sums(sig);
          const std::vector<double>& cols = cache_.col_sums(sig);
          double total = 0.0;
          std::vector<double> lls;
          for (std::size_t mi = 0; mi < members.size(); ++mi) {
            const PairSpec& s = specs_[members[mi]];
            const auto& ui = st_.U[s.i];
            const auto& uj = st_.U[s.j];
            double si = 0.0, sj = 0.0;
            for (int k = 0; k < K; ++k) si += rows[k] * ui[k];
            for (int l = 0; l < K; ++l) sj += cols[l] * uj[l];
            lls.assign(tables[mi].size(), 0.0);
            for (std::size_t th = 0; th < tables[mi].size(); ++th) {
              double s00 = 0.0;
              const double* tt = tables[mi][th].data();
              for (std::size_t q = 0; q < cells; ++q) s00 += w2[q] * tt[q];
              lls[th] = cells_loglik(s00, si, sj, stats_.pair_counts[s.pi]);
            }
            if (!s.shape.edged) {
              total += lls[0];
            } else if (s.reduce == ThetaReduce::LogMeanExp) {
              total += log_mean_exp(lls, s.weights);
            } else {
              for (std::size_t th = 0; th < lls.size(); ++th) {
                if (lls[th] == kNegInf) return kNegInf;
                total += s.weights[th] * lls[th];
              }
            }
          }
          return total;
        };

        double cur = st_.sigma[a * G_ + b];
        double cur_score = score_at(cur);
        double best = cur;
        double best_score = kNegInf;
        for (double cand : sigma_preference_order()) {
          double sc = score_at(cand);
          if (sc > best_score) {
            best_score = sc;
            best = cand;
          }
        }
        if (best != cur && best_score > cur_score + cfg_.accept_margin) {
          st_.sigma[a * G_ + b] = best;
          st_.sigma[b * G_ + a] = best;
          for (int t : members) {
            const PairSpec& s = specs_[t];
            st_.terms[t] = eval_spec(s, st_.U[s.i], st_.U[s.j], st_.sigma, G_, stats_, cache_);
          }
          st_.total = sum_terms(st_.terms);
        }
      }
  }

  const MixedGraph& g_;
  const Partition& part_;
  const SufficientStats& stats_;
  const QuadratureCache& cache_;
  const LearnConfig& cfg_;
  std::vector<PairSpec> specs_;
  int p_, G_;
  std::vector<std::vector<int>> touch_;
  OptState st_;
};

// Pair score under an arbitrary candidate graph with u grids already built.
double pair_term_for_graph(int i, int j, const MixedGraph& gg, const ModelParams& prm,
                           const std::vector<std::vector<double>>& U,
                           const SufficientStats& stats, const QuadratureCache& cache,
                           int k_theta, const std::vector<double>& prior_grid,
                           const std::vector<double>& prior_weights) {
  const Partition& part = gg.partition();
  PairShape shape = pair_shape(i, j, gg);
  int m = part.group_of(i), n = part.group_of(j);
  bool same = (m == n);
  double sigma = same ? 0.0 : prm.sig(std::min(m, n), std::max(m, n), part.n_groups());
  const auto& counts = stats.pair_counts[pair_index(i, j, part.n_vars())];
  if (!shape.edged)
    return pair_loglik_grid(U[i], U[j], shape, 0.0, same, sigma, cache, counts);
  return pair_score_thetas(U[i], U[j], shape, same, sigma, cache, counts, prior_grid,
                           prior_weights, ThetaReduce::LogMeanExp);
}

std::vector<std::vector<double>> u_grids_from(const ModelParams& prm, int p,
                                              const QuadratureCache& cache) {
  std::vector<std::vector<double>> U(p, std::vector<double>(cache.K));
  for (int v = 0; v < p; ++v) fill_u_grid(prm.slopes[v], prm.intercepts[v], cache, U[v]);
  return U;
}

double theta_point_estimate(int i, int j, const MixedGraph& gg, const ModelParams& prm,
                            const std::vector<std::vector<double>>& U,
                            const SufficientStats& stats, const QuadratureCache& cache,
                            const std::vector<double>& prior_grid) {
  const Partition& part = gg.partition();
  int m = part.group_of(i), n = part.group_of(j);
  bool same = (m == n);
  double sigma = same ? 0.0 : prm.sig(std::min(m, n), std::max(m, n), part.n_groups());
  std::vector<double> w = theta_grid_posterior(
      U[i], U[j], pair_shape(i, j, gg), same, sigma, cache,
      stats.pair_counts[pair_index(i, j, part.n_vars())], prior_grid);
  double mean = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) mean += w[t] * prior_grid[t];
  return mean;
}

std::string edge_label(const Partition& part, int a, int b, bool added) {
  std::ostringstream os;
  os << (added ? '+' : '-') << part.var_name(a) << "--" << part.var_name(b);
  return os.str();
}

int count_regressions(const std::vector<TraceEntry>& trace, std::vector<std::string>* warnings) {
  std::vector<std::pair<double, std::string>> seq;
  for (const TraceEntry& t : trace) {
    seq.emplace_back(t.pcl_after_params, "iteration " + std::to_string(t.iter) + " (params)");
    seq.emplace_back(t.pcl_after_structure,
                     "iteration " + std::to_string(t.iter) + " (structure)");
  }
  int count = 0;
  for (std::size_t t = 1; t < seq.size(); ++t) {
    if (seq[t].first < seq[t - 1].first - 1e-3) {
      ++count;
      if (warnings)
        warnings->push_back("PCL regression of " +
                            std::to_string(seq[t - 1].first - seq[t].first) + " at " +
                            seq[t].second + " (bound approximation)");
    }
  }
  return count;
}

FittedModel run_alternating(bool use_bound, std::shared_ptr<const Partition> part,
                            const Dataset& data, const QuadratureCache& cache,
                            const LearnConfig& cfg) {
  if (cfg.max_outer_iters < 1) throw UsageError("max outer iterations must be positive");
  Dataset aligned = align_dataset(data, *part);
  SufficientStats stats = compute_stats(aligned, *part);
  const int G = part->n_groups();

  MixedGraph g(part);
  FittedModel fit(g);
  ModelParams params = init_parameters(g, stats);

  std::set<std::set<Edge>> seen;
  seen.insert({});

  double prev_score = -std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    fit.outer_iters = iter;
    if (use_bound) {
      std::vector<LaplacePosterior> posts;
      for (int m = 0; m < G; ++m)
        for (int n = m + 1; n < G; ++n)
          posts.push_back(cfg.prior_posterior_ablation
                              ? prior_posterior(m, n, g)
                              : fit_group_pair_posterior(m, n, g, params, stats, cache,
                                                         cfg.laplace));
      ThetaGrids grids = grids_from_posteriors(posts, cfg.k_theta);
      params = optimize_params(ObjectiveKind::QBound, g, params, stats, cache, cfg, &grids);
    } else {
      params = optimize_params(ObjectiveKind::PclF, g, params, stats, cache, cfg);
    }
    double pcl_a = pcl(g, params, stats, cache, cfg.k_theta);

    StructureStep step = greedy_structure_step(g, params, stats, cache, cfg);
    double pcl_b =
        step.changed ? pcl(step.graph, step.params, stats, cache, cfg.k_theta) : pcl_a;
    fit.trace.push_back({iter, pcl_a, pcl_b, step.change});

    if (!step.changed) {
      fit.graph = g;
      fit.params = params;
      if (pcl_a - prev_score <= cfg.outer_tol) {
        fit.converged = true;
        break;
      }
      prev_score = pcl_a;
      continue;
    }
    prev_score = pcl_b;
    g = step.graph;
    params = step.params;
    fit.graph = g;
    fit.params = params;
    if (!seen.insert(g.edges()).second) {
      fit.cycled = true;
      fit.warnings.push_back("structure search revisited a graph; stopping");
      break;
    }
  }
  if (!fit.converged && !fit.cycled)
    fit.warnings.push_back("outer iteration cap reached before convergence");

  fit.params.thetas = estimate_thetas(fit.graph, fit.params, stats, cache, cfg.k_theta);
  fit.final_pcl = fit.trace.empty() ? pcl(fit.graph, fit.params, stats, cache, cfg.k_theta)
                                    : fit.trace.back().pcl_after_structure;
  fit.pcl_regressions = count_regressions(fit.trace, use_bound ? &fit.warnings : nullptr);
  return fit;
}

}  // namespace

ModelParams init_parameters(const MixedGraph& g, const SufficientStats& stats) {
  const Partition& part = g.partition();
  const int p = part.n_vars();
  const int G = part.n_groups();
  ModelParams prm;
  prm.slopes.assign(p, 1.0);
  prm.intercepts.resize(p);
  for (int v = 0; v < p; ++v)
    prm.intercepts[v] = intercept_from_marginal(1.0, stats.p0_clipped(v));
  prm.sigma.assign(static_cast<std::size_t>(G) * G, 0.01);
  for (int m = 0; m < G; ++m) prm.sigma[m * G + m] = 1.0;
  for (const Edge& e : g.edges()) prm.thetas[e] = 0.0;
  return prm;
}

ModelParams optimize_params(ObjectiveKind kind, const MixedGraph& g, const ModelParams& start,
                            const SufficientStats& stats, const QuadratureCache& cache,
                            const LearnConfig& cfg, const ThetaGrids* grids) {
  start.validate(g);
  ParamOptimizer opt(kind, g, start, stats, cache, cfg, grids);
  opt.run();
  return opt.result(start);
}

StructureStep greedy_structure_step(const MixedGraph& g, const ModelParams& params,
                                    const SufficientStats& stats, const QuadratureCache& cache,
                                    const LearnConfig& cfg) {
  const Partition& part = g.partition();
  const int p = part.n_vars();
  std::vector<double> prior_grid = theta_grid_prior(cfg.k_theta);
  std::vector<double> prior_weights(prior_grid.size(), 1.0 / cfg.k_theta);
  std::vector<std::vector<double>> U = u_grids_from(params, p, cache);

  std::vector<double> base(static_cast<std::size_t>(p) * (p - 1) / 2);
  double total0 = graph_log_prior(g);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      base[pair_index(i, j, p)] = pair_term_for_graph(i, j, g, params, U, stats, cache,
                                                      cfg.k_theta, prior_grid, prior_weights);
      total0 += base[pair_index(i, j, p)];
    }

  double best_total = total0;
  int best_edges = g.edge_count();
  int best_a = -1, best_b = -1;

  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) {
      MixedGraph g2 = g.flipped(a, b);
      double cand = total0 + graph_log_prior(g2) - graph_log_prior(g);
      // Only edged terms depend on the factor counts, so the flip affects the
      // flipped pair itself plus edged pairs sharing an endpoint.
      std::set<int> affected{pair_index(a, b, p)};
      for (const Edge& e : g.edges())
        if (e.a == a || e.b == a || e.a == b || e.b == b) affected.insert(pair_index(e.a, e.b, p));
      for (int pi : affected) {
        auto [i, j] = pair_from_index(pi, p);
        cand += pair_term_for_graph(i, j, g2, params, U, stats, cache, cfg.k_theta,
                                    prior_grid, prior_weights) -
                base[pi];
      }
      if (cand <= total0 + cfg.accept_margin) continue;
      if (cand > best_total ||
          (cand == best_total && g2.edge_count() < best_edges)) {
        best_total = cand;
        best_edges = g2.edge_count();
        best_a = a;
        best_b = b;
      }
    }

  if (best_a < 0) return StructureStep{g, params, false, "none"};

  MixedGraph g2 = g.flipped(best_a, best_b);
  ModelParams out = params;
  bool added = g2.has_edge(best_a, best_b);
  if (added) {
    out.thetas[Edge(best_a, best_b)] = theta_point_estimate(best_a, best_b, g2, params, U,
                                                            stats, cache, prior_grid);
  } else {
    out.thetas.erase(Edge(best_a, best_b));
  }
  return StructureStep{std::move(g2), std::move(out), true,
                       edge_label(part, best_a, best_b, added)};
}

std::map<Edge, double> estimate_thetas(const MixedGraph& g, const ModelParams& params,
                                       const SufficientStats& stats,
                                       const QuadratureCache& cache, int k_theta) {
  std::vector<double> prior_grid = theta_grid_prior(k_theta);
  std::vector<std::vector<double>> U = u_grids_from(params, g.partition().n_vars(), cache);
  std::map<Edge, double> out;
  for (const Edge& e : g.edges())
    out[e] = theta_point_estimate(e.a, e.b, g, params, U, stats, cache, prior_grid);
  return out;
}

FittedModel learn_lsc0(std::shared_ptr<const Partition> part, const Dataset& data,
                       const QuadratureCache& cache, const LearnConfig& cfg) {
  Dataset aligned = align_dataset(data, *part);
  SufficientStats stats = compute_stats(aligned, *part);
  const int p = part->n_vars();

  MixedGraph g0(part);
  FittedModel fit(g0);
  ModelParams params = init_parameters(g0, stats);
  params = optimize_params(ObjectiveKind::PclF, g0, params, stats, cache, cfg);
  double pcl_params = pcl(g0, params, stats, cache, cfg.k_theta);

  std::vector<double> prior_grid = theta_grid_prior(cfg.k_theta);
  std::vector<double> prior_weights(prior_grid.size(), 1.0 / cfg.k_theta);
  std::vector<std::vector<double>> U = u_grids_from(params, p, cache);

  const double log_on = std::log(kEdgePriorOn);
  const double log_off = std::log(1.0 - kEdgePriorOn);
  MixedGraph g = g0;
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) {
      double plain = pair_term_for_graph(a, b, g0, params, U, stats, cache, cfg.k_theta,
                                         prior_grid, prior_weights);
      MixedGraph ge = g0.flipped(a, b);
      double edged = pair_term_for_graph(a, b, ge, params, U, stats, cache, cfg.k_theta,
                                         prior_grid, prior_weights);
      if (edged + log_on > plain + log_off) g.add_edge(a, b);
    }

  params.thetas = estimate_thetas(g, params, stats, cache, cfg.k_theta);
  fit.graph = g;
  fit.params = params;
  fit.converged = true;
  fit.outer_iters = 1;
  fit.final_pcl = pcl(g, params, stats, cache, cfg.k_theta);
  fit.trace.push_back({1, pcl_params, fit.final_pcl,
                       g.edge_count() > 0 ? "+" + std::to_string(g.edge_count()) + " edges"
                                          : "none"});
  return fit;
}

FittedModel learn_lsc1(std::shared_ptr<const Partition> part, const Dataset& data,
                       const QuadratureCache& cache, const LearnConfig& cfg) {
  return run_alternating(false, std::move(part), data, cache, cfg);
}

FittedModel learn_lsc2(std::shared_ptr<const Partition> part, const Dataset& data,
                       const QuadratureCache& cache, const LearnConfig& cfg) {
  if (part->n_groups() < 2) {
    FittedModel fit = run_alternating(false, std::move(part), data, cache, cfg);
    fit.warnings.insert(fit.warnings.begin(),
                        "single group partition: LSC-II fell back to LSC-I");
    return fit;
  }
  return run_alternating(true, std::move(part), data, cache, cfg);
}

EmbedResult embed(std::span<const std::uint8_t> row, const MixedGraph& g,
                  const ModelParams& params, int max_iters, double tol) {
  const Partition& part = g.partition();
  const int p = part.n_vars();
  const int G = part.n_groups();
  if (row.size() != static_cast<std::size_t>(p)) throw DataError("embed: row length mismatch");

  auto objective = [&](const std::vector<double>& x) {
    double obj = 0.0;
    std::vector<double> u(p);
    for (int v = 0; v < p; ++v)
      u[v] = norm_cdf(-(params.slopes[v] * x[part.group_of(v)] + params.intercepts[v]));
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) {
        PairShape shape = pair_shape(i, j, g);
        double theta = shape.edged ? params.thetas.at(Edge(i, j)) : 0.0;
        std::array<double, 4> cells = biv_cells(u[i], u[j], shape, theta);
        obj += std::log(std::max(cells[row[i] * 2 + row[j]], 1e-300));
        int m = part.group_of(i), n = part.group_of(j);
        if (m == n) {
          obj += std::log(norm_pdf(x[m]));
        } else {
          obj += binorm_logpdf(x[m], x[n], params.sig(m, n, G));
        }
      }
    return obj;
  };

  EmbedResult res;
  res.x.assign(G, 0.0);
  double f = objective(res.x);
  const double h = 1e-4;
  double eta = 0.25;
  for (int it = 0; it < max_iters; ++it) {
    res.iters = it + 1;
    std::vector<double> grad(G);
    double gnorm = 0.0;
    for (int m = 0; m < G; ++m) {
      std::vector<double> xp = res.x, xm = res.x;
      xp[m] += h;
      xm[m] -= h;
      grad[m] = (objective(xp) - objective(xm)) / (2.0 * h);
      gnorm += grad[m] * grad[m];
    }
    gnorm = std::sqrt(gnorm);
    if (!(gnorm > 1e-12)) {
      res.converged = true;
      break;
    }
    double trial = eta;
    bool improved = false;
    bool first = true;
    while (trial > 1e-12) {
      std::vector<double> xc = res.x;
      for (int m = 0; m < G; ++m) xc[m] += trial * grad[m] / gnorm;
      double fc = objective(xc);
      if (fc > f) {
        double delta = fc - f;
        res.x = std::move(xc);
        f = fc;
        improved = true;
        eta = first ? std::min(trial * 2.0, 2.0) : trial;
        if (delta <= tol * (1.0 + std::fabs(f))) {
          res.converged = true;
          it = max_iters;
        }
        break;
      }
      trial *= 0.5;
      first = false;
    }
    if (!improved) {
      res.converged = true;  // no ascent direction left at line-search floor
      break;
    }
  }
  res.objective = f;
  return res;
}

}  // namespace sccm
