#include "sccm/cdn.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sccm/copula.hpp"
#include "sccm/errors.hpp"

namespace sccm {

namespace {

double u_of(int yv, int var, const ModelParams& params, std::span<const double> x,
            const Partition& part) {
  if (yv < 0) return 0.0;
  if (yv >= 1) return 1.0;
  double xv = x[part.group_of(var)];
  return norm_cdf(-(params.slopes[var] * xv + params.intercepts[var]));
}

double clamp_prob(double v) {
  if (v < 0.0) {
    if (v < kNegativityTol) throw NumericError("pmf: negative probability beyond tolerance");
    return 0.0;
  }
  return v;
}

// A factor over a small set of local binary variables. Table index packs the
// scope's assignments LSB-first in scope order.
struct Factor {
  std::vector<int> scope;  // sorted local variable ids
  std::vector<double> table;
};

Factor multiply_and_sum_out(const std::vector<Factor>& fs, int victim) {
  std::vector<int> scope;
  for (const Factor& f : fs)
    for (int v : f.scope)
      if (v != victim && std::find(scope.begin(), scope.end(), v) == scope.end())
        scope.push_back(v);
  std::sort(scope.begin(), scope.end());
  if (static_cast<int>(scope.size()) >= kComponentCap)
    throw CapacityError("pmf: elimination scope exceeds capacity budget");

  // Per factor, the positions of its scope vars within (scope + victim).
  std::vector<std::vector<int>> pos(fs.size());
  for (std::size_t fi = 0; fi < fs.size(); ++fi)
    for (int v : fs[fi].scope) {
      if (v == victim)
        pos[fi].push_back(static_cast<int>(scope.size()));
      else
        pos[fi].push_back(static_cast<int>(
            std::lower_bound(scope.begin(), scope.end(), v) - scope.begin()));
    }

  Factor out;
  out.scope = scope;
  std::size_t n = 1ULL << scope.size();
  out.table.assign(n, 0.0);
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int vv = 0; vv <= 1; ++vv) {
      std::size_t full = idx | (static_cast<std::size_t>(vv) << scope.size());
      double prod = 1.0;
      for (std::size_t fi = 0; fi < fs.size(); ++fi) {
        std::size_t sub = 0;
        for (std::size_t t = 0; t < pos[fi].size(); ++t)
          sub |= ((full >> pos[fi][t]) & 1ULL) << t;
        prod *= fs[fi].table[sub];
      }
      out.table[idx] += prod;
    }
  }
  return out;
}

// Signed inclusion-exclusion sum for one bi-directed component, evaluated by
// variable elimination with a greedy min-degree order.
double component_sum(const std::vector<int>& comp, std::span<const int> yvals,
                     const std::vector<int>& var_slot, const MixedGraph& g,
                     const ModelParams& params, std::span<const double> x) {
  const Partition& part = g.partition();
  int c = static_cast<int>(comp.size());
  if (c > kComponentCap)
    throw CapacityError("pmf: bi-directed component exceeds capacity budget");

  std::map<int, int> local;  // global var -> local id
  for (int t = 0; t < c; ++t) local[comp[t]] = t;

  // u at CDF argument (y - z) for z = 0, 1.
  std::vector<std::array<double, 2>> uz(c);
  for (int t = 0; t < c; ++t) {
    int y = yvals[var_slot[comp[t]]];
    uz[t][0] = u_of(y, comp[t], params, x, part);
    uz[t][1] = u_of(y - 1, comp[t], params, x, part);
  }

  std::vector<Factor> factors;
  std::vector<int> induced_deg(c, 0);
  for (const Edge& e : g.edges()) {
    auto ia = local.find(e.a), ib = local.find(e.b);
    if (ia == local.end() || ib == local.end()) continue;
    int la = ia->second, lb = ib->second;
    ++induced_deg[la];
    ++induced_deg[lb];
    double inv_ha = 1.0 / g.factor_count(e.a);
    double inv_hb = 1.0 / g.factor_count(e.b);
    double theta = params.thetas.at(e);
    Factor f;
    f.scope = {std::min(la, lb), std::max(la, lb)};
    f.table.assign(4, 0.0);
    for (int za = 0; za <= 1; ++za)
      for (int zb = 0; zb <= 1; ++zb) {
        double ua = pow_inv_h(uz[la][za], inv_ha);
        double ub = pow_inv_h(uz[lb][zb], inv_hb);
        int bit_lo = f.scope[0] == la ? za : zb;
        int bit_hi = f.scope[0] == la ? zb : za;
        f.table[bit_lo | (bit_hi << 1)] = frank_cdf(ua, ub, theta);
      }
    factors.push_back(std::move(f));
  }

  // Unary potentials: the inclusion-exclusion sign plus whatever exponent of
  // u_i is not consumed by copula factors inside this variable subset.
  for (int t = 0; t < c; ++t) {
    int deg_full = g.degree(comp[t]);
    double resid =
        deg_full > 0 ? static_cast<double>(deg_full - induced_deg[t]) / g.factor_count(comp[t])
                     : 1.0;
    Factor f;
    f.scope = {t};
    f.table.assign(2, 0.0);
    for (int z = 0; z <= 1; ++z) {
      double base = resid == 0.0 ? 1.0 : std::pow(uz[t][z], resid);
      f.table[z] = (z ? -1.0 : 1.0) * base;
    }
    factors.push_back(std::move(f));
  }

  // Greedy min-degree elimination over local variables.
  std::vector<bool> alive(c, true);
  double scalar = 1.0;
  for (int step = 0; step < c; ++step) {
    int best = -1;
    std::size_t best_size = 0;
    for (int v = 0; v < c; ++v) {
      if (!alive[v]) continue;
      std::vector<int> joint;
      for (const Factor& f : factors)
        if (std::find(f.scope.begin(), f.scope.end(), v) != f.scope.end())
          for (int w : f.scope)
            if (w != v && std::find(joint.begin(), joint.end(), w) == joint.end())
              joint.push_back(w);
      if (best < 0 || joint.size() < best_size) {
        best = v;
        best_size = joint.size();
      }
    }
    std::vector<Factor> touching, rest;
    for (Factor& f : factors)
      (std::find(f.scope.begin(), f.scope.end(), best) != f.scope.end() ? touching : rest)
          .push_back(std::move(f));
    Factor merged = multiply_and_sum_out(touching, best);
    if (merged.scope.empty()) {
      scalar *= merged.table[0];
    } else {
      rest.push_back(std::move(merged));
    }
    factors = std::move(rest);
    alive[best] = false;
  }
  for (const Factor& f : factors) scalar *= f.table[0];
  return scalar;
}

}  // namespace

double conditional_cdf(std::span<const int> vars, std::span<const int> y,
                       const MixedGraph& g, const ModelParams& params,
                       std::span<const double> x) {
  const Partition& part = g.partition();
  if (vars.size() != y.size()) throw DataError("conditional_cdf: vars/y length mismatch");
  if (x.size() != static_cast<std::size_t>(part.n_groups()))
    throw DataError("conditional_cdf: latent vector length mismatch");

  std::vector<int> slot(part.n_vars(), -1);
  for (std::size_t t = 0; t < vars.size(); ++t) {
    int v = vars[t];
    if (v < 0 || v >= part.n_vars()) throw DataError("conditional_cdf: variable out of range");
    if (slot[v] >= 0) throw DataError("conditional_cdf: duplicate variable");
    slot[v] = static_cast<int>(t);
  }

  std::vector<double> u(part.n_vars(), 1.0);
  for (std::size_t t = 0; t < vars.size(); ++t)
    u[vars[t]] = u_of(y[t], vars[t], params, x, part);

  double f = 1.0;
  for (const Edge& e : g.edges()) {
    double ua = pow_inv_h(u[e.a], 1.0 / g.factor_count(e.a));
    double ub = pow_inv_h(u[e.b], 1.0 / g.factor_count(e.b));
    f *= frank_cdf(ua, ub, params.thetas.at(e));
  }
  for (int v = 0; v < part.n_vars(); ++v)
    if (slot[v] >= 0 && g.degree(v) == 0) f *= u[v];
  return f;
}

double pmf(std::span<const int> vars, std::span<const int> y, const MixedGraph& g,
           const ModelParams& params, std::span<const double> x) {
  const Partition& part = g.partition();
  if (vars.size() != y.size()) throw DataError("pmf: vars/y length mismatch");
  if (x.size() != static_cast<std::size_t>(part.n_groups()))
    throw DataError("pmf: latent vector length mismatch");
  if (vars.empty()) return 1.0;

  std::vector<int> var_slot(part.n_vars(), -1);
  for (std::size_t t = 0; t < vars.size(); ++t) {
    int v = vars[t];
    if (v < 0 || v >= part.n_vars()) throw DataError("pmf: variable out of range");
    if (var_slot[v] >= 0) throw DataError("pmf: duplicate variable");
    if (y[t] != 0 && y[t] != 1) throw DataError("pmf: y values must be 0 or 1");
    var_slot[v] = static_cast<int>(t);
  }

  double prob = 1.0;
  std::vector<int> vv(vars.begin(), vars.end());
  for (const auto& comp : g.bidirected_components(vv)) {
    if (comp.size() == 1) {
      int v = comp[0];
      double u = u_of(0, v, params, x, part);
      prob *= clamp_prob(y[var_slot[v]] == 0 ? u : 1.0 - u);
    } else {
      prob *= clamp_prob(component_sum(comp, y, var_slot, g, params, x));
    }
  }
  return clamp_prob(prob);
}

PairShape pair_shape(int i, int j, const MixedGraph& g) {
  PairShape s;
  s.inv_hi = 1.0 / g.factor_count(i);
  s.inv_hj = 1.0 / g.factor_count(j);
  s.edged = g.has_edge(i, j);
  return s;
}

std::array<double, 4> biv_cells(double ui, double uj, const PairShape& shape, double theta) {
  double p00;
  if (!shape.edged) {
    p00 = ui * uj;
  } else if (ui <= 0.0 || uj <= 0.0) {
    p00 = 0.0;
  } else {
    double uhi = pow_inv_h(ui, shape.inv_hi);
    double uhj = pow_inv_h(uj, shape.inv_hj);
    p00 = frank_cdf(uhi, uhj, theta) * (ui / uhi) * (uj / uhj);
  }
  std::array<double, 4> cells;
  cells[0] = clamp_prob(p00);
  cells[1] = clamp_prob(ui - cells[0]);
  cells[2] = clamp_prob(uj - cells[0]);
  cells[3] = clamp_prob(1.0 - ui - uj + cells[0]);
  return cells;
}

std::array<double, 4> bivariate_pmf(int i, int j, const MixedGraph& g,
                                    const ModelParams& params, double xi, double xj) {
  if (i == j) throw DataError("bivariate_pmf: variables must be distinct");
  double ui = norm_cdf(-(params.slopes[i] * xi + params.intercepts[i]));
  double uj = norm_cdf(-(params.slopes[j] * xj + params.intercepts[j]));
  PairShape s = pair_shape(i, j, g);
  double theta = s.edged ? params.thetas.at(Edge(i, j)) : 0.0;
  return biv_cells(ui, uj, s, theta);
}

std::vector<std::uint8_t> sample_config(const MixedGraph& g, const ModelParams& params,
                                        std::span<const double> x, Rng& rng) {
  const Partition& part = g.partition();
  int p = part.n_vars();
  std::vector<std::uint8_t> out(p, 0);
  std::vector<int> vars, yv;
  double prev = 1.0;
  for (int i = 0; i < p; ++i) {
    vars.push_back(i);
    yv.push_back(0);
    double joint0 = pmf(vars, yv, g, params, x);
    if (prev <= 0.0) throw NumericError("sample_config: zero-probability prefix");
    double q0 = std::min(1.0, joint0 / prev);
    if (rng.uniform() < q0) {
      out[i] = 0;
      prev = joint0;
    } else {
      out[i] = 1;
      yv.back() = 1;
      prev = pmf(vars, yv, g, params, x);
    }
  }
  return out;
}

}  // namespace sccm
