#include "sccm/synthetic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "sccm/cdn.hpp"
#include "sccm/copula.hpp"
#include "sccm/errors.hpp"

namespace sccm {

namespace {

std::shared_ptr<const Partition> make_partition(const SynthConfig& cfg) {
  std::vector<Partition::Group> groups(cfg.n_groups);
  for (int m = 0; m < cfg.n_groups; ++m) {
    groups[m].name = "G" + std::to_string(m + 1);
    for (int c = 0; c < cfg.children_per_group; ++c)
      groups[m].items.push_back("Y" + std::to_string(m + 1) + "_" + std::to_string(c + 1));
  }
  return std::make_shared<Partition>(std::move(groups));
}

// Does the group keep `size` children with no edges among them?
bool has_independent_set(const MixedGraph& g, const std::vector<int>& members, int size) {
  const int k = static_cast<int>(members.size());
  if (size > k) return false;
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    if (std::popcount(mask) != size) continue;
    bool ok = true;
    for (int a = 0; a < k && ok; ++a)
      for (int b = a + 1; b < k && ok; ++b)
        if ((mask >> a & 1u) && (mask >> b & 1u) && g.has_edge(members[a], members[b]))
          ok = false;
    if (ok) return true;
  }
  return false;
}

bool admissible(const MixedGraph& g, const Partition& part, const SynthConfig& cfg) {
  for (int v = 0; v < part.n_vars(); ++v)
    if (g.degree(v) > cfg.max_degree) return false;
  for (int m = 0; m < part.n_groups(); ++m)
    if (!has_independent_set(g, part.group_members(m), cfg.independence_size)) return false;
  return true;
}

MixedGraph gen_graph(std::shared_ptr<const Partition> part, const SynthConfig& cfg, Rng& rng) {
  const Partition& p = *part;
  MixedGraph g(part);
  for (int i = 0; i < p.n_vars(); ++i)
    for (int j = i + 1; j < p.n_vars(); ++j)
      if (rng.bernoulli(cfg.edge_prob)) g.add_edge(i, j);
  // Remove random edges until admissible, picking only among edges that
  // touch a violation so most of the sampled structure survives; edges
  // whose removal relieves two overfull endpoints at once go first.
  while (!admissible(g, p, cfg)) {
    std::vector<Edge> candidates, both;
    for (const Edge& e : g.edges()) {
      bool ba = g.degree(e.a) > cfg.max_degree;
      bool bb = g.degree(e.b) > cfg.max_degree;
      bool bad = ba || bb;
      if (!bad && p.group_of(e.a) == p.group_of(e.b))
        bad = !has_independent_set(g, p.group_members(p.group_of(e.a)),
                                   cfg.independence_size);
      if (bad) candidates.push_back(e);
      if (ba && bb) both.push_back(e);
    }
    if (candidates.empty()) throw NumericError("synthetic pruning found no removable edge");
    const std::vector<Edge>& pool = both.empty() ? candidates : both;
    const Edge& pick = pool[rng.below(pool.size())];
    g.remove_edge(pick.a, pick.b);
  }
  return g;
}

// Correlation matrix from a Wishart draw; regenerated if nearly singular.
std::vector<double> gen_sigma(int G, Rng& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::MatrixXd Z(G, G);
    for (int r = 0; r < G; ++r)
      for (int c = 0; c < G; ++c) Z(r, c) = rng.normal();
    Eigen::MatrixXd W = Z * Z.transpose();
    Eigen::VectorXd d = W.diagonal().array().sqrt();
    bool ok = true;
    for (int r = 0; r < G && ok; ++r)
      if (!(d(r) > 1e-8)) ok = false;
    if (!ok) continue;
    Eigen::MatrixXd C = d.asDiagonal().inverse() * W * d.asDiagonal().inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.eigenvalues().minCoeff() < 1e-6) continue;
    std::vector<double> out(static_cast<std::size_t>(G) * G);
    for (int r = 0; r < G; ++r)
      for (int c = 0; c < G; ++c) out[r * G + c] = r == c ? 1.0 : C(r, c);
    return out;
  }
  throw NumericError("could not draw a well-conditioned latent correlation matrix");
}

}  // namespace

TrueModel gen_true_model(const SynthConfig& cfg, Rng& rng) {
  if (cfg.n_groups < 1 || cfg.children_per_group < 1)
    throw UsageError("synthetic sizes must be positive");
  if (cfg.independence_size > cfg.children_per_group)
    throw UsageError("independence requirement exceeds group size");

  auto part = make_partition(cfg);
  const int p = part->n_vars();
  const int G = part->n_groups();

  TrueModel t{part, gen_graph(part, cfg, rng), {}, {}};

  t.params.slopes.resize(p);
  t.params.intercepts.resize(p);
  for (int v = 0; v < p; ++v) {
    double s = rng.uniform(cfg.slope_s_lo, cfg.slope_s_hi);
    double mag = std::sqrt(s / (1.0 - s));
    t.params.slopes[v] = rng.bernoulli(0.5) ? mag : -mag;
    double m = rng.uniform(cfg.marg_lo, cfg.marg_hi);
    t.params.intercepts[v] = intercept_from_marginal(t.params.slopes[v], m);
  }
  for (const Edge& e : t.graph.edges())
    t.params.thetas[e] = rng.uniform(cfg.theta_lo, cfg.theta_hi);

  t.sigma_raw = gen_sigma(G, rng);
  t.params.sigma = t.sigma_raw;
  for (int m = 0; m < G; ++m)
    for (int n = 0; n < G; ++n)
      if (m != n) t.params.sigma[m * G + n] = snap_sigma(t.sigma_raw[m * G + n]);
  t.params.validate(t.graph);
  return t;
}

Dataset gen_dataset(const TrueModel& truth, std::size_t n, Rng& rng) {
  const Partition& part = *truth.partition;
  const int G = part.n_groups();

  Eigen::MatrixXd S(G, G);
  for (int r = 0; r < G; ++r)
    for (int c = 0; c < G; ++c) S(r, c) = truth.sigma_raw[r * G + c];
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericError("latent correlation matrix is not positive definite");
  Eigen::MatrixXd L = llt.matrixL();

  Dataset out;
  out.names = part.var_names();
  out.n = n;
  out.p = static_cast<std::size_t>(part.n_vars());
  out.values.reserve(n * out.p);
  std::vector<double> z(G), x(G);
  for (std::size_t r = 0; r < n; ++r) {
    for (int m = 0; m < G; ++m) z[m] = rng.normal();
    for (int m = 0; m < G; ++m) {
      double acc = 0.0;
      for (int k = 0; k <= m; ++k) acc += L(m, k) * z[k];
      x[m] = acc;
    }
    std::vector<std::uint8_t> row = sample_config(truth.graph, truth.params, x, rng);
    out.values.insert(out.values.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace sccm
