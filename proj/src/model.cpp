#include "sccm/model.hpp"

#include <algorithm>
#include <cmath>

#include "sccm/errors.hpp"

namespace sccm {

Partition::Partition(std::vector<Group> groups) : groups_(std::move(groups)) {
  if (groups_.empty()) throw DataError("partition: needs at least one group");
  int gi = 0;
  for (const auto& g : groups_) {
    if (g.name.empty()) throw DataError("partition: empty group name");
    if (g.items.empty()) throw DataError("partition: group '" + g.name + "' has no items");
    if (!group_lookup_.emplace(g.name, gi).second)
      throw DataError("partition: duplicate group name '" + g.name + "'");
    members_.emplace_back();
    for (const auto& item : g.items) {
      if (item.empty()) throw DataError("partition: empty variable name");
      int vi = static_cast<int>(var_names_.size());
      if (!var_lookup_.emplace(item, vi).second)
        throw DataError("partition: duplicate variable name '" + item + "'");
      var_names_.push_back(item);
      group_of_.push_back(gi);
      members_[gi].push_back(vi);
    }
    ++gi;
  }
}

int Partition::var_index(const std::string& name) const {
  auto it = var_lookup_.find(name);
  if (it == var_lookup_.end()) throw DataError("unknown variable '" + name + "'");
  return it->second;
}

int Partition::group_index(const std::string& name) const {
  auto it = group_lookup_.find(name);
  if (it == group_lookup_.end()) throw DataError("unknown group '" + name + "'");
  return it->second;
}

MixedGraph::MixedGraph(std::shared_ptr<const Partition> part) : part_(std::move(part)) {
  if (!part_) throw DataError("mixed graph: null partition");
  degree_.assign(part_->n_vars(), 0);
}

void MixedGraph::check_var(int v) const {
  if (v < 0 || v >= part_->n_vars()) throw DataError("mixed graph: variable index out of range");
}

void MixedGraph::add_edge(int i, int j) {
  check_var(i);
  check_var(j);
  if (i == j) throw DataError("mixed graph: self edge");
  if (!edges_.insert(Edge(i, j)).second) throw DataError("mixed graph: edge already present");
  ++degree_[i];
  ++degree_[j];
}

void MixedGraph::remove_edge(int i, int j) {
  check_var(i);
  check_var(j);
  if (edges_.erase(Edge(i, j)) == 0) throw DataError("mixed graph: edge not present");
  --degree_[i];
  --degree_[j];
}

MixedGraph MixedGraph::flipped(int i, int j) const {
  MixedGraph out = *this;
  if (out.has_edge(i, j))
    out.remove_edge(i, j);
  else
    out.add_edge(i, j);
  return out;
}

std::vector<int> MixedGraph::joint_children(int m, int n) const {
  if (m == n) throw DataError("joint_children: groups must be distinct");
  if (m < 0 || n < 0 || m >= part_->n_groups() || n >= part_->n_groups())
    throw DataError("joint_children: group index out of range");
  std::vector<int> out = part_->group_members(m);
  const auto& other = part_->group_members(n);
  out.insert(out.end(), other.begin(), other.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<int>> MixedGraph::bidirected_components(
    const std::vector<int>& vars) const {
  std::map<int, int> comp;  // var -> component id (union-find by relabel; sets are tiny)
  for (int v : vars) {
    check_var(v);
    if (!comp.emplace(v, v).second) throw DataError("bidirected_components: duplicate variable");
  }
  auto root = [&](int v) {
    while (comp[v] != v) v = comp[v];
    return v;
  };
  for (const Edge& e : edges_) {
    if (comp.count(e.a) && comp.count(e.b)) {
      int ra = root(e.a), rb = root(e.b);
      if (ra != rb) comp[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  std::map<int, std::vector<int>> buckets;
  for (int v : vars) buckets[root(v)].push_back(v);
  std::vector<std::vector<int>> out;
  for (auto& [r, members] : buckets) {
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  return out;
}

std::vector<MixedGraph> edge_neighborhood(const MixedGraph& g) {
  std::vector<MixedGraph> out;
  int p = g.partition().n_vars();
  out.reserve(1 + p * (p - 1) / 2);
  out.push_back(g);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) out.push_back(g.flipped(i, j));
  return out;
}

const std::vector<double>& sigma_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int k = 0; k < 100; ++k) g.push_back(-0.99 + 0.02 * k);
    return g;
  }();
  return grid;
}

double snap_sigma(double x) {
  const auto& grid = sigma_grid();
  double best = grid[0];
  double bd = std::fabs(x - grid[0]);
  for (double v : grid) {
    double d = std::fabs(x - v);
    // Strict improvement keeps exact ties at the later (positive) candidate.
    if (d <= bd) {
      bd = d;
      best = v;
    }
  }
  return best;
}

bool sigma_on_grid(double x, double tol) { return std::fabs(x - snap_sigma(x)) <= tol; }

void ModelParams::validate(const MixedGraph& g) const {
  const Partition& part = g.partition();
  std::size_t p = static_cast<std::size_t>(part.n_vars());
  std::size_t G = static_cast<std::size_t>(part.n_groups());
  if (slopes.size() != p || intercepts.size() != p)
    throw DataError("params: slope/intercept length mismatch");
  if (sigma.size() != G * G) throw DataError("params: sigma shape mismatch");
  for (std::size_t m = 0; m < G; ++m) {
    if (std::fabs(sigma[m * G + m] - 1.0) > 1e-12)
      throw DataError("params: sigma diagonal must be 1");
    for (std::size_t n = m + 1; n < G; ++n) {
      double v = sigma[m * G + n];
      if (std::fabs(v - sigma[n * G + m]) > 1e-12)
        throw DataError("params: sigma must be symmetric");
      if (!sigma_on_grid(v)) throw DataError("params: sigma off-diagonal not on the grid");
    }
  }
  if (thetas.size() != g.edges().size()) throw DataError("params: theta/edge count mismatch");
  for (const Edge& e : g.edges())
    if (!thetas.count(e)) throw DataError("params: missing theta for an edge");
}

Dataset align_dataset(const Dataset& d, const Partition& part) {
  if (d.p != static_cast<std::size_t>(part.n_vars()))
    throw DataError("dataset: column count does not match partition");
  std::vector<std::size_t> src(part.n_vars());
  std::vector<bool> used(d.p, false);
  for (int i = 0; i < part.n_vars(); ++i) {
    auto it = std::find(d.names.begin(), d.names.end(), part.var_name(i));
    if (it == d.names.end())
      throw DataError("dataset: missing column '" + part.var_name(i) + "'");
    std::size_t idx = static_cast<std::size_t>(it - d.names.begin());
    if (used[idx]) throw DataError("dataset: duplicate column '" + part.var_name(i) + "'");
    used[idx] = true;
    src[i] = idx;
  }
  Dataset out;
  out.names = part.var_names();
  out.n = d.n;
  out.p = d.p;
  out.values.resize(d.n * d.p);
  for (std::size_t r = 0; r < d.n; ++r)
    for (std::size_t c = 0; c < d.p; ++c) out.values[r * d.p + c] = d.values[r * d.p + src[c]];
  return out;
}

}  // namespace sccm
