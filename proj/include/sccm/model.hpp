#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace sccm {

// Unordered pair of observed-variable indices, stored with a < b.
struct Edge {
  int a = 0;
  int b = 0;
  Edge() = default;
  Edge(int i, int j) : a(i < j ? i : j), b(i < j ? j : i) {}
  auto operator<=>(const Edge&) const = default;
};

// Expert partition: ordered groups of observed variables. The canonical
// variable order is the concatenation of the groups' item lists.
class Partition {
 public:
  struct Group {
    std::string name;
    std::vector<std::string> items;
  };

  explicit Partition(std::vector<Group> groups);

  int n_groups() const { return static_cast<int>(groups_.size()); }
  int n_vars() const { return static_cast<int>(var_names_.size()); }
  const std::vector<Group>& groups() const { return groups_; }
  const std::string& group_name(int m) const { return groups_[m].name; }
  const std::string& var_name(int i) const { return var_names_[i]; }
  const std::vector<std::string>& var_names() const { return var_names_; }

  int group_of(int var) const { return group_of_[var]; }
  const std::vector<int>& group_members(int m) const { return members_[m]; }

  // Lookups by name; unknown names are data errors.
  int var_index(const std::string& name) const;
  int group_index(const std::string& name) const;

 private:
  std::vector<Group> groups_;
  std::vector<std::string> var_names_;
  std::vector<int> group_of_;
  std::vector<std::vector<int>> members_;
  std::map<std::string, int> var_lookup_;
  std::map<std::string, int> group_lookup_;
};

// Bi-directed graph over the observed variables of a fixed partition.
// Immutable partition, value-semantic edge set.
class MixedGraph {
 public:
  explicit MixedGraph(std::shared_ptr<const Partition> part);

  const Partition& partition() const { return *part_; }
  const std::shared_ptr<const Partition>& partition_ptr() const { return part_; }

  bool has_edge(int i, int j) const { return edges_.count(Edge(i, j)) > 0; }
  void add_edge(int i, int j);
  void remove_edge(int i, int j);
  MixedGraph flipped(int i, int j) const;

  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::set<Edge>& edges() const { return edges_; }
  int degree(int v) const { return degree_[v]; }
  // Exponent denominator: number of adjacent bi-directed edges, floored at 1.
  int factor_count(int v) const { return degree_[v] > 0 ? degree_[v] : 1; }

  // Children of two distinct groups, canonical order.
  std::vector<int> joint_children(int m, int n) const;

  // Connected components of the bi-directed subgraph induced on `vars`
  // (singletons included), each sorted, ordered by smallest member.
  std::vector<std::vector<int>> bidirected_components(const std::vector<int>& vars) const;

 private:
  void check_var(int v) const;

  std::shared_ptr<const Partition> part_;
  std::set<Edge> edges_;
  std::vector<int> degree_;
};

// The graph itself followed by every single-edge flip in lexicographic pair
// order; size 1 + p(p-1)/2.
std::vector<MixedGraph> edge_neighborhood(const MixedGraph& g);

// Latent correlation grid: odd multiples of 0.01 in [-0.99, 0.99].
const std::vector<double>& sigma_grid();
double snap_sigma(double x);
bool sigma_on_grid(double x, double tol = 1e-6);

// Model parameters companion to a MixedGraph.
struct ModelParams {
  std::vector<double> slopes;      // per variable, canonical order
  std::vector<double> intercepts;  // per variable
  std::vector<double> sigma;       // n_groups x n_groups, row-major
  std::map<Edge, double> thetas;   // one entry per edge of the companion graph

  double sig(int m, int n, int G) const { return sigma[m * G + n]; }
  void set_sig(int m, int n, int G, double v) {
    sigma[m * G + n] = v;
    sigma[n * G + m] = v;
  }

  // Shape/grid/theta-key consistency with the graph; throws DataError.
  void validate(const MixedGraph& g) const;
};

// Binary dataset; columns in canonical order of some partition.
struct Dataset {
  std::vector<std::string> names;
  std::vector<std::uint8_t> values;  // row-major n x p
  std::size_t n = 0;
  std::size_t p = 0;

  std::uint8_t at(std::size_t row, std::size_t col) const { return values[row * p + col]; }
};

// Reorder dataset columns to match the partition's canonical order; errors if
// the column sets differ.
Dataset align_dataset(const Dataset& d, const Partition& part);

}  // namespace sccm
