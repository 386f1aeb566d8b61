#include "sccm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sccm/errors.hpp"
#include "sccm/normal.hpp"

namespace sccm {

double edge_omission(const std::set<Edge>& truth, const std::set<Edge>& learned, int) {
  if (truth.empty()) throw DataError("omission undefined: no true edges");
  std::size_t missed = 0;
  for (const Edge& e : truth)
    if (!learned.count(e)) ++missed;
  return static_cast<double>(missed) / static_cast<double>(truth.size());
}

double edge_commission(const std::set<Edge>& truth, const std::set<Edge>& learned, int p) {
  const std::size_t all = static_cast<std::size_t>(p) * (p - 1) / 2;
  if (truth.size() >= all) throw DataError("commission undefined: no absent pairs");
  std::size_t wrong = 0;
  for (const Edge& e : learned)
    if (!truth.count(e)) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(all - truth.size());
}

double slope_rmse(std::span<const double> truth, std::span<const double> learned,
                  const Partition& part) {
  if (truth.size() != learned.size() ||
      truth.size() != static_cast<std::size_t>(part.n_vars()))
    throw DataError("slope vectors do not match the partition");
  double sse = 0.0;
  for (int m = 0; m < part.n_groups(); ++m) {
    double keep = 0.0, flip = 0.0;
    for (int v : part.group_members(m)) {
      double dk = learned[v] - truth[v];
      double df = -learned[v] - truth[v];
      keep += dk * dk;
      flip += df * df;
    }
    sse += std::min(keep, flip);
  }
  return std::sqrt(sse / static_cast<double>(truth.size()));
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("paired samples differ in length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) throw DataError("signed-rank test undefined: all differences zero");

  const int n = static_cast<int>(diffs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return std::fabs(diffs[x]) < std::fabs(diffs[y]);
  });

  // Average ranks within ties of |d|; track tie sizes for the normal
  // approximation's variance correction.
  std::vector<double> rank(n);
  std::vector<int> tie_sizes;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && std::fabs(diffs[order[j]]) == std::fabs(diffs[order[i]])) ++j;
    double avg = (i + 1 + j) / 2.0;  // mean of ranks i+1 .. j
    for (int k = i; k < j; ++k) rank[order[k]] = avg;
    if (j - i > 1) tie_sizes.push_back(j - i);
    i = j;
  }

  double w_pos = 0.0;
  for (int k = 0; k < n; ++k)
    if (diffs[k] > 0.0) w_pos += rank[k];

  WilcoxonResult res;
  res.statistic = w_pos;
  res.n_used = n;

  if (n <= 12) {
    // Exact: enumerate all sign assignments of the observed ranks.
    res.exact = true;
    const double total = n * (n + 1) / 2.0;
    double w_lo = std::min(w_pos, total - w_pos);
    std::uint64_t count_le = 0;
    const std::uint64_t lim = 1ull << n;
    const double eps = 1e-9;
    for (std::uint64_t mask = 0; mask < lim; ++mask) {
      double w = 0.0;
      for (int k = 0; k < n; ++k)
        if (mask >> k & 1ull) w += rank[k];
      double lo = std::min(w, total - w);
      if (lo <= w_lo + eps) ++count_le;
    }
    res.p_value = std::min(1.0, static_cast<double>(count_le) / static_cast<double>(lim));
  } else {
    double mean = n * (n + 1) / 4.0;
    double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    for (int t : tie_sizes) var -= (static_cast<double>(t) * t * t - t) / 48.0;
    if (!(var > 0.0)) throw DataError("signed-rank variance vanished (all ranks tied)");
    double z = (w_pos - mean) / std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * norm_cdf(-std::fabs(z)));
  }
  return res;
}

}  // namespace sccm
