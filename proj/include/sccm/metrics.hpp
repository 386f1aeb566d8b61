#pragma once

#include <set>
#include <span>
#include <vector>

#include "sccm/model.hpp"

namespace sccm {

// Fraction of true edges missing from the learned set. Errors if no true
// edges exist.
double edge_omission(const std::set<Edge>& truth, const std::set<Edge>& learned, int p);

// Fraction of absent pairs wrongly given an edge. Errors when every pair is a
// true edge.
double edge_commission(const std::set<Edge>& truth, const std::set<Edge>& learned, int p);

// RMSE between slope vectors after choosing, per group, the sign of the
// learned slopes that minimizes the squared error (the latent scale fixes
// slopes only up to a per-factor sign).
double slope_rmse(std::span<const double> truth, std::span<const double> learned,
                  const Partition& part);

struct WilcoxonResult {
  double statistic = 0.0;  // W+, sum of positive-difference ranks
  double p_value = 1.0;    // two-sided
  int n_used = 0;          // non-zero differences
  bool exact = false;
};

// Two-sided Wilcoxon signed-rank test on paired differences. Zeros are
// dropped; ties get average ranks. Exact enumeration up to 12 usable pairs,
// normal approximation with tie correction beyond.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

}  // namespace sccm
