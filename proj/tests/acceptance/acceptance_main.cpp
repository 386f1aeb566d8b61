// Acceptance harness: ten release criteria, one PASS/FAIL line each,
// nonzero exit when any line fails. Statistical criteria run pinned seeds
// and report their raw numbers so a failing line can be judged by eye.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sccm/benchmark.hpp"
#include "sccm/cdn.hpp"
#include "sccm/copula.hpp"
#include "sccm/laplace.hpp"
#include "sccm/learner.hpp"
#include "sccm/model.hpp"
#include "sccm/quadrature.hpp"
#include "sccm/rng.hpp"
#include "sccm/score.hpp"
#include "sccm/synthetic.hpp"

#include "../oracles.hpp"

using namespace sccm;

namespace {

int failures = 0;

std::string strf(const char* fmt, ...) {
  va_list ap;
  va_start(ap, fmt);
  char buf[1024];
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

void report(int id, bool pass, const std::string& detail) {
  std::printf("C%-2d %s: %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

// 1. Elimination-based pmf against direct inclusion-exclusion over CDF
// corners, plus total probability mass, on random instances up to p = 12.
void criterion1() {
  Rng gen(1);
  double worst_pmf = 0.0, worst_mass = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    int p = 3 + static_cast<int>(gen.below(10));
    auto in = oracle::random_instance(gen, p, 0.3);
    std::vector<int> vars(p);
    std::iota(vars.begin(), vars.end(), 0);
    std::vector<int> y(p);
    for (int rep = 0; rep < 6; ++rep) {
      for (auto& b : y) b = gen.bernoulli(0.5) ? 1 : 0;
      double lib = pmf(vars, y, in.graph, in.params, in.x);
      double ref = oracle::direct_pmf(vars, y, in.graph, in.params, in.x);
      worst_pmf = std::max(worst_pmf, std::fabs(lib - ref));
    }
    double mass = 0.0;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << p); ++m) {
      for (int v = 0; v < p; ++v) y[v] = static_cast<int>((m >> v) & 1);
      mass += pmf(vars, y, in.graph, in.params, in.x);
    }
    worst_mass = std::max(worst_mass, std::fabs(mass - 1.0));
  }
  report(1, worst_pmf <= 1e-10 && worst_mass <= 1e-9,
         strf("pmf vs direct inclusion-exclusion: max |diff| %.2e (tol 1e-10), "
              "max |sum-1| %.2e (tol 1e-9), 200 instances p<=12",
              worst_pmf, worst_mass));
}

// 2. Closed-form bivariate cells against the generic pmf path.
void criterion2() {
  Rng gen(2);
  double worst = 0.0;
  int done = 0;
  while (done < 1000) {
    int p = 3 + static_cast<int>(gen.below(6));
    auto in = oracle::random_instance(gen, p, 0.35);
    for (int k = 0; k < 10 && done < 1000; ++k, ++done) {
      int i = static_cast<int>(gen.below(p));
      int j = static_cast<int>(gen.below(p - 1));
      if (j >= i) ++j;
      if (i > j) std::swap(i, j);
      double xi = in.x[in.part->group_of(i)];
      double xj = in.x[in.part->group_of(j)];
      auto cells = bivariate_pmf(i, j, in.graph, in.params, xi, xj);
      for (int yi = 0; yi < 2; ++yi) {
        for (int yj = 0; yj < 2; ++yj) {
          int vv[2] = {i, j};
          int yy[2] = {yi, yj};
          double ref = pmf(vv, yy, in.graph, in.params, in.x);
          worst = std::max(worst, std::fabs(cells[yi * 2 + yj] - ref));
        }
      }
    }
  }
  report(2, worst <= 1e-12,
         strf("bivariate fast path vs generic pmf: max |diff| %.2e "
              "(tol 1e-12), 1000 pairs x 4 cells", worst));
}

// 3. Copula property battery: boundary identities, rectangle mass,
// continuity at theta = 0, squash round trips.
void criterion3() {
  Rng gen(3);
  double worst_bound = 0.0, worst_small = 0.0, worst_round = 0.0;
  double worst_rect = 0.0;  // most negative rectangle mass seen
  for (int k = 0; k < 20000; ++k) {
    double u = gen.uniform(), v = gen.uniform();
    double th = gen.uniform(-24.9, 24.9);
    worst_bound = std::max(worst_bound, std::fabs(frank_cdf(u, 1.0, th) - u));
    worst_bound = std::max(worst_bound, std::fabs(frank_cdf(1.0, v, th) - v));
    worst_bound = std::max(worst_bound, std::fabs(frank_cdf(u, 0.0, th)));
    worst_bound = std::max(worst_bound, std::fabs(frank_cdf(0.0, v, th)));

    double u2 = gen.uniform(), v2 = gen.uniform();
    double ulo = std::min(u, u2), uhi = std::max(u, u2);
    double vlo = std::min(v, v2), vhi = std::max(v, v2);
    double rect = frank_cdf(uhi, vhi, th) - frank_cdf(ulo, vhi, th) -
                  frank_cdf(uhi, vlo, th) + frank_cdf(ulo, vlo, th);
    worst_rect = std::min(worst_rect, rect);

    double ts = gen.uniform(-1e-6, 1e-6);
    worst_small = std::max(worst_small, std::fabs(frank_cdf(u, v, ts) - u * v));

    double z = gen.uniform(-12.0, 12.0);
    worst_round = std::max(worst_round, std::fabs(unsquash_theta(squash_theta(z)) - z));
    double tq = gen.uniform(-24.9, 24.9);
    worst_round = std::max(worst_round, std::fabs(squash_theta(unsquash_theta(tq)) - tq));
  }
  report(3,
         worst_bound <= 1e-12 && worst_rect >= -1e-12 && worst_small <= 1e-6 &&
             worst_round <= 1e-10,
         strf("copula properties (20000 draws): boundary %.2e, min rectangle "
              "%.2e (floor -1e-12), theta->0 %.2e (tol 1e-6), squash round "
              "trip %.2e (tol 1e-10)",
              worst_bound, worst_rect, worst_small, worst_round));
}

// 4. Latent-grid quadrature: pair correlations, exact unit mass.
void criterion4() {
  const auto& c = oracle::cache21();
  double worst_sum = 0.0, worst_exy = 0.0;
  int inexact = 0;
  double s1 = std::accumulate(c.w1.begin(), c.w1.end(), 0.0);
  worst_sum = std::fabs(s1 - 1.0);
  if (integrate_latent_1d([](double) { return 1.0; }, c) != 1.0) ++inexact;
  for (double sg : sigma_grid()) {
    const auto& w = c.weights2(sg);
    double s2 = std::accumulate(w.begin(), w.end(), 0.0);
    worst_sum = std::max(worst_sum, std::fabs(s2 - 1.0));
    double exy = 0.0;
    for (int a = 0; a < c.K; ++a)
      for (int b = 0; b < c.K; ++b)
        exy += w[a * c.K + b] * c.points[a] * c.points[b];
    worst_exy = std::max(worst_exy, std::fabs(exy - sg));
    if (integrate_pair_latent([](double, double) { return 1.0; }, sg, c) != 1.0)
      ++inexact;
  }
  report(4, worst_exy <= 0.02 && worst_sum <= 1e-12 && inexact == 0,
         strf("quadrature: max |E[XY]-sigma| %.4f (tol 0.02) over 100 grid "
              "values, max |weight sum-1| %.2e (tol 1e-12), non-exact unit "
              "integrals %d",
              worst_exy, worst_sum, inexact));
}

// 5. Laplace fit against a dense numeric posterior on small two-group
// instances. Kept in the weak-dependence regime: the exact posterior of z
// grows a one-sided heavy shoulder as |theta| rises (the likelihood
// flattens towards the Frechet bounds), so a Gaussian variance comparison
// is only meaningful where the posterior is near-Gaussian.
void criterion5() {
  const auto& c = oracle::cache21();
  Rng gen(1);
  int pass_n = 0;
  double worst_mode = 0.0, worst_var = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    std::vector<Partition::Group> gs(2);
    gs[0] = {"A", {"a1", "a2"}};
    gs[1] = {"B", {"b1", "b2"}};
    auto part = std::make_shared<Partition>(std::move(gs));
    MixedGraph g(part);
    g.add_edge(0, 2);
    ModelParams prm;
    prm.slopes.resize(4);
    prm.intercepts.resize(4);
    for (int v = 0; v < 4; ++v) {
      double mag = gen.uniform(0.8, 1.2);
      prm.slopes[v] = gen.bernoulli(0.5) ? mag : -mag;
      prm.intercepts[v] = gen.uniform(-0.3, 0.3);
    }
    double sig = snap_sigma(gen.uniform(-0.5, 0.5));
    prm.sigma = {1.0, sig, sig, 1.0};
    double th = gen.uniform(0.5, 1.4) * (gen.bernoulli(0.5) ? 1.0 : -1.0);
    prm.thetas[Edge(0, 2)] = th;
    Dataset d;
    d.names = {"a1", "a2", "b1", "b2"};
    d.p = 4;
    d.n = 500;
    std::vector<double> x(2);
    for (int r = 0; r < 500; ++r) {
      x[0] = gen.normal();
      x[1] = sig * x[0] + std::sqrt(1.0 - sig * sig) * gen.normal();
      auto row = sample_config(g, prm, x, gen);
      d.values.insert(d.values.end(), row.begin(), row.end());
    }
    auto st = compute_stats(d, *part);
    auto post = fit_group_pair_posterior(0, 1, g, prm, st, c);
    auto logpost = [&](double zv) {
      std::vector<double> z = {zv};
      return group_pair_loglik(0, 1, g, prm, st, c, z) - 0.5 * zv * zv;
    };
    // 400-point midpoint grid across mode +- 8 sd.
    double sd = std::sqrt(post.cov[0]);
    double lo = post.mode[0] - 8.0 * sd, hi = post.mode[0] + 8.0 * sd;
    const int M = 400;
    double lmax = -1e300, zarg = 0.0;
    std::vector<double> zs(M), lp(M);
    for (int t = 0; t < M; ++t) {
      zs[t] = lo + (hi - lo) * (t + 0.5) / M;
      lp[t] = logpost(zs[t]);
      if (lp[t] > lmax) {
        lmax = lp[t];
        zarg = zs[t];
      }
    }
    double w = 0.0, mean = 0.0, var = 0.0;
    for (int t = 0; t < M; ++t) {
      double pw = std::exp(lp[t] - lmax);
      w += pw;
      mean += pw * zs[t];
    }
    mean /= w;
    for (int t = 0; t < M; ++t)
      var += std::exp(lp[t] - lmax) * (zs[t] - mean) * (zs[t] - mean);
    var /= w;
    double dmode = std::fabs(post.mode[0] - zarg);
    double dvar = std::fabs(post.cov[0] / var - 1.0);
    worst_mode = std::max(worst_mode, dmode);
    worst_var = std::max(worst_var, dvar);
    if (dmode <= 0.05 && dvar <= 0.20) ++pass_n;
  }
  report(5, pass_n == 10,
         strf("laplace vs 400-point dense posterior: %d/10 instances, worst "
              "|mode diff| %.4f (tol 0.05), worst variance mismatch %.1f%% "
              "(tol 20%%)",
              pass_n, worst_mode, 100.0 * worst_var));
}

// 6. Intercept elimination reproduces target marginals through an
// independent 200-point Gauss-Hermite integral.
void criterion6() {
  Rng gen(6);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    double s = gen.uniform(-3.0, 3.0);
    double p0 = gen.uniform(0.02, 0.98);
    double b = intercept_from_marginal(s, p0);
    double marg =
        oracle::gh_normal_mean(200, [&](double xv) { return probit_cond_cdf(0, xv, s, b); });
    worst = std::max(worst, std::fabs(marg - p0));
  }
  report(6, worst <= 1e-6,
         strf("intercept elimination: max |model P(Y=0) - target| %.2e "
              "(tol 1e-6), 100 slope/marginal pairs, 200-point Gauss-Hermite",
              worst));
}

// 7 + 8. Structure-recovery benchmark, 10 trials at N = 5000, seed 1.
// Criterion 7 gates LSC-II's absolute error levels; criterion 8 gates the
// paired win counts. Both print the full table for manual review.
void criterion7_8() {
  BenchmarkConfig bc;
  bc.trials = 10;
  bc.n = 5000;
  bc.seed = 1;
  bc.out_dir =
      (std::filesystem::temp_directory_path() / "sccm_acceptance_bench").string();
  std::filesystem::remove_all(bc.out_dir);
  auto t0 = std::chrono::steady_clock::now();
  auto sum = run_benchmark(bc);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  auto pa = [&](const char* alg, const char* met, const char* stat) {
    return sum["per_algorithm"][alg][met][stat].get<double>();
  };
  auto cmp = [&](const char* key, const char* met, const char* field) {
    return sum["comparisons"][key][met][field];
  };
  std::printf("  benchmark: %d trials, n=%d, seed=%d, %d failures, %.0fs\n",
              sum["trials_used"].get<int>(), static_cast<int>(bc.n),
              static_cast<int>(bc.seed), sum["failures"].get<int>(), secs);
  std::printf("  %-12s %18s %18s %18s\n", "", "LSC-0", "LSC-I", "LSC-II");
  for (const char* met : {"omission", "commission", "slope_rmse"}) {
    std::printf("  %-12s", met);
    for (const char* alg : {"lsc0", "lsc1", "lsc2"})
      std::printf("   %8.4f (%6.4f)", pa(alg, met, "mean"), pa(alg, met, "median"));
    std::printf("\n");
  }
  std::printf("  %-24s %6s %10s %10s\n", "paired (II vs baseline)", "wins", "p", "mean diff");
  for (const char* key : {"lsc2_vs_lsc1", "lsc2_vs_lsc0"}) {
    for (const char* met : {"omission", "commission", "slope_rmse"}) {
      std::printf("  %-13s %-10s %3d/10 %10.4f %+10.5f\n", key, met,
                  cmp(key, met, "wins").get<int>(),
                  cmp(key, met, "wilcoxon_p").get<double>(),
                  cmp(key, met, "mean_diff").get<double>());
    }
  }
  std::fflush(stdout);

  double com_mean = pa("lsc2", "commission", "mean");
  double om_med = pa("lsc2", "omission", "median");
  bool ok7 = com_mean <= 0.05 && om_med <= 0.25 && sum["failures"].get<int>() == 0;
  report(7, ok7,
         strf("recovery at n=5000: LSC-II mean commission %.4f (tol 0.05), "
              "median omission %.4f (tol 0.25)",
              com_mean, om_med));

  int wins_com = cmp("lsc2_vs_lsc0", "commission", "wins").get<int>();
  int wins_rmse = cmp("lsc2_vs_lsc1", "slope_rmse", "wins").get<int>();
  double p_com = cmp("lsc2_vs_lsc0", "commission", "wilcoxon_p").get<double>();
  double p_rmse = cmp("lsc2_vs_lsc1", "slope_rmse", "wilcoxon_p").get<double>();
  report(8, wins_com >= 7 && wins_rmse >= 6,
         strf("paired wins: II commission <= 0-baseline in %d/10 (need >=7, "
              "p=%.3f); II slope rmse <= I in %d/10 (need >=6, p=%.3f)",
              wins_com, p_com, wins_rmse, p_rmse));
}

// 9. Embeddings from the learned model score held-out rows at least as well
// as an edge-free model fitted to the same data.
void criterion9() {
  const auto& cache = oracle::cache21();
  LearnConfig cfg;
  int wins = 0;
  std::string per;
  for (int t = 0; t < 5; ++t) {
    Rng tg = trial_rng(1, t, 9001);
    TrueModel truth = gen_true_model(SynthConfig{}, tg);
    Rng dg = trial_rng(1, t, 9002);
    Dataset train = gen_dataset(truth, 2000, dg);
    Rng hg = trial_rng(1, t, 9003);
    Dataset held = gen_dataset(truth, 200, hg);

    auto fit = learn_lsc1(truth.partition, train, cache);

    MixedGraph g0(truth.partition);
    auto st = compute_stats(train, *truth.partition);
    ModelParams p0 = init_parameters(g0, st);
    double prev = pcl(g0, p0, st, cache, cfg.k_theta);
    for (int it = 0; it < cfg.max_outer_iters; ++it) {
      p0 = optimize_params(ObjectiveKind::PclF, g0, p0, st, cache, cfg);
      double cur = pcl(g0, p0, st, cache, cfg.k_theta);
      if (cur - prev <= cfg.outer_tol) break;
      prev = cur;
    }

    double m_fit = 0.0, m_null = 0.0;
    for (std::size_t r = 0; r < held.n; ++r) {
      std::span<const std::uint8_t> row{held.values.data() + r * held.p,
                                        static_cast<std::size_t>(held.p)};
      m_fit += embed(row, fit.graph, fit.params).objective;
      m_null += embed(row, g0, p0).objective;
    }
    m_fit /= static_cast<double>(held.n);
    m_null /= static_cast<double>(held.n);
    if (m_fit >= m_null) ++wins;
    per += strf(" t%d:%+.4f", t, m_fit - m_null);
  }
  report(9, wins >= 4,
         strf("held-out embedding objective, learned >= edge-free in %d/5 "
              "trials (need >=4); per-trial mean gain:%s",
              wins, per.c_str()));
}

// 10. Ascent contracts: LSC-I trace never decreases (hard assertion);
// LSC-II regressions are counted and reported only.
void criterion10() {
  const auto& cache = oracle::cache21();
  bool mono = true;
  int regs2 = 0;
  std::string det;
  for (int t = 0; t < 3; ++t) {
    Rng tg = trial_rng(1, t, 8801);
    TrueModel truth = gen_true_model(SynthConfig{}, tg);
    Rng dg = trial_rng(1, t, 8802);
    Dataset data = gen_dataset(truth, 1500, dg);

    auto f1 = learn_lsc1(truth.partition, data, cache);
    double last = -std::numeric_limits<double>::infinity();
    for (const auto& e : f1.trace) {
      if (e.pcl_after_params < last || e.pcl_after_structure < e.pcl_after_params) mono = false;
      last = e.pcl_after_structure;
    }
    if (f1.pcl_regressions != 0) mono = false;

    auto f2 = learn_lsc2(truth.partition, data, cache);
    regs2 += f2.pcl_regressions;
    det += strf(" t%d[I:%d iters, II:%d iters %d regs]", t, f1.outer_iters,
                f2.outer_iters, f2.pcl_regressions);
  }
  report(10, mono,
         strf("lsc1 trace nondecreasing at every recorded step: %s; lsc2 "
              "regressions >1e-3: %d (diagnostic);%s",
              mono ? "yes" : "NO", regs2, det.c_str()));
}

void run(int id, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, false, strf("unhandled exception: %s", e.what()));
  }
}

}  // namespace

int main() {
  std::printf("acceptance suite (pinned seeds; statistical sections report raw numbers)\n");
  run(1, criterion1);
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  run(6, criterion6);
  try {
    criterion7_8();
  } catch (const std::exception& e) {
    report(7, false, strf("unhandled exception: %s", e.what()));
    report(8, false, "benchmark did not complete");
  }
  run(9, criterion9);
  run(10, criterion10);
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
