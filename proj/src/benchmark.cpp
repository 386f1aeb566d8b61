#include "sccm/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "sccm/errors.hpp"
#include "sccm/io.hpp"
#include "sccm/metrics.hpp"

namespace sccm {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string trial_dir_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "trial_%03d", t);
  return buf;
}

double mean_of(std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

FittedModel run_algorithm(const std::string& algo, std::shared_ptr<const Partition> part,
                          const Dataset& data, const QuadratureCache& cache,
                          const LearnConfig& lc) {
  if (algo == "lsc0") return learn_lsc0(std::move(part), data, cache, lc);
  if (algo == "lsc1") return learn_lsc1(std::move(part), data, cache, lc);
  if (algo == "lsc2") return learn_lsc2(std::move(part), data, cache, lc);
  throw UsageError("unknown algorithm \"" + algo + "\"");
}

}  // namespace

Rng trial_rng(std::uint64_t seed, int trial, std::uint64_t stream) {
  std::uint64_t s = seed;
  s = splitmix64(s + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(trial + 1));
  s = splitmix64(s + 0xbf58476d1ce4e5b9ull * (stream + 1));
  return Rng(s);
}

json trial_metrics(const TrueModel& truth, const FittedModel& fit) {
  const int p = truth.partition->n_vars();
  json m;
  m["schema_version"] = kMetricsSchemaVersion;
  m["edges_true"] = truth.graph.edge_count();
  m["edges_learned"] = fit.graph.edge_count();
  m["omission"] = edge_omission(truth.graph.edges(), fit.graph.edges(), p);
  m["commission"] = edge_commission(truth.graph.edges(), fit.graph.edges(), p);
  m["slope_rmse"] = slope_rmse(truth.params.slopes, fit.params.slopes, *truth.partition);
  m["final_pcl"] = fit.final_pcl;
  m["converged"] = fit.converged;
  m["outer_iters"] = fit.outer_iters;
  m["pcl_regressions"] = fit.pcl_regressions;
  if (!fit.warnings.empty()) m["warnings"] = fit.warnings;
  return m;
}

json compare_series(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw DataError("compared series must be non-empty and equally long");
  json out;
  out["n"] = a.size();
  std::vector<double> diffs(a.size());
  int wins = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diffs[i] = a[i] - b[i];
    if (a[i] <= b[i]) ++wins;
  }
  out["mean_diff"] = mean_of(diffs);
  out["wins"] = wins;  // trials where the first series is no worse
  try {
    WilcoxonResult w = wilcoxon_signed_rank(a, b);
    out["wilcoxon_w"] = w.statistic;
    out["wilcoxon_p"] = w.p_value;
    out["wilcoxon_exact"] = w.exact;
  } catch (const DataError&) {
    out["wilcoxon_p"] = nullptr;  // all differences zero
  }
  return out;
}

json run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.trials < 1) throw UsageError("benchmark needs at least one trial");
  if (cfg.algorithms.empty()) throw UsageError("benchmark needs at least one algorithm");
  if (cfg.out_dir.empty()) throw UsageError("benchmark needs an output directory");
  for (const std::string& a : cfg.algorithms)
    if (a != "lsc0" && a != "lsc1" && a != "lsc2")
      throw UsageError("unknown algorithm \"" + a + "\"");

  fs::create_directories(cfg.out_dir);
  QuadratureCache cache = build_quadrature_cache(cfg.k_latent);

  std::vector<json> results(cfg.trials);
  std::atomic<int> next{0};
  std::mutex io_mutex;

  auto run_trial = [&](int t) {
    fs::path dir = fs::path(cfg.out_dir) / trial_dir_name(t);
    json rec;
    rec["trial"] = t;
    fs::path done = dir / "result.json";
    if (cfg.resume && fs::exists(done)) {
      try {
        rec = load_json(done.string());
        rec["resumed"] = true;
        return rec;
      } catch (const std::exception&) {
        // fall through and recompute
      }
    }
    try {
      fs::create_directories(dir);
      Rng rng_truth = trial_rng(cfg.seed, t, 0);
      TrueModel truth = gen_true_model(cfg.synth, rng_truth);
      Rng rng_data = trial_rng(cfg.seed, t, 1);
      Dataset data = gen_dataset(truth, cfg.n, rng_data);

      ModelFile tf(truth.graph);
      tf.params = truth.params;
      tf.sigma_raw = truth.sigma_raw;
      save_model((dir / "truth.json").string(), tf);
      save_csv((dir / "data.csv").string(), data);
      save_json((dir / "partition.json").string(), partition_to_json(*truth.partition));

      rec["algorithms"] = json::object();
      for (const std::string& algo : cfg.algorithms) {
        auto t0 = std::chrono::steady_clock::now();
        FittedModel fit = run_algorithm(algo, truth.partition, data, cache, cfg.learn);
        auto t1 = std::chrono::steady_clock::now();

        ModelFile mf(fit.graph);
        mf.params = fit.params;
        save_model((dir / ("model_" + algo + ".json")).string(), mf);

        json jm = trial_metrics(truth, fit);
        jm["seconds"] = std::chrono::duration<double>(t1 - t0).count();
        rec["algorithms"][algo] = std::move(jm);
      }
      save_json(done.string(), rec);
    } catch (const std::exception& e) {
      rec["error"] = e.what();
      std::lock_guard<std::mutex> lk(io_mutex);
      try {
        fs::create_directories(dir);
        save_json(done.string(), rec);
      } catch (const std::exception&) {
      }
    }
    return rec;
  };

  int jobs = cfg.jobs > 0 ? cfg.jobs
                          : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, cfg.trials);
  if (jobs <= 1) {
    for (int t = 0; t < cfg.trials; ++t) results[t] = run_trial(t);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1))
          results[t] = run_trial(t);
      });
    for (std::thread& th : pool) th.join();
  }

  // Summary reduction in trial order.
  json summary;
  summary["schema_version"] = kSummarySchemaVersion;
  summary["trials"] = cfg.trials;
  summary["n"] = cfg.n;
  summary["seed"] = cfg.seed;
  summary["algorithms"] = cfg.algorithms;

  int failures = 0;
  std::vector<int> ok_trials;
  for (int t = 0; t < cfg.trials; ++t) {
    if (results[t].contains("error")) {
      ++failures;
    } else {
      bool all = true;
      for (const std::string& algo : cfg.algorithms)
        if (!results[t]["algorithms"].contains(algo) ||
            results[t]["algorithms"][algo].contains("error"))
          all = false;
      if (all)
        ok_trials.push_back(t);
      else
        ++failures;
    }
  }
  summary["failures"] = failures;
  summary["trials_used"] = ok_trials.size();

  const char* metric_names[] = {"omission", "commission", "slope_rmse"};
  json per_algo = json::object();
  std::map<std::string, std::map<std::string, std::vector<double>>> series;
  for (const std::string& algo : cfg.algorithms) {
    json stats = json::object();
    for (const char* mn : metric_names) {
      std::vector<double>& v = series[algo][mn];
      for (int t : ok_trials) v.push_back(results[t]["algorithms"][algo][mn].get<double>());
      if (!v.empty()) {
        stats[mn] = {{"mean", mean_of(v)}, {"median", median_of(v)}};
      }
    }
    std::vector<double> regs;
    for (int t : ok_trials)
      regs.push_back(results[t]["algorithms"][algo]["pcl_regressions"].get<double>());
    if (!regs.empty()) stats["pcl_regressions_total"] = std::accumulate(regs.begin(), regs.end(), 0.0);
    per_algo[algo] = std::move(stats);
  }
  summary["per_algorithm"] = std::move(per_algo);

  // Paired comparisons in the study's table layout: rows are algorithm
  // pairs, columns are metrics.
  json comparisons = json::object();
  if (!ok_trials.empty()) {
    for (std::size_t x = 0; x < cfg.algorithms.size(); ++x)
      for (std::size_t y = 0; y < cfg.algorithms.size(); ++y) {
        if (x == y) continue;
        const std::string &ax = cfg.algorithms[x], &ay = cfg.algorithms[y];
        json row = json::object();
        for (const char* mn : metric_names)
          row[mn] = compare_series(series[ax][mn], series[ay][mn]);
        comparisons[ax + "_vs_" + ay] = std::move(row);
      }
  }
  summary["comparisons"] = std::move(comparisons);

  save_json((fs::path(cfg.out_dir) / "summary.json").string(), summary);
  return summary;
}

}  // namespace sccm
