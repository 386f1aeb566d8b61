#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sccm/learner.hpp"
#include "sccm/synthetic.hpp"

namespace sccm {

struct BenchmarkConfig {
  int trials = 20;
  std::size_t n = 5000;
  std::vector<std::string> algorithms{"lsc0", "lsc1", "lsc2"};
  std::uint64_t seed = 1;
  std::string out_dir;
  int jobs = 0;  // 0 = hardware concurrency
  bool resume = false;
  int k_latent = 21;
  SynthConfig synth{};
  LearnConfig learn{};
};

// Deterministic per-trial RNG stream, independent of how trials are
// scheduled across workers.
Rng trial_rng(std::uint64_t seed, int trial, std::uint64_t stream);

// Recovery metrics of one fitted model against the ground truth.
nlohmann::json trial_metrics(const TrueModel& truth, const FittedModel& fit);

// Paired comparison of one metric across two per-trial series: mean
// difference, wins (a <= b), and the signed-rank p-value.
nlohmann::json compare_series(const std::vector<double>& a, const std::vector<double>& b);

// Simulate -> learn (each algorithm) -> metrics for every trial, writing
// per-trial artifacts under out_dir and returning the summary (also written
// to out_dir/summary.json). Trial failures are recorded, not fatal.
nlohmann::json run_benchmark(const BenchmarkConfig& cfg);

}  // namespace sccm
