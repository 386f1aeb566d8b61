#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sccm/benchmark.hpp"
#include "sccm/errors.hpp"
#include "sccm/io.hpp"
#include "sccm/learner.hpp"
#include "sccm/metrics.hpp"
#include "sccm/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonGrids {
  int k_latent = 21;
  int k_theta = 15;
};

void add_grid_options(CLI::App* cmd, CommonGrids& g) {
  cmd->add_option("--latent-grid", g.k_latent, "Latent quadrature size (odd)")
      ->envname("SCCM_LATENT_GRID");
  cmd->add_option("--theta-grid", g.k_theta, "Dependence grid size")
      ->envname("SCCM_THETA_GRID");
}

void check_partition_match(const sccm::Partition& a, const sccm::Partition& b) {
  if (a.var_names() != b.var_names() || a.n_groups() != b.n_groups())
    throw sccm::DataError("partition does not match the model's variables");
  for (int m = 0; m < a.n_groups(); ++m)
    if (a.group_members(m) != b.group_members(m))
      throw sccm::DataError("partition grouping does not match the model");
}

int run(int argc, char** argv) {
  CLI::App app{"Structured canonical correlation models for binary data"};
  app.require_subcommand(0, 1);

  bool show_version = false;
  app.add_flag("--version", show_version, "Print file schema versions");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate synthetic trials");
  int sim_trials = 20;
  std::size_t sim_n = 5000;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  sccm::SynthConfig synth;
  sim->add_option("--trials", sim_trials, "Number of trials")->check(CLI::PositiveNumber);
  sim->add_option("--n", sim_n, "Rows per trial")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--out-dir", sim_out, "Output directory")->required();
  sim->add_option("--groups", synth.n_groups, "Latent groups")->check(CLI::PositiveNumber);
  sim->add_option("--children", synth.children_per_group, "Children per group")
      ->check(CLI::PositiveNumber);

  // learn
  auto* lrn = app.add_subcommand("learn", "Fit a model to data");
  std::string lrn_data, lrn_part, lrn_algo = "lsc2", lrn_out;
  std::uint64_t lrn_seed = 1;
  CommonGrids lrn_grids;
  int lrn_max_iters = 50;
  lrn->add_option("--data", lrn_data, "Data CSV")->required();
  lrn->add_option("--partition", lrn_part, "Partition JSON")->required();
  lrn->add_option("--algo", lrn_algo, "Algorithm")
      ->check(CLI::IsMember({"lsc0", "lsc1", "lsc2"}));
  lrn->add_option("--out", lrn_out, "Output model JSON")->required();
  add_grid_options(lrn, lrn_grids);
  lrn->add_option("--max-iters", lrn_max_iters, "Outer iteration cap")
      ->check(CLI::PositiveNumber);
  lrn->add_option("--seed", lrn_seed, "RNG seed (reserved; learning is deterministic)");

  // score
  auto* scr = app.add_subcommand("score", "Print the penalized composite likelihood");
  std::string scr_data, scr_part, scr_model;
  CommonGrids scr_grids;
  scr->add_option("--data", scr_data, "Data CSV")->required();
  scr->add_option("--partition", scr_part, "Partition JSON")->required();
  scr->add_option("--model", scr_model, "Model JSON")->required();
  add_grid_options(scr, scr_grids);

  // embed
  auto* emb = app.add_subcommand("embed", "Latent embeddings for data rows");
  std::string emb_model, emb_data, emb_out;
  emb->add_option("--model", emb_model, "Model JSON")->required();
  emb->add_option("--data", emb_data, "Data CSV")->required();
  emb->add_option("--out", emb_out, "Output CSV")->required();

  // eval
  auto* evl = app.add_subcommand("eval", "Recovery metrics against ground truth");
  std::string evl_truth, evl_learned, evl_out, evl_a, evl_b;
  bool evl_compare = false;
  evl->add_option("--truth", evl_truth, "Ground-truth model JSON");
  evl->add_option("--learned", evl_learned, "Learned model JSON");
  evl->add_option("--out", evl_out, "Output metrics JSON")->required();
  evl->add_flag("--compare", evl_compare, "Compare two per-trial metric files");
  evl->add_option("--a", evl_a, "First per-trial metrics JSON (compare mode)");
  evl->add_option("--b", evl_b, "Second per-trial metrics JSON (compare mode)");

  // benchmark
  auto* bch = app.add_subcommand("benchmark", "Simulate + learn + evaluate many trials");
  sccm::BenchmarkConfig bcfg;
  std::string bch_algos = "lsc0,lsc1,lsc2";
  CommonGrids bch_grids;
  bch->add_option("--trials", bcfg.trials, "Number of trials")->check(CLI::PositiveNumber);
  bch->add_option("--n", bcfg.n, "Rows per trial")->check(CLI::PositiveNumber);
  bch->add_option("--seed", bcfg.seed, "RNG seed");
  bch->add_option("--out-dir", bcfg.out_dir, "Output directory")->required();
  bch->add_option("--algos", bch_algos, "Comma-separated subset of lsc0,lsc1,lsc2");
  bch->add_option("--jobs", bcfg.jobs, "Worker threads (0 = all cores)");
  bch->add_flag("--resume", bcfg.resume, "Skip trials with existing results");
  add_grid_options(bch, bch_grids);
  bch->add_option("--max-iters", bcfg.learn.max_outer_iters, "Outer iteration cap")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (show_version) {
    json v{{"partition", sccm::kPartitionSchemaVersion},
           {"model", sccm::kModelSchemaVersion},
           {"metrics", sccm::kMetricsSchemaVersion},
           {"summary", sccm::kSummarySchemaVersion}};
    std::cout << v.dump(2) << '\n';
    return 0;
  }
  if (app.get_subcommands().empty()) throw sccm::UsageError("a subcommand is required");

  if (sim->parsed()) {
    fs::create_directories(sim_out);
    for (int t = 0; t < sim_trials; ++t) {
      fs::path dir = fs::path(sim_out) / [&] {
        char buf[16];
        std::snprintf(buf, sizeof buf, "trial_%03d", t);
        return std::string(buf);
      }();
      fs::create_directories(dir);
      sccm::Rng rng_truth = sccm::trial_rng(sim_seed, t, 0);
      sccm::TrueModel truth = sccm::gen_true_model(synth, rng_truth);
      sccm::Rng rng_data = sccm::trial_rng(sim_seed, t, 1);
      sccm::Dataset data = sccm::gen_dataset(truth, sim_n, rng_data);
      sccm::ModelFile tf(truth.graph);
      tf.params = truth.params;
      tf.sigma_raw = truth.sigma_raw;
      sccm::save_model((dir / "truth.json").string(), tf);
      sccm::save_csv((dir / "data.csv").string(), data);
      sccm::save_json((dir / "partition.json").string(),
                      sccm::partition_to_json(*truth.partition));
    }
    return 0;
  }

  if (lrn->parsed()) {
    auto part = sccm::load_partition(lrn_part);
    sccm::Dataset data = sccm::load_csv(lrn_data);
    sccm::QuadratureCache cache = sccm::build_quadrature_cache(lrn_grids.k_latent);
    sccm::LearnConfig lc;
    lc.k_theta = lrn_grids.k_theta;
    lc.max_outer_iters = lrn_max_iters;
    sccm::FittedModel fit = [&] {
      if (lrn_algo == "lsc0") return sccm::learn_lsc0(part, data, cache, lc);
      if (lrn_algo == "lsc1") return sccm::learn_lsc1(part, data, cache, lc);
      return sccm::learn_lsc2(part, data, cache, lc);
    }();
    sccm::ModelFile mf(fit.graph);
    mf.params = fit.params;
    sccm::save_model(lrn_out, mf);
    json report{{"algo", lrn_algo},
                {"edges", fit.graph.edge_count()},
                {"final_pcl", fit.final_pcl},
                {"outer_iters", fit.outer_iters},
                {"converged", fit.converged},
                {"pcl_regressions", fit.pcl_regressions}};
    if (!fit.warnings.empty()) report["warnings"] = fit.warnings;
    std::cout << report.dump(2) << '\n';
    return 0;
  }

  if (scr->parsed()) {
    auto part = sccm::load_partition(scr_part);
    sccm::ModelFile mf = sccm::load_model(scr_model);
    check_partition_match(*part, *mf.partition);
    sccm::Dataset data = sccm::align_dataset(sccm::load_csv(scr_data), *mf.partition);
    sccm::SufficientStats stats = sccm::compute_stats(data, *mf.partition);
    sccm::QuadratureCache cache = sccm::build_quadrature_cache(scr_grids.k_latent);
    const sccm::Partition& pt = *mf.partition;
    json pairs = json::array();
    double total = 0.0;
    for (int i = 0; i < pt.n_vars(); ++i)
      for (int j = i + 1; j < pt.n_vars(); ++j) {
        double s = sccm::pair_score(i, j, mf.graph, mf.params, stats, cache,
                                    scr_grids.k_theta);
        total += s;
        pairs.push_back({{"pair", {pt.var_name(i), pt.var_name(j)}},
                         {"edge", mf.graph.has_edge(i, j)},
                         {"score", s}});
      }
    json out{{"pcl", total + sccm::graph_log_prior(mf.graph)},
             {"graph_log_prior", sccm::graph_log_prior(mf.graph)},
             {"pairs", std::move(pairs)}};
    std::cout << out.dump(2) << '\n';
    return 0;
  }

  if (emb->parsed()) {
    sccm::ModelFile mf = sccm::load_model(emb_model);
    sccm::Dataset data = sccm::align_dataset(sccm::load_csv(emb_data), *mf.partition);
    std::ofstream out(emb_out);
    if (!out) throw sccm::DataError("cannot write " + emb_out);
    out.precision(17);
    const sccm::Partition& pt = *mf.partition;
    for (int m = 0; m < pt.n_groups(); ++m) out << pt.group_name(m) << ",";
    out << "converged\n";
    for (std::size_t r = 0; r < data.n; ++r) {
      std::span<const std::uint8_t> row(data.values.data() + r * data.p, data.p);
      sccm::EmbedResult res = sccm::embed(row, mf.graph, mf.params);
      for (double x : res.x) out << x << ",";
      out << (res.converged ? 1 : 0) << "\n";
    }
    if (!out) throw sccm::DataError("write failed: " + emb_out);
    return 0;
  }

  if (evl->parsed()) {
    if (evl_compare) {
      if (evl_a.empty() || evl_b.empty())
        throw sccm::UsageError("compare mode needs --a and --b");
      json ja = sccm::load_json(evl_a), jb = sccm::load_json(evl_b);
      if (!ja.is_array() || !jb.is_array() || ja.size() != jb.size() || ja.empty())
        throw sccm::DataError("compare inputs must be equally sized non-empty arrays");
      json out{{"n", ja.size()}};
      for (const char* mn : {"omission", "commission", "slope_rmse"}) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < ja.size(); ++i) {
          if (!ja[i].contains(mn) || !jb[i].contains(mn))
            throw sccm::DataError(std::string("compare: metric \"") + mn +
                                  "\" missing in entry " + std::to_string(i));
          a.push_back(ja[i][mn].get<double>());
          b.push_back(jb[i][mn].get<double>());
        }
        out[mn] = sccm::compare_series(a, b);
      }
      sccm::save_json(evl_out, out);
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (evl_truth.empty() || evl_learned.empty())
      throw sccm::UsageError("eval needs --truth and --learned (or --compare)");
    sccm::ModelFile truth = sccm::load_model(evl_truth);
    sccm::ModelFile learned = sccm::load_model(evl_learned);
    check_partition_match(*truth.partition, *learned.partition);
    const int p = truth.partition->n_vars();
    json m;
    m["schema_version"] = sccm::kMetricsSchemaVersion;
    m["edges_true"] = truth.graph.edge_count();
    m["edges_learned"] = learned.graph.edge_count();
    m["omission"] = sccm::edge_omission(truth.graph.edges(), learned.graph.edges(), p);
    m["commission"] = sccm::edge_commission(truth.graph.edges(), learned.graph.edges(), p);
    m["slope_rmse"] =
        sccm::slope_rmse(truth.params.slopes, learned.params.slopes, *truth.partition);
    sccm::save_json(evl_out, m);
    std::cout << m.dump(2) << '\n';
    return 0;
  }

  if (bch->parsed()) {
    bcfg.k_latent = bch_grids.k_latent;
    bcfg.learn.k_theta = bch_grids.k_theta;
    std::stringstream ss(bch_algos);
    std::string tok;
    bcfg.algorithms.clear();
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) bcfg.algorithms.push_back(tok);
    json summary = sccm::run_benchmark(bcfg);
    std::cout << summary.dump(2) << '\n';
    return 0;
  }

  throw sccm::UsageError("a subcommand is required (see --help)");
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sccm::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const sccm::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const sccm::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
