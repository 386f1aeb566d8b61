#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "oracles.hpp"
#include "sccm/cdn.hpp"
#include "sccm/copula.hpp"
#include "sccm/learner.hpp"
#include "sccm/model.hpp"
#include "sccm/normal.hpp"
#include "sccm/rng.hpp"
#include "sccm/score.hpp"
#include "sccm/synthetic.hpp"

using namespace sccm;
using oracle::cache21;

namespace {

// Small two-group truth used across the slow cases: one cross edge and one
// within edge, comfortable latent correlation.
struct Truth {
  std::shared_ptr<const Partition> part;
  MixedGraph graph;
  ModelParams params;
};

Truth small_truth() {
  std::vector<Partition::Group> gs(2);
  gs[0] = {"A", {"a1", "a2"}};
  gs[1] = {"B", {"b1", "b2"}};
  auto part = std::make_shared<Partition>(std::move(gs));
  MixedGraph g(part);
  g.add_edge(0, 2);
  g.add_edge(2, 3);
  ModelParams prm;
  prm.slopes = {1.0, -0.9, 0.8, 1.1};
  prm.intercepts = {0.3, -0.2, 0.1, -0.4};
  prm.sigma = {1.0, 0.45, 0.45, 1.0};
  prm.thetas[Edge(0, 2)] = 12.0;
  prm.thetas[Edge(2, 3)] = 11.0;
  return {part, std::move(g), std::move(prm)};
}

Dataset draw(const Truth& t, int n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.names = t.part->var_names();
  d.p = d.names.size();
  d.n = n;
  std::vector<double> x(2);
  for (int r = 0; r < n; ++r) {
    x[0] = rng.normal();
    x[1] = 0.45 * x[0] + std::sqrt(1.0 - 0.45 * 0.45) * rng.normal();
    auto row = sample_config(t.graph, t.params, x, rng);
    d.values.insert(d.values.end(), row.begin(), row.end());
  }
  return d;
}

}  // namespace

TEST_SUITE("learner") {
  TEST_CASE("initial parameters match marginals on an empty graph") {
    Truth t = small_truth();
    Dataset d = draw(t, 300, 301);
    SufficientStats st = compute_stats(d, *t.part);
    MixedGraph empty(t.part);
    ModelParams prm = init_parameters(empty, st);
    CHECK(prm.thetas.empty());
    for (int v = 0; v < 4; ++v) {
      CHECK(prm.slopes[v] == doctest::Approx(1.0));
      // intercept solves the clipped empirical marginal at unit slope
      double back = norm_cdf(-prm.intercepts[v] / std::sqrt(2.0));
      CHECK(back == doctest::Approx(st.p0_clipped(v)).epsilon(1e-10));
    }
    CHECK(sigma_on_grid(prm.sig(0, 1, 2)));
    CHECK(std::fabs(prm.sig(0, 1, 2)) <= 0.011);
    CHECK_NOTHROW(prm.validate(empty));
  }

  TEST_CASE("init assigns thetas to existing edges") {
    Truth t = small_truth();
    Dataset d = draw(t, 200, 307);
    SufficientStats st = compute_stats(d, *t.part);
    ModelParams prm = init_parameters(t.graph, st);
    CHECK(prm.thetas.size() == 2);
    CHECK(prm.thetas.count(Edge(0, 2)) == 1);
    CHECK_NOTHROW(prm.validate(t.graph));
  }

  TEST_CASE("optimize improves the objective it targets") {
    Truth t = small_truth();
    Dataset d = draw(t, 400, 311);
    SufficientStats st = compute_stats(d, *t.part);
    const auto& c = cache21();
    LearnConfig cfg;
    ModelParams start = init_parameters(t.graph, st);
    double before = pcl(t.graph, start, st, c, cfg.k_theta);
    ModelParams opt = optimize_params(ObjectiveKind::PclF, t.graph, start, st, c, cfg);
    double after = pcl(t.graph, opt, st, c, cfg.k_theta);
    CHECK(after >= before - 1e-9);
    CHECK(after > before + 0.1);  // real progress on real data
    // slopes respect the box constraint
    for (double s : opt.slopes) CHECK(std::fabs(s) <= cfg.slope_cap + 1e-12);
    // intercepts stay pinned to the empirical marginals
    for (int v = 0; v < 4; ++v) {
      double denom = std::sqrt(1.0 + opt.slopes[v] * opt.slopes[v]);
      CHECK(norm_cdf(-opt.intercepts[v] / denom) ==
            doctest::Approx(st.p0_clipped(v)).epsilon(1e-8));
    }
  }

  TEST_CASE("slope recovery on an identified edge-free model") {
    // two children per group pin each latent's scale; slopes identified up
    // to one sign flip per group
    std::vector<Partition::Group> gs(2);
    gs[0] = {"A", {"a1", "a2"}};
    gs[1] = {"B", {"b1", "b2"}};
    auto part = std::make_shared<Partition>(std::move(gs));
    MixedGraph g(part);
    ModelParams truth;
    truth.slopes = {1.0, -0.9, 0.8, 1.1};
    truth.intercepts = {0.3, -0.2, 0.1, -0.4};
    truth.sigma = {1.0, 0.87, 0.87, 1.0};
    Rng rng(313);
    Dataset d;
    d.names = part->var_names();
    d.p = 4;
    d.n = 10000;
    std::vector<double> x(2);
    for (int r = 0; r < 10000; ++r) {
      x[0] = rng.normal();
      x[1] = 0.87 * x[0] + std::sqrt(1.0 - 0.87 * 0.87) * rng.normal();
      auto row = sample_config(g, truth, x, rng);
      d.values.insert(d.values.end(), row.begin(), row.end());
    }
    SufficientStats st = compute_stats(d, *part);
    const auto& c = cache21();
    LearnConfig cfg;
    ModelParams fit = optimize_params(ObjectiveKind::PclF, g, init_parameters(g, st), st, c, cfg);
    for (int v = 0; v < 4; ++v)
      CHECK(std::fabs(std::fabs(fit.slopes[v]) - std::fabs(truth.slopes[v])) < 0.15);
    // within-group relative signs survive any per-group flip
    CHECK(fit.slopes[0] * fit.slopes[1] < 0.0);
    CHECK(fit.slopes[2] * fit.slopes[3] > 0.0);
    CHECK(std::fabs(std::fabs(fit.sig(0, 1, 2)) - 0.87) < 0.1);
    // flip-invariant cross-group sign pattern
    CHECK(fit.slopes[0] * fit.slopes[2] * fit.sig(0, 1, 2) > 0.0);
  }

  TEST_CASE("greedy step recovers a strong missing edge") {
    Truth t = small_truth();
    Dataset d = draw(t, 1500, 317);
    SufficientStats st = compute_stats(d, *t.part);
    const auto& c = cache21();
    LearnConfig cfg;
    MixedGraph empty(t.part);
    ModelParams prm = optimize_params(ObjectiveKind::PclF, empty,
                                      init_parameters(empty, st), st, c, cfg);
    StructureStep step = greedy_structure_step(empty, prm, st, c, cfg);
    CHECK(step.changed);
    CHECK(step.graph.edge_count() == 1);
    bool got_true_edge = step.graph.has_edge(0, 2) || step.graph.has_edge(2, 3);
    CHECK(got_true_edge);
    CHECK(step.change[0] == '+');
    // the move is scored as an improvement
    CHECK(pcl(step.graph, step.params, st, c, cfg.k_theta) >
          pcl(empty, prm, st, c, cfg.k_theta));
  }

  TEST_CASE("greedy step stands pat at a clear optimum") {
    Truth t = small_truth();
    Dataset d = draw(t, 1500, 331);
    SufficientStats st = compute_stats(d, *t.part);
    const auto& c = cache21();
    LearnConfig cfg;
    FittedModel fit = learn_lsc1(t.part, d, c, cfg);
    StructureStep step = greedy_structure_step(fit.graph, fit.params, st, c, cfg);
    CHECK_FALSE(step.changed);
    CHECK(step.change == "none");
  }

  TEST_CASE("estimated thetas cover the edges and respect the range") {
    Truth t = small_truth();
    Dataset d = draw(t, 800, 337);
    SufficientStats st = compute_stats(d, *t.part);
    const auto& c = cache21();
    auto th = estimate_thetas(t.graph, init_parameters(t.graph, st), st, c, 15);
    REQUIRE(th.size() == 2);
    for (const auto& [e, v] : th) {
      CHECK(t.graph.has_edge(e.a, e.b));
      CHECK(std::fabs(v) < kThetaMax);
    }
    // strong positive dependence in truth shows up in the point estimates
    CHECK(th.at(Edge(0, 2)) > 0.0);
  }

  TEST_CASE("lsc1 learns the small model and keeps a monotone trace") {
    Truth t = small_truth();
    Dataset d = draw(t, 1500, 347);
    const auto& c = cache21();
    FittedModel fit = learn_lsc1(t.part, d, c);
    CHECK(fit.converged);
    CHECK(fit.pcl_regressions == 0);
    // the cross-group edge is strongly identified; the within-group one can
    // be absorbed by the shared latent, so only bound the total
    CHECK(fit.graph.has_edge(0, 2));
    CHECK(fit.graph.edge_count() >= 1);
    CHECK(fit.graph.edge_count() <= 3);
    REQUIRE(!fit.trace.empty());
    for (const TraceEntry& e : fit.trace)
      CHECK(e.pcl_after_structure >= e.pcl_after_params - 1e-9);
    for (std::size_t k = 1; k < fit.trace.size(); ++k)
      CHECK(fit.trace[k].pcl_after_params >=
            fit.trace[k - 1].pcl_after_structure - 1e-9);
    CHECK(fit.final_pcl ==
          doctest::Approx(pcl(fit.graph, fit.params,
                              compute_stats(align_dataset(d, *t.part), *t.part), c, 15))
              .epsilon(1e-9));
  }

  TEST_CASE("lsc0 tests pairs independently") {
    Truth t = small_truth();
    Dataset d = draw(t, 1500, 349);
    const auto& c = cache21();
    FittedModel fit = learn_lsc0(t.part, d, c);
    CHECK(fit.converged);
    // the strong cross edge survives marginal testing
    CHECK(fit.graph.has_edge(0, 2));
    CHECK_NOTHROW(fit.params.validate(fit.graph));
  }

  TEST_CASE("lsc2 runs the surrogate loop on two groups") {
    Truth t = small_truth();
    Dataset d = draw(t, 1000, 353);
    const auto& c = cache21();
    FittedModel fit = learn_lsc2(t.part, d, c);
    CHECK(fit.outer_iters >= 1);
    CHECK(fit.graph.has_edge(0, 2));
    CHECK_NOTHROW(fit.params.validate(fit.graph));
  }

  TEST_CASE("lsc2 falls back to lsc1 on a single group") {
    std::vector<Partition::Group> gs(1);
    gs[0] = {"A", {"a1", "a2", "a3"}};
    auto part = std::make_shared<Partition>(std::move(gs));
    MixedGraph g(part);
    g.add_edge(0, 1);
    ModelParams prm;
    prm.slopes = {1.0, 1.0, 1.0};
    prm.intercepts = {0.0, 0.2, -0.2};
    prm.sigma = {1.0};
    prm.thetas[Edge(0, 1)] = 10.0;
    Rng rng(359);
    Dataset d;
    d.names = {"a1", "a2", "a3"};
    d.p = 3;
    d.n = 800;
    std::vector<double> x(1);
    for (int r = 0; r < 800; ++r) {
      x[0] = rng.normal();
      auto row = sample_config(g, prm, x, rng);
      d.values.insert(d.values.end(), row.begin(), row.end());
    }
    const auto& c = cache21();
    FittedModel a = learn_lsc2(part, d, c);
    FittedModel b = learn_lsc1(part, d, c);
    CHECK(a.graph.edges() == b.graph.edges());
    CHECK(a.final_pcl == doctest::Approx(b.final_pcl).epsilon(1e-12));
  }

  TEST_CASE("embedding pulls toward the latent that explains the row") {
    Truth t = small_truth();
    // all-ones row vs all-zeros row should embed on opposite sides
    std::vector<std::uint8_t> ones = {1, 1, 1, 1}, zeros = {0, 0, 0, 0};
    EmbedResult e1 = embed(ones, t.graph, t.params);
    EmbedResult e0 = embed(zeros, t.graph, t.params);
    CHECK(e1.converged);
    CHECK(e0.converged);
    REQUIRE(e1.x.size() == 2);
    // positive slopes on a1, b1, b2: ones push x up, zeros push it down
    CHECK(e1.x[1] > e0.x[1]);
    CHECK(std::isfinite(e1.objective));
    CHECK(std::isfinite(e0.objective));
  }

  TEST_CASE("embedding of the zero row stays near the prior mode") {
    // with slope 0 the data say nothing; the embedding should sit at 0
    std::vector<Partition::Group> gs(2);
    gs[0] = {"A", {"a"}};
    gs[1] = {"B", {"b"}};
    auto part = std::make_shared<Partition>(std::move(gs));
    MixedGraph g(part);
    ModelParams prm;
    prm.slopes = {0.0, 0.0};
    prm.intercepts = {0.3, -0.3};
    prm.sigma = {1.0, 0.45, 0.45, 1.0};
    std::vector<std::uint8_t> row = {1, 0};
    EmbedResult e = embed(row, g, prm);
    CHECK(e.converged);
    CHECK(std::fabs(e.x[0]) < 1e-6);
    CHECK(std::fabs(e.x[1]) < 1e-6);
  }
}
