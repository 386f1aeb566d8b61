#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sccm/copula.hpp"
#include "sccm/errors.hpp"
#include "sccm/model.hpp"
#include "sccm/normal.hpp"
#include "sccm/quadrature.hpp"

using namespace sccm;
using oracle::cache21;

TEST_SUITE("quadrature") {
  TEST_CASE("points are symmetric with tail-mean endpoints") {
    const auto& c = cache21();
    REQUIRE(c.K == 21);
    REQUIRE(c.points.size() == 21);
    // E[X | X > q(0.99)] for the standard normal, to 30 digits
    CHECK(c.points.back() == doctest::Approx(2.5604945115016332).epsilon(1e-14));
    CHECK(c.points[10] == doctest::Approx(0.0).epsilon(1e-14));
    for (int k = 0; k < c.K; ++k)
      CHECK(c.points[k] == doctest::Approx(-c.points[c.K - 1 - k]).epsilon(1e-13));
    for (int k = 1; k < c.K; ++k) CHECK(c.points[k] > c.points[k - 1]);
    // interior points stay inside the 99% quantile
    CHECK(c.points[1] > -2.3263478740408411 - 1e-12);
    CHECK(c.points[c.K - 2] < 2.3263478740408411 + 1e-12);
  }

  TEST_CASE("boundaries bracket the points") {
    const auto& c = cache21();
    REQUIRE(c.boundaries.size() == 22);
    CHECK(std::isinf(c.boundaries.front()));
    CHECK(std::isinf(c.boundaries.back()));
    for (int k = 0; k < c.K; ++k) {
      CHECK(c.points[k] >= c.boundaries[k]);
      CHECK(c.points[k] <= c.boundaries[k + 1]);
    }
  }

  TEST_CASE("constant integrands come out exactly one") {
    const auto& c = cache21();
    CHECK(integrate_latent_1d([](double) { return 1.0; }, c) == 1.0);
    for (double s : sigma_grid())
      CHECK(integrate_pair_latent([](double, double) { return 1.0; }, s, c) == 1.0);
  }

  TEST_CASE("one-dimensional moments") {
    const auto& c = cache21();
    double m1 = integrate_latent_1d([](double x) { return x; }, c);
    double m2 = integrate_latent_1d([](double x) { return x * x; }, c);
    CHECK(std::fabs(m1) < 1e-10);
    CHECK(m2 == doctest::Approx(1.0).epsilon(0.05));
    // cell masses against exact normal probabilities
    for (int k = 0; k < c.K; ++k) {
      double lo = c.boundaries[k], hi = c.boundaries[k + 1];
      double exact = (std::isinf(hi) ? 1.0 : norm_cdf(hi)) -
                     (std::isinf(lo) ? 0.0 : norm_cdf(lo));
      CHECK(c.w1[k] == doctest::Approx(exact).epsilon(1e-7));
    }
  }

  TEST_CASE("pair tables recover the correlation") {
    const auto& c = cache21();
    for (double s : {-0.99, -0.45, -0.01, 0.01, 0.33, 0.97}) {
      double exy = integrate_pair_latent([](double x, double y) { return x * y; }, s, c);
      CHECK(std::fabs(exy - s) < 0.02);
    }
  }

  TEST_CASE("near-independence table factorizes") {
    const auto& c = cache21();
    const auto& w = c.weights2(0.01);
    for (int k = 0; k < c.K; ++k)
      for (int l = 0; l < c.K; ++l)
        CHECK(std::fabs(w[k * c.K + l] - c.w1[k] * c.w1[l]) < 1e-3);
  }

  TEST_CASE("negative sigma mirrors the positive table") {
    const auto& c = cache21();
    for (double s : {0.45, 0.99, 0.03}) {
      const auto& pos = c.weights2(s);
      const auto& neg = c.weights2(-s);
      for (int k = 0; k < c.K; ++k)
        for (int l = 0; l < c.K; ++l)
          CHECK(std::fabs(neg[k * c.K + l] - pos[k * c.K + (c.K - 1 - l)]) < 1e-14);
    }
  }

  TEST_CASE("row and column sums match the marginals") {
    const auto& c = cache21();
    for (double s : {-0.71, 0.13, 0.99}) {
      const auto& rows = c.row_sums(s);
      const auto& cols = c.col_sums(s);
      const auto& w = c.weights2(s);
      for (int k = 0; k < c.K; ++k) {
        double r = 0.0, cl = 0.0;
        for (int l = 0; l < c.K; ++l) {
          r += w[k * c.K + l];
          cl += w[l * c.K + k];
        }
        CHECK(rows[k] == doctest::Approx(r).epsilon(1e-12));
        CHECK(cols[k] == doctest::Approx(cl).epsilon(1e-12));
        // 2-D marginals agree with the 1-D masses
        CHECK(rows[k] == doctest::Approx(c.w1[k]).epsilon(2e-4));
      }
    }
  }

  TEST_CASE("dependence grows with sigma") {
    const auto& c = cache21();
    auto f = [](double x, double y) { return x * y; };
    double prev = integrate_pair_latent(f, 0.01, c);
    for (double s : {0.25, 0.51, 0.75, 0.99}) {
      double cur = integrate_pair_latent(f, s, c);
      CHECK(cur > prev);
      prev = cur;
    }
  }

  TEST_CASE("sigma index round trip and rejection") {
    auto grid = sigma_grid();
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(sigma_index(grid[i]) == static_cast<int>(i));
    CHECK_THROWS_AS((void)sigma_index(0.46), NumericError);
  }

  TEST_CASE("prior theta grid hits frozen quantiles") {
    auto grid = theta_grid_prior(15);
    REQUIRE(grid.size() == 15);
    // squash(Phi^-1((t - 0.5) / 15)) for t = 15, 14, ..., 8
    const double expect_hi[] = {18.111370562772584, 14.135688572967772,
                                11.230263150762924, 8.7173595851434165,
                                6.4088088145521725, 4.2179647431346951,
                                2.0937590596833664, 0.0};
    for (int i = 0; i < 8; ++i)
      CHECK(grid[14 - i] == doctest::Approx(expect_hi[i]).epsilon(1e-12));
    for (int t = 0; t < 15; ++t)
      CHECK(grid[t] == doctest::Approx(-grid[14 - t]).epsilon(1e-12));
  }

  TEST_CASE("gaussian theta grid tracks mean and degenerates cleanly") {
    auto wide = theta_grid_gaussian(1.0, 4.0, 9);
    REQUIRE(wide.size() == 9);
    CHECK(wide[4] == doctest::Approx(squash_theta(1.0)).epsilon(1e-12));
    for (int t = 1; t < 9; ++t) CHECK(wide[t] >= wide[t - 1]);

    auto point = theta_grid_gaussian(-2.0, 0.0, 7);
    for (double v : point) CHECK(v == doctest::Approx(squash_theta(-2.0)).epsilon(1e-12));
  }

  TEST_CASE("adaptive simpson nails smooth integrals") {
    double cubic = adaptive_simpson([](double x) { return x * x * x + 2.0 * x; },
                                    -1.0, 2.0, 1e-10);
    CHECK(cubic == doctest::Approx(15.0 / 4.0 + 3.0).epsilon(1e-9));
    double gauss = adaptive_simpson([](double x) { return norm_pdf(x); },
                                    -8.0, 8.0, 1e-10);
    CHECK(gauss == doctest::Approx(1.0).epsilon(1e-8));
  }
}
