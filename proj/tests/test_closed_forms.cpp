#include "herding/closed_forms.hpp"

#include <cmath>

#include "doctest.h"
#include "herding/errors.hpp"
#include "herding/stationary.hpp"

using namespace herding;
using namespace herding::closed_forms;

namespace {

const ProbSeq kUnit = ProbSeq::point_mass(1);

// Plain-summation zeta oracle with an integral tail enclosure.
double oracle_zeta(double s) {
  double sum = 0.0;
  const int terms = 2'000'000;
  for (int n = 1; n <= terms; ++n) sum += std::pow(n, -s);
  // Midpoint of the integral enclosure over the remainder.
  const double lo = std::pow(terms + 1.0, 1.0 - s) / (s - 1.0);
  const double hi = std::pow(static_cast<double>(terms), 1.0 - s) / (s - 1.0);
  return sum + 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("uniform policy generating function") {
  const ModelParams p{1.0, 1.0, 1.0};

  // lambda=mu=alpha=1, theta=phi=z: r(z) = 2z/(2-z).
  CHECK(uniform_policy_gf(p, kUnit, kUnit, 0.5) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(uniform_policy_gf(p, kUnit, kUnit, 0.0) == 0.0);

  // z -> 1 limit approaches r(1) = 2.
  CHECK(uniform_policy_gf(p, kUnit, kUnit, 1.0 - 1e-9) ==
        doctest::Approx(2.0).epsilon(1e-6));
  CHECK_THROWS_AS(uniform_policy_gf(p, kUnit, kUnit, 1.0), RegimeError);

  // Power-series evaluation of the solved stationary profile matches the
  // closed form across parameter sets.
  const struct {
    ModelParams p;
    ProbSeq theta;
    ProbSeq phi;
  } cases[] = {
      {{1.0, 1.0, 1.0}, kUnit, kUnit},
      {{2.0, 0.7, 1.3}, ProbSeq::from_map({{1, 0.5}, {2, 0.5}}),
       ProbSeq::from_map({{3, 1.0}})},
      {{3.0, 1.0, 3.0}, ProbSeq::from_map({{5, 0.6}, {15, 0.4}}),
       ProbSeq::point_mass(50)},
  };
  for (const auto& c : cases) {
    const auto sol =
        stationary::solve(c.p, PolicySpec::uniform(), c.theta, c.phi);
    for (double z : {0.2, 0.5, 0.8, 0.95}) {
      double series = 0.0;
      for (Eigen::Index n = sol.scores.size() - 1; n >= 0; --n)
        series = series * z + sol.scores[n];
      series *= z;
      CHECK(series ==
            doctest::Approx(uniform_policy_gf(c.p, c.theta, c.phi, z))
                .epsilon(1e-10));
    }
    // The geometric profile is exact in the first case.
    if (&c == cases) {
      for (Eigen::Index n = 0; n < 30; ++n)
        CHECK(sol.scores[n] ==
              doctest::Approx(std::pow(2.0, -static_cast<double>(n)))
                  .epsilon(1e-10));
    }
  }
}

TEST_CASE("visit-free lower bound") {
  const ModelParams p{3.0, 0.0, 3.0};
  const ProbSeq phi50 = ProbSeq::point_mass(50);
  const AlphaZeroSolution sol = alpha_zero_solution(p, phi50, 80);
  for (Eigen::Index n = 0; n < 80; ++n)
    CHECK(sol.scores[n] == doctest::Approx(n < 50 ? 1.0 : 0.0));
  CHECK(sol.r_total == doctest::Approx(50.0));
  CHECK(sol.score_mass == doctest::Approx(1275.0));
  CHECK(sol.score_mass / sol.r_total == doctest::Approx(25.5));

  const AlphaZeroSolution tiny =
      alpha_zero_solution(ModelParams{2.0, 0.0, 4.0}, kUnit, 10);
  CHECK(tiny.scores[0] == doctest::Approx(0.5));
  CHECK(tiny.scores[1] == 0.0);

  // Visits only add score: any alpha > 0 dominates the alpha = 0 mean.
  const auto visited = stationary::solve(ModelParams{3.0, 1.0, 3.0},
                                         PolicySpec::uniform(), kUnit, phi50);
  CHECK(visited.score_mass >= 1275.0);
}

TEST_CASE("lerch transcendent") {
  CHECK(lerch(0.0, 3.0, 1.0) == 1.0);
  CHECK(lerch(1.0, 2.0, 1.0) ==
        doctest::Approx(1.6449340668482264).epsilon(1e-10));

  // Identity with the consistency series for ratio-power weights.
  const PolicySpec pol = PolicySpec::ratio_power(1.7);
  for (double x : {0.3, 0.7})
    CHECK(lerch(x, 1.7, 1.0) - 1.0 ==
          doctest::Approx(stationary::consistency_series(x, pol, kUnit, 1e-12))
              .epsilon(1e-10));

  CHECK_THROWS_AS(lerch(1.0, 0.9, 1.0), RegimeError);
  CHECK_THROWS_AS(lerch(1.2, 2.0, 1.0), RegimeError);
  CHECK_THROWS_AS(lerch(0.5, -1.0, 1.0), ConfigError);
}

TEST_CASE("figure sweep endpoints and shape") {
  const std::vector<double> grid = default_figure_grid();
  const std::vector<FigureRow> rows = figure_sweep({0.8, 1.5, 2.5}, 3.0, 3.0, grid);
  // Bounded-mean curves carry one extra row: the exact endpoint.
  REQUIRE(rows.size() == 3 * grid.size() + 1);

  // Strictly increasing in both coordinates along each curve.
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].gamma != rows[i - 1].gamma) continue;
    CHECK(rows[i].alpha > rows[i - 1].alpha);
    CHECK(rows[i].r_prime_1 > rows[i - 1].r_prime_1);
  }

  // gamma = 2.5 endpoint limits against the zeta oracle.
  const double alpha_max = 3.0 * (oracle_zeta(2.5) - 1.0);
  const double mean_max = oracle_zeta(1.5) - oracle_zeta(2.5);
  double last_alpha = 0.0, last_mean = 0.0;
  for (const FigureRow& row : rows)
    if (row.gamma == 2.5) {
      last_alpha = row.alpha;
      last_mean = row.r_prime_1;
    }
  CHECK(last_alpha == doctest::Approx(alpha_max).epsilon(1e-4));
  CHECK(last_mean == doctest::Approx(mean_max).epsilon(1e-4));

  // gamma = 1.5: the expected score blows up along the refinement.
  double peak = 0.0;
  for (const FigureRow& row : rows)
    if (row.gamma == 1.5) peak = std::max(peak, row.r_prime_1);
  CHECK(peak > 1e3);

  // gamma = 0.8: no threshold, alpha keeps growing through the grid end.
  double alpha_end = 0.0;
  for (const FigureRow& row : rows)
    if (row.gamma == 0.8) alpha_end = std::max(alpha_end, row.alpha);
  CHECK(alpha_end > 3.0 * ratio_power_series(0.99, 0.8) - 1e-9);

  // Regime tags follow the exponent trichotomy.
  CHECK(rows.front().regime == "always_ergodic");
  CHECK(rows.back().regime == "threshold_bounded_mean");
}

TEST_CASE("series derivative endpoint") {
  // x = 1 value for gamma > 2 equals zeta(gamma-1) - zeta(gamma).
  CHECK(ratio_power_series_derivative(1.0, 2.5) ==
        doctest::Approx(oracle_zeta(1.5) - oracle_zeta(2.5)).epsilon(1e-8));
  CHECK_THROWS_AS(ratio_power_series_derivative(1.0, 1.5), RegimeError);

  // Interior point against a plain partial sum.
  double plain = 0.0;
  for (int k = 1; k <= 4000; ++k)
    plain += k * std::pow(k + 1.0, -2.0) * std::pow(0.9, k - 1.0);
  CHECK(ratio_power_series_derivative(0.9, 2.0) ==
        doctest::Approx(plain).epsilon(1e-8));
}
