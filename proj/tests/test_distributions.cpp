#include "herding/distributions.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "herding/errors.hpp"

using herding::ConfigError;
using herding::ProbSeq;

namespace {

// Independent random finite-support distribution for property checks.
ProbSeq random_dist(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> support(1, 6);
  std::uniform_int_distribution<int> score(1, 40);
  std::uniform_real_distribution<double> mass(0.1, 1.0);
  std::map<int, double> m;
  const int n = support(rng);
  for (int i = 0; i < n; ++i) m[score(rng)] += mass(rng);
  double sum = 0.0;
  for (auto& [k, v] : m) sum += v;
  for (auto& [k, v] : m) v /= sum;
  return ProbSeq::from_map(m);
}

}  // namespace

TEST_CASE("construction and validation") {
  const ProbSeq unit = ProbSeq::from_map({{1, 1.0}});
  CHECK(unit.max_score() == 1);
  CHECK(unit.mass(1) == 1.0);

  const ProbSeq jumps = ProbSeq::from_map({{5, 0.6}, {15, 0.4}});
  CHECK(jumps.mass(5) == 0.6);
  CHECK(jumps.mass(15) == 0.4);
  CHECK(jumps.mass(7) == 0.0);

  CHECK_THROWS_AS(ProbSeq::from_map({{1, 0.5}, {2, 0.6}}), ConfigError);
  CHECK_THROWS_AS(ProbSeq::from_map({{0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(ProbSeq::from_map({{3, -0.2}, {4, 1.2}}), ConfigError);
  CHECK_THROWS_AS(ProbSeq::from_map({}), ConfigError);

  // Explicit renormalization is allowed, silent renormalization is not.
  const ProbSeq scaled = ProbSeq::from_map({{1, 2.0}, {2, 2.0}}, true);
  CHECK(scaled.mass(1) == doctest::Approx(0.5));
}

TEST_CASE("generating function values") {
  const ProbSeq unit = ProbSeq::point_mass(1);
  CHECK(unit.gf(0.5) == doctest::Approx(0.5).epsilon(1e-14));

  const ProbSeq jumps = ProbSeq::from_map({{5, 0.6}, {15, 0.4}});
  CHECK(jumps.gf(1.0) == doctest::Approx(1.0).epsilon(1e-14));

  const ProbSeq initial = ProbSeq::point_mass(50);
  CHECK(initial.gf(0.9) == doctest::Approx(std::pow(0.9, 50)).epsilon(1e-12));

  CHECK_THROWS(unit.gf(1.5));
  CHECK_THROWS(unit.gf(-0.1));
}

TEST_CASE("tail sums") {
  const ProbSeq unit = ProbSeq::point_mass(1);
  CHECK(unit.tail(0) == 1.0);
  CHECK(unit.tail(1) == 0.0);

  const ProbSeq jumps = ProbSeq::from_map({{5, 0.6}, {15, 0.4}});
  CHECK(jumps.tail(4) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(jumps.tail(5) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(jumps.tail(15) == 0.0);

  const ProbSeq initial = ProbSeq::point_mass(50);
  CHECK(initial.tail(49) == 1.0);
  CHECK(initial.tail(50) == 0.0);
}

TEST_CASE("moments") {
  const ProbSeq jumps = ProbSeq::from_map({{5, 0.6}, {15, 0.4}});
  CHECK(jumps.moment1() == doctest::Approx(9.0).epsilon(1e-14));

  const ProbSeq initial = ProbSeq::point_mass(50);
  CHECK(initial.moment1() == 50.0);
  CHECK(initial.moment2_factorial() == 2450.0);

  CHECK(ProbSeq::point_mass(1).moment1() == 1.0);
}

TEST_CASE("tail identities on random distributions") {
  std::mt19937_64 rng(20240811);
  for (int trial = 0; trial < 50; ++trial) {
    const ProbSeq d = random_dist(rng);

    // sum_n tail(n) equals the first moment exactly.
    double tail_sum = 0.0;
    for (Eigen::Index n = 0; n < d.max_score(); ++n) tail_sum += d.tail(n);
    CHECK(std::abs(tail_sum - d.moment1()) <= 1e-12 * d.moment1());

    // Tails are non-increasing from 1.
    double prev = 1.0;
    CHECK(d.tail(0) == 1.0);
    for (Eigen::Index n = 1; n <= d.max_score(); ++n) {
      CHECK(d.tail(n) <= prev + 1e-15);
      prev = d.tail(n);
    }

    // (1 - gf(z))/(1 - z) matches the tail polynomial on [0, 1).
    std::uniform_real_distribution<double> zdist(0.0, 0.999);
    for (int j = 0; j < 4; ++j) {
      const double z = zdist(rng);
      double poly = 0.0;
      for (Eigen::Index n = d.max_score() - 1; n >= 0; --n)
        poly = poly * z + d.tail(n);
      const double direct = (1.0 - d.gf(z)) / (1.0 - z);
      CHECK(std::abs(poly - direct) <= 1e-12 * std::max(1.0, direct));
    }

    // gf is non-decreasing on [0, 1].
    double last = d.gf(0.0);
    for (double z = 0.1; z <= 1.0; z += 0.1) {
      const double value = d.gf(std::min(z, 1.0));
      CHECK(value >= last - 1e-15);
      last = value;
    }
  }
}
