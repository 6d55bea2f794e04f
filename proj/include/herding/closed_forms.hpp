#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "herding/distributions.hpp"
#include "herding/params.hpp"

namespace herding::closed_forms {

// Stationary generating function r(z) under the uniform policy:
// r(z) = lambda r(1) (phi(z)-1) / (alpha (1-theta(z)) + mu r(1) (1-1/z)),
// with r(1) = (alpha theta'(1) + lambda phi'(1))/mu. Defined for z in
// [0, 1); use the r(1) formula at z = 1.
double uniform_policy_gf(const ModelParams& params, const ProbSeq& theta,
                         const ProbSeq& phi, double z);

// Visit-free stationary solution (alpha = 0): r_i = (lambda/mu)
// sum_{k>=i} phi_k, a lower bound for every policy.
struct AlphaZeroSolution {
  Eigen::VectorXd scores;
  double r_total = 0.0;     // lambda phi'(1) / mu
  double score_mass = 0.0;  // lambda (phi''(1) + 2 phi'(1)) / (2 mu)
};
AlphaZeroSolution alpha_zero_solution(const ModelParams& params,
                                      const ProbSeq& phi, Eigen::Index len);

// Lerch transcendent sum_{k>=0} x^k / (k+v)^gamma, within tol. Requires
// x < 1, or x = 1 with gamma > 1.
double lerch(double x, double gamma, double v, double tol = 1e-12);

// One point of the ratio-power family sweep: alpha = lambda F(x) and the
// expected-score curve value (lambda/mu) x F'(x), where F(x) =
// sum_k x^k/(k+1)^gamma.
struct FigureRow {
  double gamma = 0.0;
  double x = 0.0;
  double alpha = 0.0;
  double r_prime_1 = 0.0;
  std::string regime;
};

// F and F' for the ratio-power weight family with unit initial score,
// evaluated by certified direct summation (tolerance mixes an absolute
// floor with a 1e-9 relative term).
double ratio_power_series(double x, double gamma, double tol = 1e-8);
double ratio_power_series_derivative(double x, double gamma,
                                     double tol = 1e-8);

// Parametric sweep of the expected score per POI against the visit rate,
// one row per (gamma, x) pair, rows ordered by alpha within each gamma.
std::vector<FigureRow> figure_sweep(const std::vector<double>& gammas,
                                    double lambda, double mu,
                                    const std::vector<double>& x_grid);

// x in {0.01, ..., 0.99} plus a geometric refinement approaching 1, used
// to expose the divergence of the expected score at the threshold.
std::vector<double> default_figure_grid();

}  // namespace herding::closed_forms
