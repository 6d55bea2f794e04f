#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "herding/distributions.hpp"
#include "herding/params.hpp"
#include "herding/policies.hpp"

namespace herding::stationary {

enum class Regime {
  Ergodic,                    // finite K, no mass escape, pi_bar = 1
  Condensed,                  // defective selection, positive escaped density
  NonErgodicUnboundedWeights, // weights grow without bound; K = inf
  DegenerateEmpty,            // lambda = 0, empty stationary state
};

const char* regime_name(Regime regime);

struct StationarySolution {
  Eigen::VectorXd scores;  // stationary r_1..r_L (finite part)
  double K = 0.0;          // weighted mass sum a_i r_i; +inf sentinel allowed
  double x = 0.0;          // alpha / (mu K)
  double delta = 0.0;      // escaped POI density
  double pi_bar = 1.0;     // total selection mass; < 1 when defective
  double r_total = 0.0;    // r(1), the finite-part POI density
  double score_mass = 0.0; // r'(1) = sum k r_k; +inf sentinel allowed
  Regime regime = Regime::Ergodic;
  std::map<std::string, double> residuals;
  std::vector<std::string> notes;  // heuristic labels carried into output
};

// Outcome of the ergodicity classification.
struct PhaseDiagnosis {
  // M = lim_{x->1-} F(x); +inf when the series diverges. NaN with
  // bound_known = false when only the existence of a finite bound is
  // established (AsymptoticClass).
  double bound = 0.0;
  bool bound_known = true;
  bool always_ergodic = false;  // equivalent to bound == +inf among
                                // bounded-weight policies
  double threshold_ratio = 0.0; // largest ergodic alpha/lambda (== bound);
                                // 0 for unbounded weights
  enum class Source {
    UnboundedWeights,  // divergent weights force non-ergodicity
    SeriesLimit,       // F(1) evaluated (or certified divergent)
    TailExponents,     // classified from the (gamma, nu) exponents alone
  } source = Source::SeriesLimit;
};

struct Options {
  Eigen::Index truncation = 2000;  // length of reported score vectors
  double tol = 1e-10;
  Eigen::Index series_cap = 100'000'000;  // hard cap on series horizons
  Eigen::Index general_horizon = 1'000'000;  // cap for the general-theta route
};

// Score recursion at fixed K: r_{n+1} = (alpha/(mu K)) sum_{i<n}
// a_{n-i} r_{n-i} Theta_i + (lambda/mu) Phi_n. Requires a pointwise-weight
// policy and K > 0.
Eigen::VectorXd recursion_given_k(double K, const ModelParams& params,
                                  const PolicySpec& policy,
                                  const ProbSeq& theta, const ProbSeq& phi,
                                  Eigen::Index len);

// Closed form of the same recursion for the unit score increment
// (theta(z) = z): r_{n+1} = (lambda/mu) A_n sum_j (Phi_j/A_j) x^{n-j}.
Eigen::VectorXd closed_form_unit_jump(double K, const ModelParams& params,
                                      const PolicySpec& policy,
                                      const ProbSeq& phi, Eigen::Index len);

// The consistency series F(x) = sum_k u_k x^k, u_k = sum_j A_{j+k} Phi_j /
// A_j, evaluated with a certified truncation error <= tol for x < 1 and by
// the weight-product tail asymptotics at x = 1 (may return +inf). The
// radius of convergence is exactly 1; x > 1 is rejected.
double consistency_series(double x, const PolicySpec& policy,
                          const ProbSeq& phi, double tol,
                          Eigen::Index series_cap = 100'000'000);

// Classifies ergodicity of a weight policy: the bound M, whether the
// system is ergodic for every alpha/lambda, and which criterion decided.
PhaseDiagnosis ergodicity_bound(const PolicySpec& policy, const ProbSeq& phi);

struct ConsistencyRoot {
  bool found = false;
  double x = 0.0;
  double K = 0.0;
  // Largest certified series value reached; equals the ergodicity bound
  // estimate when no root exists.
  double bound = 0.0;
};

// Solves alpha/lambda = F(alpha/(mu K)) for the unit-jump case by
// monotone bisection. Requires lambda > 0 and alpha > 0. Returns
// found = false when alpha/lambda exceeds the ergodicity bound.
ConsistencyRoot solve_consistency(const ModelParams& params,
                                  const PolicySpec& policy,
                                  const ProbSeq& phi, double tol);

// Condensed-phase solution for the unit-jump case when alpha/lambda >
// F(1): K = alpha/mu (x = 1), delta = (alpha - lambda F(1))/mu, pi_bar =
// lambda F(1)/alpha, r(1) = (lambda/mu)(F(1) + phi'(1)). Throws
// RegimeError in the ergodic region.
StationarySolution condensed_solution(const ModelParams& params,
                                      const PolicySpec& policy,
                                      const ProbSeq& phi,
                                      const Options& opt = {});

struct CumulativeFixedPoint {
  double limit = 1.0;        // P_infinity
  bool ergodic = false;      // closed-form threshold verdict
  double iterate = 1.0;      // last iterate of the cumulative recursion
  Eigen::VectorXd scores;    // r_i = r(1) (P_i - P_{i-1})
  double r_total = 0.0;      // the pi_bar = 1 ansatz total (alpha theta'(1)
                             // + lambda phi'(1)) / mu
};

// Iterates P_{n+1} = (alpha/(mu r(1))) sum_i f(P_{n-i}) Theta_i +
// (lambda/(mu r(1))) sum_{i<=n} Phi_i, checks the iterate against the
// closed-form threshold alpha theta'(1)/(lambda phi'(1)) <= 1/(f'(1)-1),
// and resolves P_infinity from the Toeplitz limit equation.
CumulativeFixedPoint cumulative_fixed_point(const ModelParams& params,
                                            const PolicySpec& policy,
                                            const ProbSeq& theta,
                                            const ProbSeq& phi, double tol,
                                            const Options& opt = {});

// Consistency solver for a general finite-support theta. Evaluates the
// scalar series G(x) = x sum_i a_i rho_i(x) (the lambda-normalized weighted
// mass of the recursion) with a certified window tail bound and bisects
// G(x) = alpha/lambda. found = false when no certifiable root exists.
ConsistencyRoot consistency_general(const ModelParams& params,
                                    const PolicySpec& policy,
                                    const ProbSeq& theta, const ProbSeq& phi,
                                    Eigen::Index horizon, double tol);

// Dispatcher: routes to the applicable solver, fills the regime and the
// residual block, and verifies the r_1 = lambda/mu and r(1) identities.
StationarySolution solve(const ModelParams& params, const PolicySpec& policy,
                         const ProbSeq& theta, const ProbSeq& phi,
                         const Options& opt = {});

}  // namespace herding::stationary
