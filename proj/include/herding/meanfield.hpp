#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "herding/distributions.hpp"
#include "herding/params.hpp"
#include "herding/policies.hpp"

namespace herding::meanfield {

// Deterministic limit state: score densities r_1..r_L per player plus the
// mass pushed past the truncation (tracked as an absorbing boundary; it
// keeps competing for visits with the asymptotic weight 1 under weight
// policies).
struct State {
  Eigen::VectorXd scores;
  double t = 0.0;
  double escaped = 0.0;
};

struct Derivative {
  Eigen::VectorXd scores;
  double escape_rate = 0.0;
};

// Right-hand side of the score dynamics:
// dr_i/dt = lambda phi_i + mu (r_{i+1} - r_i)
//           + alpha (sum_{j<i} theta_j pi_{i-j}(r) - pi_i(r)),
// with the beyond-truncation visit flux reported as the escape rate.
// The truncation must cover the support of phi.
Derivative rhs(const State& state, const ModelParams& params,
               const PolicySpec& policy, const ProbSeq& theta,
               const ProbSeq& phi);

struct Controls {
  double abs_tol = 1e-9;
  double rel_tol = 1e-7;
  double h_init = 1e-3;
  double h_min = 1e-12;
};

struct Trajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd scores;  // one sampled state per row
  Eigen::VectorXd escaped;
  std::int64_t clip_events = 0;  // negative entries clipped to zero
  std::int64_t steps = 0;
  // Largest value the top truncation bin reached; values above ~1e-10 in a
  // run expected to be ergodic mean the truncation is too short.
  double top_bin_peak = 0.0;

  Eigen::Index samples() const { return times.size(); }
  State state_at(Eigen::Index row) const {
    return {scores.row(row).transpose(), times[row], escaped[row]};
  }
};

// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) integration from
// state to t_end, sampled on a uniform grid of `samples` points (the
// initial state included). Deterministic: identical inputs give a
// bit-identical trajectory.
Trajectory integrate(const State& start, const ModelParams& params,
                     const PolicySpec& policy, const ProbSeq& theta,
                     const ProbSeq& phi, double t_end,
                     const Controls& controls = {}, Eigen::Index samples = 101);

// Total tracked density sum r_i (escaped mass reported separately).
double mass(const State& state);

// Mean score sum i r_i / sum r_i of the tracked part; undefined on an
// empty state.
double mean_score(const State& state);

// Time average (1/T) integral of a sampled observable by the trapezoid
// rule.
double cesaro(const Eigen::Ref<const Eigen::VectorXd>& times,
              const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace herding::meanfield
