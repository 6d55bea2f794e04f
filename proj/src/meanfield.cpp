#include "herding/meanfield.hpp"

#include <cmath>
#include <string>

#include "herding/errors.hpp"

namespace herding::meanfield {

namespace {

// Augmented system y = (r_1..r_L, escaped).
Eigen::VectorXd rhs_augmented(const Eigen::VectorXd& y,
                              const ModelParams& params,
                              const PolicySpec& policy, const ProbSeq& theta,
                              const ProbSeq& phi) {
  State s;
  const Eigen::Index n = y.size() - 1;
  // Intermediate Runge-Kutta stages may dip below zero by the local error;
  // the dynamics are evaluated on the clamped state.
  s.scores = y.head(n).cwiseMax(0.0);
  s.escaped = std::max(y[n], 0.0);
  const Derivative d = rhs(s, params, policy, theta, phi);
  Eigen::VectorXd out(y.size());
  out.head(n) = d.scores;
  out[n] = d.escape_rate;
  return out;
}

void check_finite(const Eigen::VectorXd& y, double t) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i]))
      throw SolverError("non-finite value in component " + std::to_string(i) +
                        " at t = " + std::to_string(t));
}

}  // namespace

Derivative rhs(const State& state, const ModelParams& params,
               const PolicySpec& policy, const ProbSeq& theta,
               const ProbSeq& phi) {
  params.validate();
  const Eigen::Index len = state.scores.size();
  if (len < phi.max_score())
    throw ConfigError("truncation " + std::to_string(len) +
                      " is below the initial-score support " +
                      std::to_string(phi.max_score()));

  // Cumulative policies have no defective extension; their selection acts
  // on the tracked part alone.
  const double delta = policy.is_cumulative() ? 0.0 : state.escaped;
  const Eigen::VectorXd pi = policy_probs(policy, state.scores, delta);

  Derivative d;
  d.scores.resize(len);
  const Eigen::Index s_theta = theta.max_score();
  for (Eigen::Index m = 0; m < len; ++m) {
    // m is score m+1.
    double value = params.lambda * phi.mass(m + 1);
    value += params.mu * ((m + 1 < len ? state.scores[m + 1] : 0.0) -
                          state.scores[m]);
    double inflow = 0.0;
    const Eigen::Index j_hi = std::min<Eigen::Index>(s_theta, m);
    for (Eigen::Index j = 1; j <= j_hi; ++j)
      inflow += theta.mass(j) * pi[m - j];
    value += params.alpha * (inflow - pi[m]);
    d.scores[m] = value;
  }

  // Visit flux beyond the truncation.
  double escape = 0.0;
  for (Eigen::Index j = std::max<Eigen::Index>(1, len - s_theta + 1); j <= len;
       ++j)
    escape += pi[j - 1] * theta.tail(len - j);
  d.escape_rate = params.alpha * escape;
  return d;
}

Trajectory integrate(const State& start, const ModelParams& params,
                     const PolicySpec& policy, const ProbSeq& theta,
                     const ProbSeq& phi, double t_end,
                     const Controls& controls, Eigen::Index samples) {
  if (!(t_end > start.t)) throw ConfigError("t_end must exceed the start time");
  if (samples < 2) throw ConfigError("need at least two samples");

  const Eigen::Index len = start.scores.size();
  Eigen::VectorXd y(len + 1);
  y.head(len) = start.scores;
  y[len] = start.escaped;

  Trajectory traj;
  traj.times = Eigen::VectorXd::LinSpaced(samples, start.t, t_end);
  traj.scores.resize(samples, len);
  traj.escaped.resize(samples);
  traj.scores.row(0) = start.scores.transpose();
  traj.escaped[0] = start.escaped;

  // Dormand-Prince 5(4) tableau.
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 35.0 / 384 - 5179.0 / 57600,
                      e3 = 500.0 / 1113 - 7571.0 / 16695,
                      e4 = 125.0 / 192 - 393.0 / 640,
                      e5 = -2187.0 / 6784 + 92097.0 / 339200,
                      e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  double t = start.t;
  double h = controls.h_init;
  auto f = [&](const Eigen::VectorXd& state) {
    return rhs_augmented(state, params, policy, theta, phi);
  };

  for (Eigen::Index row = 1; row < samples; ++row) {
    const double target = traj.times[row];
    // Sub-ulp residuals cannot be stepped over; snap to the target then.
    while (target - t > 1e-12 * std::max(1.0, std::abs(target))) {
      const double step = std::min(h, target - t);
      const Eigen::VectorXd k1 = f(y);
      const Eigen::VectorXd k2 = f(y + step * (a21 * k1));
      const Eigen::VectorXd k3 = f(y + step * (a31 * k1 + a32 * k2));
      const Eigen::VectorXd k4 =
          f(y + step * (a41 * k1 + a42 * k2 + a43 * k3));
      const Eigen::VectorXd k5 =
          f(y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Eigen::VectorXd k6 = f(
          y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const Eigen::VectorXd y5 =
          y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Eigen::VectorXd k7 = f(y5);
      const Eigen::VectorXd err = step * (e1 * k1 + e3 * k3 + e4 * k4 +
                                          e5 * k5 + e6 * k6 + e7 * k7);
      check_finite(y5, t);

      double norm = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double scale = controls.abs_tol +
                             controls.rel_tol *
                                 std::max(std::abs(y[i]), std::abs(y5[i]));
        norm = std::max(norm, std::abs(err[i]) / scale);
      }

      if (norm <= 1.0) {
        t += step;
        y = y5;
        for (Eigen::Index i = 0; i < len; ++i)
          if (y[i] < 0.0) {
            y[i] = 0.0;
            ++traj.clip_events;
          }
        traj.top_bin_peak = std::max(traj.top_bin_peak, y[len - 1]);
        ++traj.steps;
      }
      // Keep the natural step size when the step was only clipped to land
      // on a sample time.
      if (norm > 1.0 || step == h) {
        const double factor = norm > 0.0 ? 0.9 * std::pow(norm, -0.2) : 5.0;
        h = step * std::min(5.0, std::max(0.2, factor));
      }
      if (h < controls.h_min)
        throw SolverError("step size underflow at t = " + std::to_string(t));
    }
    t = target;
    traj.scores.row(row) = y.head(len).transpose();
    traj.escaped[row] = y[len];
  }
  return traj;
}

double mass(const State& state) { return state.scores.sum(); }

double mean_score(const State& state) {
  const double total = state.scores.sum();
  if (!(total > 0.0))
    throw RegimeError("mean score is undefined on an empty state");
  double weighted = 0.0;
  for (Eigen::Index i = 0; i < state.scores.size(); ++i)
    weighted += static_cast<double>(i + 1) * state.scores[i];
  return weighted / total;
}

double cesaro(const Eigen::Ref<const Eigen::VectorXd>& times,
              const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (times.size() != values.size() || times.size() < 2)
    throw ConfigError("cesaro needs a sampled trajectory of length >= 2");
  double integral = 0.0;
  for (Eigen::Index i = 1; i < times.size(); ++i)
    integral += 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
  return integral / (times[times.size() - 1] - times[0]);
}

}  // namespace herding::meanfield
