#include "herding/closed_forms.hpp"

#include <cmath>

#include "herding/errors.hpp"
#include "herding/series.hpp"

namespace herding::closed_forms {

double uniform_policy_gf(const ModelParams& params, const ProbSeq& theta,
                         const ProbSeq& phi, double z) {
  params.validate();
  if (!(params.lambda > 0.0))
    throw ConfigError("uniform_policy_gf requires lambda > 0");
  if (!(z >= 0.0 && z < 1.0))
    throw RegimeError("uniform_policy_gf is defined on [0, 1); use the r(1) "
                      "formula at z = 1");
  if (z == 0.0) return 0.0;

  const double r_total =
      (params.alpha * theta.moment1() + params.lambda * phi.moment1()) /
      params.mu;
  const double denom = params.alpha * (1.0 - theta.gf(z)) +
                       params.mu * r_total * (1.0 - 1.0 / z);
  if (denom == 0.0)
    throw SolverError("uniform policy generating function denominator "
                      "vanished inside the unit interval");
  return params.lambda * r_total * (phi.gf(z) - 1.0) / denom;
}

AlphaZeroSolution alpha_zero_solution(const ModelParams& params,
                                      const ProbSeq& phi, Eigen::Index len) {
  params.validate();
  if (len < 1) throw ConfigError("requested length must be >= 1");
  AlphaZeroSolution out;
  const double create = params.lambda / params.mu;
  out.scores.resize(len);
  for (Eigen::Index n = 0; n < len; ++n) out.scores[n] = create * phi.tail(n);
  out.r_total = create * phi.moment1();
  out.score_mass = params.lambda *
                   (phi.moment2_factorial() + 2.0 * phi.moment1()) /
                   (2.0 * params.mu);
  return out;
}

double lerch(double x, double gamma, double v, double tol) {
  if (!(gamma > 0.0) || !(v > 0.0))
    throw ConfigError("lerch requires gamma > 0 and v > 0");
  if (!(x >= 0.0)) throw ConfigError("lerch requires x >= 0");
  if (x > 1.0) throw RegimeError("lerch series diverges for x > 1");
  if (x == 0.0) return std::pow(v, -gamma);
  if (x == 1.0) {
    if (gamma <= 1.0)
      throw RegimeError("lerch diverges at x = 1 for gamma <= 1");
    return zeta_tail(gamma, v).value;
  }

  // Blocked vectorized summation; the term ratio is below x, so the
  // remainder past k is bounded by term_k x/(1-x).
  constexpr Eigen::Index kBlock = 1 << 15;
  constexpr Eigen::Index kCap = 1'000'000'000;
  const double logx = std::log(x);
  double sum = 0.0;
  for (Eigen::Index start = 0; start < kCap; start += kBlock) {
    const Eigen::ArrayXd ks = Eigen::ArrayXd::LinSpaced(
        kBlock, static_cast<double>(start),
        static_cast<double>(start + kBlock - 1));
    const Eigen::ArrayXd terms = (ks * logx - gamma * (ks + v).log()).exp();
    sum += terms.sum();
    const double last = terms[kBlock - 1];
    if (last * x / (1.0 - x) <= tol + 1e-9 * sum) return sum;
  }
  throw SolverError("lerch series did not meet its tolerance certificate");
}

double ratio_power_series(double x, double gamma, double tol) {
  // F(x) = sum_{k>=1} x^k/(k+1)^gamma = lerch(x, gamma, 1) - 1.
  if (x == 1.0 && gamma <= 1.0)
    throw RegimeError("series diverges at x = 1 for gamma <= 1");
  return lerch(x, gamma, 1.0, tol) - 1.0;
}

double ratio_power_series_derivative(double x, double gamma, double tol) {
  if (!(x >= 0.0)) throw ConfigError("series argument must be >= 0");
  if (x > 1.0) throw RegimeError("series diverges for x > 1");
  if (x == 1.0) {
    if (gamma <= 2.0)
      throw RegimeError("derivative series diverges at x = 1 for gamma <= 2");
    // sum_k k (k+1)^-gamma = zeta(gamma-1) - zeta(gamma).
    return zeta_tail(gamma - 1.0, 1.0).value - zeta_tail(gamma, 1.0).value;
  }

  constexpr Eigen::Index kBlock = 1 << 15;
  constexpr Eigen::Index kCap = 1'000'000'000;
  const double logx = std::log(x);
  double sum = 0.0;
  for (Eigen::Index start = 1; start < kCap; start += kBlock) {
    const Eigen::ArrayXd ks = Eigen::ArrayXd::LinSpaced(
        kBlock, static_cast<double>(start),
        static_cast<double>(start + kBlock - 1));
    const Eigen::ArrayXd terms =
        ks * ((ks - 1.0) * logx - gamma * (ks + 1.0).log()).exp();
    sum += terms.sum();
    // Remaining terms are below (k+2)^-gamma sum_{m>k} m x^{m-1}.
    const double kd = static_cast<double>(start + kBlock - 1);
    const double geom_tail = ((kd + 1.0) * (1.0 - x) + x) *
                             std::pow(x, kd) / ((1.0 - x) * (1.0 - x));
    if (std::pow(kd + 2.0, -gamma) * geom_tail <= tol + 1e-9 * sum) return sum;
  }
  throw SolverError("derivative series did not meet its tolerance certificate");
}

std::vector<double> default_figure_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
  // Geometric refinement toward 1 to expose divergent expected scores.
  for (double gap : {5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4, 5e-5, 2e-5, 1e-5,
                     5e-6, 2e-6, 1e-6})
    grid.push_back(1.0 - gap);
  return grid;
}

std::vector<FigureRow> figure_sweep(const std::vector<double>& gammas,
                                    double lambda, double mu,
                                    const std::vector<double>& x_grid) {
  if (!(lambda > 0.0) || !(mu > 0.0))
    throw ConfigError("figure sweep requires lambda > 0 and mu > 0");
  std::vector<FigureRow> rows;
  rows.reserve(gammas.size() * x_grid.size());
  for (double gamma : gammas) {
    if (!(gamma > 0.0)) throw ConfigError("figure sweep requires gamma > 0");
    const char* regime = gamma <= 1.0          ? "always_ergodic"
                         : gamma <= 2.0        ? "threshold_divergent_mean"
                                               : "threshold_bounded_mean";
    for (double x : x_grid) {
      if (!(x > 0.0 && x < 1.0))
        throw ConfigError("figure grid points must lie in (0, 1)");
      FigureRow row;
      row.gamma = gamma;
      row.x = x;
      row.alpha = lambda * ratio_power_series(x, gamma);
      row.r_prime_1 =
          lambda / mu * x * ratio_power_series_derivative(x, gamma);
      row.regime = regime;
      rows.push_back(std::move(row));
    }
    if (gamma > 2.0) {
      // Bounded-mean curves close at the threshold; emit the exact
      // endpoint.
      FigureRow row;
      row.gamma = gamma;
      row.x = 1.0;
      row.alpha = lambda * ratio_power_series(1.0, gamma);
      row.r_prime_1 = lambda / mu * ratio_power_series_derivative(1.0, gamma);
      row.regime = regime;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace herding::closed_forms
