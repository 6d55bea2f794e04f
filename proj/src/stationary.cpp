#include "herding/stationary.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "herding/errors.hpp"
#include "herding/series.hpp"

namespace herding::stationary {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_pointwise(const PolicySpec& policy) {
  if (!policy.has_pointwise_weights())
    throw ConfigError("operation requires a pointwise-weight policy");
}

void require_bounded(const PolicySpec& policy) {
  require_pointwise(policy);
  if (policy.unbounded_weights())
    throw ConfigError("operation requires bounded weights");
}

// sum_{n > j} A_n for a bounded-weight policy, +inf when divergent.
Certified product_tail_sum(const PolicySpec& policy, Eigen::Index j) {
  const auto tail = policy.product_tail();
  using K = PolicySpec::ProductTail::Kind;
  if (tail.kind == K::ConstantLimit ||
      (tail.kind == K::PowerLaw && tail.gamma <= 1.0))
    return {kInf, 0.0};
  if (tail.kind != K::PowerLaw)
    throw ConfigError("weight-product tail is not specified for this policy");

  // Explicit head up to the start of the power-law regime, zeta tail after.
  double head = 0.0;
  for (Eigen::Index n = j + 1; n <= tail.from; ++n)
    head += policy.cum_weight_product(n);
  const Eigen::Index m = std::max(j, tail.from);
  // A_n = scale/(n+1)^gamma for n >= from; substitute q = n + 1.
  const Certified z = zeta_tail(tail.gamma, m + 2);
  return {head + tail.scale * z.value, tail.scale * z.error};
}

struct MassSums {
  double mass = 0.0;      // sum r_n
  double score = 0.0;     // sum n r_n
  double weighted = 0.0;  // sum a_n r_n
};

// Continues the unit-jump recursion r_{s} = x a_{s-1} r_{s-1} past the
// computed vector (x < 1) and accumulates the remaining sums.
MassSums continue_unit_jump(const PolicySpec& policy, double x,
                            double r_last, Eigen::Index last_score,
                            Eigen::Index cap) {
  MassSums t;
  double r = r_last;
  for (Eigen::Index s = last_score + 1; s < last_score + 1 + cap; ++s) {
    r *= x * policy.weight(s - 1);
    t.mass += r;
    t.score += r * static_cast<double>(s);
    t.weighted += r * policy.weight(s);
    if (r * static_cast<double>(s) < 1e-17 * (1.0 + t.score)) return t;
  }
  throw SolverError("unit-jump tail summation did not stall");
}

// Tail sums at the condensation boundary x = 1, where r_{n+1} = pref A_n
// past the phi support. Power-law weight products give zeta tails; the
// score sum is finite only for gamma > 2.
MassSums boundary_tail(const PolicySpec& policy, double pref,
                       Eigen::Index start) {
  MassSums t;
  if (pref == 0.0) return t;
  const auto model = policy.product_tail();
  using K = PolicySpec::ProductTail::Kind;
  if (model.kind != K::PowerLaw || model.gamma <= 1.0)
    throw SolverError("non-summable score vector at x = 1");
  const Eigen::Index m = std::max<Eigen::Index>(start - 1, model.from);
  for (Eigen::Index n = start; n <= m; ++n) {
    const double r = pref * policy.cum_weight_product(n);
    t.mass += r;
    t.score += r * static_cast<double>(n + 1);
    t.weighted += r * policy.weight(n + 1);
  }
  t.mass += pref * model.scale * zeta_tail(model.gamma, m + 2).value;
  // a_{n+1} A_n = A_{n+1} exactly, so the weighted tail shifts by one.
  t.weighted += pref * model.scale * zeta_tail(model.gamma, m + 3).value;
  if (model.gamma > 2.0)
    t.score += pref * model.scale * zeta_tail(model.gamma - 1.0, m + 2).value;
  else
    t.score = kInf;
  return t;
}

}  // namespace

const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::Ergodic:
      return "Ergodic";
    case Regime::Condensed:
      return "Condensed";
    case Regime::NonErgodicUnboundedWeights:
      return "NonErgodicUnboundedWeights";
    case Regime::DegenerateEmpty:
      return "DegenerateEmpty";
  }
  return "?";
}

Eigen::VectorXd recursion_given_k(double K, const ModelParams& params,
                                  const PolicySpec& policy,
                                  const ProbSeq& theta, const ProbSeq& phi,
                                  Eigen::Index len) {
  require_pointwise(policy);
  params.validate();
  if (!(K > 0.0)) throw ConfigError("recursion requires K > 0");
  if (len < 1) throw ConfigError("requested length must be >= 1");

  const double coef = params.alpha / (params.mu * K);
  const double create = params.lambda / params.mu;
  const Eigen::Index s_theta = theta.max_score();

  Eigen::VectorXd r(len);  // r[m] = r_{m+1}
  r[0] = create * phi.tail(0);
  for (Eigen::Index n = 1; n < len; ++n) {
    double visit = 0.0;
    const Eigen::Index imax = std::min<Eigen::Index>(n - 1, s_theta - 1);
    for (Eigen::Index i = 0; i <= imax; ++i)
      visit += policy.weight(n - i) * r[n - i - 1] * theta.tail(i);
    r[n] = coef * visit + create * phi.tail(n);
  }
  return r;
}

Eigen::VectorXd closed_form_unit_jump(double K, const ModelParams& params,
                                      const PolicySpec& policy,
                                      const ProbSeq& phi, Eigen::Index len) {
  require_pointwise(policy);
  params.validate();
  if (!(K > 0.0)) throw ConfigError("closed form requires K > 0");

  const double x = params.alpha / (params.mu * K);
  const double create = params.lambda / params.mu;
  const Eigen::Index j_max = phi.max_score();
  const Eigen::VectorXd products = policy.cum_weight_products(len);

  Eigen::VectorXd r(len);
  double shifted = 0.0;  // sum_{j <= min(n, J-1)} (Phi_j/A_j) x^{n-j}
  for (Eigen::Index n = 0; n < len; ++n) {
    shifted *= x;
    if (n < j_max) shifted += phi.tail(n) / products[n];
    r[n] = create * products[n] * shifted;
  }
  return r;
}

double consistency_series(double x, const PolicySpec& policy,
                          const ProbSeq& phi, double tol,
                          Eigen::Index series_cap) {
  require_bounded(policy);
  if (!(x >= 0.0)) throw ConfigError("series argument must be >= 0");
  if (x > 1.0)
    throw RegimeError("the consistency series has radius of convergence 1");
  if (x == 0.0) return 0.0;

  const Eigen::Index j_max = phi.max_score();

  if (x == 1.0) {
    // F(1) = sum_j (Phi_j / A_j) sum_{n > j} A_n.
    double total = 0.0;
    for (Eigen::Index j = 0; j < j_max; ++j) {
      const Certified tail = product_tail_sum(policy, j);
      if (std::isinf(tail.value)) return kInf;
      total += phi.tail(j) / policy.cum_weight_product(j) * tail.value;
    }
    return total;
  }

  const double phi_mean = phi.moment1();
  Eigen::Index horizon = 1024;
  while (phi_mean * std::pow(x, static_cast<double>(horizon + 1)) / (1.0 - x) >
         tol) {
    if (horizon >= series_cap)
      throw SolverError(
          "consistency series horizon exhausted; achieved certificate " +
          std::to_string(phi_mean *
                         std::pow(x, static_cast<double>(horizon + 1)) /
                         (1.0 - x)));
    horizon *= 2;
  }

  std::vector<double> inv_scaled(static_cast<std::size_t>(j_max));  // Phi_j/A_j
  for (Eigen::Index j = 0; j < j_max; ++j)
    inv_scaled[static_cast<std::size_t>(j)] =
        phi.tail(j) / policy.cum_weight_product(j);

  // Rolling window of products: window[j] = A_{k+j}; memory stays O(J)
  // however deep the certificate pushes the horizon.
  std::vector<double> window(static_cast<std::size_t>(j_max));
  for (Eigen::Index j = 0; j < j_max; ++j)
    window[static_cast<std::size_t>(j)] = policy.cum_weight_product(1 + j);

  double value = 0.0;
  double xk = 1.0;
  for (Eigen::Index k = 1; k <= horizon; ++k) {
    xk *= x;
    double u = 0.0;
    for (Eigen::Index j = 0; j < j_max; ++j)
      u += inv_scaled[static_cast<std::size_t>(j)] *
           window[static_cast<std::size_t>(j)];
    value += u * xk;
    for (Eigen::Index j = 0; j + 1 < j_max; ++j)
      window[static_cast<std::size_t>(j)] =
          window[static_cast<std::size_t>(j + 1)];
    // The source of the shift survives in the last slot: advance it.
    window[static_cast<std::size_t>(j_max - 1)] *= policy.weight(k + j_max);
  }
  return value;
}

PhaseDiagnosis ergodicity_bound(const PolicySpec& policy, const ProbSeq& phi) {
  if (policy.is_cumulative())
    throw ConfigError(
        "ergodicity_bound covers weight policies; cumulative policies use "
        "the fixed-point threshold");

  PhaseDiagnosis diag;
  if (policy.unbounded_weights()) {
    diag.bound = std::numeric_limits<double>::quiet_NaN();
    diag.bound_known = false;
    diag.always_ergodic = false;
    diag.threshold_ratio = 0.0;
    diag.source = PhaseDiagnosis::Source::UnboundedWeights;
    return diag;
  }

  if (policy.kind() == PolicySpec::Kind::AsymptoticClass) {
    diag.source = PhaseDiagnosis::Source::TailExponents;
    if (policy.nu() > 1.0 || (policy.nu() == 1.0 && policy.gamma() <= 1.0)) {
      diag.bound = kInf;
      diag.always_ergodic = true;
      diag.threshold_ratio = kInf;
    } else {
      // Finite support keeps sum_j j^(nu+1) phi_j finite, so a finite
      // bound exists; its value needs the exact weights.
      diag.bound = std::numeric_limits<double>::quiet_NaN();
      diag.bound_known = false;
      diag.always_ergodic = false;
      diag.threshold_ratio = std::numeric_limits<double>::quiet_NaN();
    }
    return diag;
  }

  diag.source = PhaseDiagnosis::Source::SeriesLimit;
  diag.bound = consistency_series(1.0, policy, phi, 1e-12);
  diag.always_ergodic = std::isinf(diag.bound);
  diag.threshold_ratio = diag.bound;
  return diag;
}

ConsistencyRoot solve_consistency(const ModelParams& params,
                                  const PolicySpec& policy,
                                  const ProbSeq& phi, double tol) {
  require_bounded(policy);
  params.validate();
  if (!(params.lambda > 0.0) || !(params.alpha > 0.0))
    throw ConfigError(
        "consistency equation requires lambda > 0 and alpha > 0");

  const double ratio = params.alpha / params.lambda;
  const PhaseDiagnosis diag = ergodicity_bound(policy, phi);

  ConsistencyRoot root;
  root.bound = diag.bound;
  if (!diag.always_ergodic) {
    if (ratio > diag.bound * (1.0 + 1e-14)) return root;
    if (ratio >= diag.bound * (1.0 - 1e-14)) {
      root.found = true;
      root.x = 1.0;
      root.K = params.alpha / params.mu;
      return root;
    }
  }

  const double eval_tol = std::min(tol / 4.0, 1e-10);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (consistency_series(mid, policy, phi, eval_tol) < ratio ? lo : hi) = mid;
  }
  root.x = 0.5 * (lo + hi);
  const double at_root = consistency_series(root.x, policy, phi, eval_tol);
  if (std::abs(at_root - ratio) > std::max(tol, 1e-9 * ratio))
    throw SolverError("consistency bisection residual " +
                      std::to_string(std::abs(at_root - ratio)) +
                      " exceeds the tolerance certificate");
  root.found = true;
  root.K = params.alpha / (params.mu * root.x);
  return root;
}

namespace {

Eigen::Index effective_len(const Options& opt, const ProbSeq& theta,
                           const ProbSeq& phi) {
  return std::max(opt.truncation, phi.max_score() + theta.max_score() + 8);
}

// Assembles an ergodic (or boundary x = 1) weight-policy solution at a
// known root, with tail-completed mass sums.
StationarySolution assemble_weighted(const ModelParams& params,
                                     const PolicySpec& policy,
                                     const ProbSeq& theta, const ProbSeq& phi,
                                     double x, double K, const Options& opt) {
  StationarySolution sol;
  sol.regime = Regime::Ergodic;
  sol.K = K;
  sol.x = x;
  const Eigen::Index len = effective_len(opt, theta, phi);
  sol.scores = recursion_given_k(std::isinf(K) ? 1.0 : K, params, policy,
                                 theta, phi, len);
  // recursion_given_k needs a finite positive K; with alpha = 0 the visit
  // coefficient vanishes for any K, so a placeholder 1.0 is exact.

  MassSums sums;
  for (Eigen::Index n = 0; n < len; ++n) {
    sums.mass += sol.scores[n];
    sums.score += sol.scores[n] * static_cast<double>(n + 1);
    sums.weighted += sol.scores[n] * policy.weight(n + 1);
  }

  if (params.lambda > 0.0 && params.alpha > 0.0) {
    if (theta.is_unit_jump() && x < 1.0) {
      const MassSums tail = continue_unit_jump(policy, x, sol.scores[len - 1],
                                               len, opt.series_cap);
      sums.mass += tail.mass;
      sums.score += tail.score;
      sums.weighted += tail.weighted;
    } else if (theta.is_unit_jump()) {
      // Boundary root x = 1.
      const double pref =
          sol.scores[len - 1] / policy.cum_weight_product(len - 1);
      const MassSums tail = boundary_tail(policy, pref, len);
      sums.mass += tail.mass;
      sums.score += tail.score;
      sums.weighted += tail.weighted;
    } else {
      // General theta: continue the recursion until the sums stall.
      const Eigen::Index s_theta = theta.max_score();
      std::vector<double> window(static_cast<std::size_t>(s_theta));
      for (Eigen::Index i = 0; i < s_theta; ++i) {
        const Eigen::Index idx = len - 1 - i;
        window[static_cast<std::size_t>(i)] =
            idx >= 0 ? policy.weight(idx + 1) * sol.scores[idx] : 0.0;
      }
      const double coef = params.alpha / (params.mu * K);
      bool stalled = false;
      for (Eigen::Index n = len; n < len + opt.general_horizon; ++n) {
        double visit = 0.0;
        for (Eigen::Index i = 0; i < s_theta; ++i)
          visit += window[static_cast<std::size_t>(i)] * theta.tail(i);
        const double r = coef * visit;  // past the phi support
        sums.mass += r;
        sums.score += r * static_cast<double>(n + 1);
        sums.weighted += r * policy.weight(n + 1);
        for (Eigen::Index i = s_theta - 1; i >= 1; --i)
          window[static_cast<std::size_t>(i)] =
              window[static_cast<std::size_t>(i - 1)];
        window[0] = policy.weight(n + 1) * r;
        if (r * static_cast<double>(n + 1) < 1e-17 * (1.0 + sums.score)) {
          stalled = true;
          break;
        }
      }
      if (!stalled)
        throw SolverError("stationary tail summation did not stall");
    }
  }

  sol.delta = 0.0;
  sol.pi_bar = 1.0;
  sol.r_total = sums.mass;
  sol.score_mass = sums.score;
  if (std::isinf(K)) {
    sol.K = sums.weighted;  // alpha = 0: K is just the weighted mass
    sol.x = 0.0;
    sol.residuals["fixed_point"] = 0.0;
  } else {
    sol.residuals["fixed_point"] = std::abs(K - sums.weighted) / K;
  }
  sol.residuals["r1_identity"] =
      std::abs(sol.scores[0] - params.lambda / params.mu);
  return sol;
}

}  // namespace

StationarySolution condensed_solution(const ModelParams& params,
                                      const PolicySpec& policy,
                                      const ProbSeq& phi, const Options& opt) {
  require_bounded(policy);
  params.validate();
  if (!(params.alpha > 0.0))
    throw ConfigError("condensed phase requires alpha > 0");

  const double bound = consistency_series(1.0, policy, phi, 1e-12);
  if (std::isinf(bound))
    throw RegimeError(
        "condensed_solution called for an always-ergodic policy");
  const double ratio = params.alpha / params.lambda;  // +inf when lambda = 0
  if (ratio < bound * (1.0 - 1e-12))
    throw RegimeError("condensed_solution called in the ergodic region");

  StationarySolution sol;
  sol.K = params.alpha / params.mu;
  sol.x = 1.0;
  sol.delta = (params.alpha - params.lambda * bound) / params.mu;
  sol.pi_bar = params.lambda * bound / params.alpha;
  sol.regime = sol.delta > 0.0 ? Regime::Condensed : Regime::Ergodic;
  sol.notes.push_back("condensed closure uses the x = 1 least-action ansatz");

  const ProbSeq unit = ProbSeq::point_mass(1);
  const Eigen::Index len = effective_len(opt, unit, phi);
  sol.scores = recursion_given_k(sol.K, params, policy, unit, phi, len);

  MassSums sums;
  for (Eigen::Index n = 0; n < len; ++n) {
    sums.mass += sol.scores[n];
    sums.score += sol.scores[n] * static_cast<double>(n + 1);
    sums.weighted += sol.scores[n] * policy.weight(n + 1);
  }
  if (params.lambda > 0.0) {
    const double pref =
        sol.scores[len - 1] / policy.cum_weight_product(len - 1);
    const MassSums tail = boundary_tail(policy, pref, len);
    sums.mass += tail.mass;
    sums.score += tail.score;
    sums.weighted += tail.weighted;
  }
  sol.r_total = sums.mass;
  sol.score_mass = sums.score;

  sol.residuals["transient1"] = std::abs(
      1.0 - params.lambda / params.alpha * bound - sol.delta / sol.K);
  sol.residuals["r1_identity"] =
      std::abs(sol.scores[0] - params.lambda / params.mu);
  sol.residuals["r_total_closed_form"] = std::abs(
      sol.r_total - params.lambda / params.mu * (bound + phi.moment1()));
  // In the condensed phase the normalizer splits as K = sum a_i r_i + delta.
  sol.residuals["fixed_point"] =
      std::abs(sol.K - (sums.weighted + sol.delta)) / sol.K;
  return sol;
}

CumulativeFixedPoint cumulative_fixed_point(const ModelParams& params,
                                            const PolicySpec& policy,
                                            const ProbSeq& theta,
                                            const ProbSeq& phi, double tol,
                                            const Options& opt) {
  if (!policy.is_cumulative())
    throw ConfigError("cumulative_fixed_point requires a cumulative policy");
  params.validate();
  if (!(params.lambda > 0.0))
    throw ConfigError("cumulative fixed point requires lambda > 0");

  CumulativeFixedPoint out;
  out.r_total =
      (params.alpha * theta.moment1() + params.lambda * phi.moment1()) /
      params.mu;
  const double c_theta = params.alpha / (params.mu * out.r_total);
  const double c_phi = params.lambda / (params.mu * out.r_total);
  const double fp1 = policy.f_prime_one();

  // Closed-form threshold: alpha theta'(1)/(lambda phi'(1)) <= 1/(f'(1)-1).
  const double lhs =
      params.alpha * theta.moment1() / (params.lambda * phi.moment1());
  out.ergodic = lhs <= (1.0 / (fp1 - 1.0)) * (1.0 + 1e-12);

  // Toeplitz limit equation h(P) = P - c_theta theta'(1) f(P) - c_phi
  // phi'(1) = 0. P = 1 is always a root; a smaller one exists exactly when
  // the slope of the right-hand side at 1 exceeds 1, and the recursion
  // converges to the smallest root.
  if (out.ergodic) {
    out.limit = 1.0;
  } else {
    const double scale_theta = c_theta * theta.moment1();
    const double scale_phi = c_phi * phi.moment1();
    auto h = [&](double p) {
      return p - scale_theta * policy.f(p) - scale_phi;
    };
    double lo = 0.0, hi = 1.0 - 1e-9;
    if (h(hi) <= 0.0) throw SolverError("limit equation lost its interior root");
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) < 0.0 ? lo : hi) = mid;
    }
    out.limit = 0.5 * (lo + hi);
  }

  // Cumulative recursion with stagnation detection; also yields the score
  // profile prefix r_i = r(1) (P_i - P_{i-1}).
  const Eigen::Index s_theta = theta.max_score();
  const Eigen::Index keep = effective_len(opt, theta, phi);
  const Eigen::Index horizon = std::max<Eigen::Index>(1'000'000, keep);
  std::vector<double> window(static_cast<std::size_t>(s_theta), 0.0);
  out.scores = Eigen::VectorXd::Zero(keep);
  double phi_prefix = 0.0;
  double p = 0.0;
  for (Eigen::Index n = 0; n < horizon; ++n) {
    if (n < phi.max_score()) phi_prefix += phi.tail(n);
    double visit = 0.0;
    const Eigen::Index imax = std::min<Eigen::Index>(n - 1, s_theta - 1);
    for (Eigen::Index i = 0; i <= imax; ++i)
      visit += window[static_cast<std::size_t>(i)] * theta.tail(i);
    const double p_next = std::min(c_theta * visit + c_phi * phi_prefix, 1.0);
    if (n < keep) out.scores[n] = out.r_total * (p_next - p);
    for (Eigen::Index i = s_theta - 1; i >= 1; --i)
      window[static_cast<std::size_t>(i)] =
          window[static_cast<std::size_t>(i - 1)];
    window[0] = policy.f(p_next);
    const bool converged =
        n >= keep && n >= phi.max_score() && p_next - p < 1e-15;
    p = p_next;
    if (converged) break;
  }
  out.iterate = p;

  // The iterate and the threshold must tell the same story. At the exact
  // threshold the recursion converges only like 1/n, hence the loose gate
  // on the ergodic side.
  const double gap = std::abs(out.iterate - out.limit);
  const double gate = out.ergodic ? 1e-3 : std::max(1e-6, 10.0 * tol);
  if (gap > gate)
    throw SolverError(
        "cumulative recursion iterate disagrees with the limit equation by " +
        std::to_string(gap));
  return out;
}

ConsistencyRoot consistency_general(const ModelParams& params,
                                    const PolicySpec& policy,
                                    const ProbSeq& theta, const ProbSeq& phi,
                                    Eigen::Index horizon, double tol) {
  require_bounded(policy);
  params.validate();
  if (!(params.lambda > 0.0) || !(params.alpha > 0.0))
    throw ConfigError(
        "consistency equation requires lambda > 0 and alpha > 0");

  const double ratio = params.alpha / params.lambda;
  const Eigen::Index s_theta = theta.max_score();
  const Eigen::Index j_max = phi.max_score();
  const double theta_mean = theta.moment1();

  struct Eval {
    double value = 0.0;
    bool certified = false;
  };

  // G(x) = x sum_n a_n rho_n with rho the lambda-normalized recursion.
  // Past the phi support the weighted window maxima contract by
  // x theta'(1) every s_theta steps, which certifies the tail once that
  // factor is below 1; at or above 1 the series diverges (lim a_i = 1).
  // Partial sums are lower bounds, so crossing `stop_above` is conclusive
  // on its own.
  auto evaluate = [&](double x, double stop_above) -> Eval {
    if (x == 0.0) return {0.0, true};
    const double contraction = x * theta_mean;
    if (contraction >= 1.0) return {kInf, true};
    std::vector<double> window(static_cast<std::size_t>(s_theta), 0.0);
    Eigen::Index head = 0;  // window[(head + i) % s] holds a_{n-i} rho_{n-i}
    double weighted = 0.0;
    for (Eigen::Index n = 0; n < horizon; ++n) {
      double visit = 0.0;
      const Eigen::Index imax = std::min<Eigen::Index>(n - 1, s_theta - 1);
      for (Eigen::Index i = 0; i <= imax; ++i)
        visit += window[static_cast<std::size_t>((head + i) % s_theta)] *
                 theta.tail(i);
      const double rho = x * visit + phi.tail(n);  // rho_{n+1}
      weighted += policy.weight(n + 1) * rho;
      head = (head + s_theta - 1) % s_theta;
      window[static_cast<std::size_t>(head)] = policy.weight(n + 1) * rho;
      if (x * weighted >= stop_above) return {x * weighted, true};
      if (n >= j_max + s_theta) {
        double peak = 0.0;
        for (double w : window) peak = std::max(peak, w);
        const double tail_bound = static_cast<double>(s_theta) * peak *
                                  contraction / (1.0 - contraction);
        if (tail_bound <= tol / 4.0) return {x * weighted, true};
      }
    }
    return {x * weighted, false};  // partial sum; certificate not reached
  };

  // Overshoot target: far enough above the ratio that crossing it settles
  // the bisection side without a tail certificate.
  const double stop_above = ratio * (1.0 + 1e-6) + tol;

  ConsistencyRoot root;
  double lo = 0.0, hi = 1.0;
  double best_below = 0.0;
  bool any_certified_above = false;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    // Without any certified point above the ratio the bracket is closing
    // on the divergence boundary; a coarse collapse is enough to conclude.
    if (!any_certified_above && hi - lo < 1e-9 && it > 8) break;
    const double mid = 0.5 * (lo + hi);
    const Eval e = evaluate(mid, stop_above);
    if (e.certified && e.value < ratio) {
      lo = mid;
      best_below = e.value;
    } else {
      hi = mid;
      any_certified_above = any_certified_above || e.certified;
    }
  }
  root.bound = best_below;
  const double x = lo > 0.0 ? lo : 0.5 * (lo + hi);
  const Eval final_eval = evaluate(x, kInf);
  if (final_eval.certified &&
      std::abs(final_eval.value - ratio) <= std::max(tol, 1e-8 * ratio)) {
    root.found = true;
    root.x = x;
    root.K = params.alpha / (params.mu * x);
    return root;
  }
  if (!any_certified_above && best_below == 0.0)
    throw SolverError(
        "general consistency horizon insufficient for any tail certificate; "
        "achieved bound " +
        std::to_string(best_below));
  return root;  // no certifiable finite root; bound carries the supremum seen
}

StationarySolution solve(const ModelParams& params, const PolicySpec& policy,
                         const ProbSeq& theta, const ProbSeq& phi,
                         const Options& opt) {
  params.validate();
  if (policy.kind() == PolicySpec::Kind::AsymptoticClass)
    throw ConfigError(
        "asymptotic_class policies support classification only; pick a "
        "concrete weight family to solve");

  StationarySolution sol;

  if (params.lambda == 0.0) {
    sol.regime = Regime::DegenerateEmpty;
    sol.scores = Eigen::VectorXd::Zero(opt.truncation);
    sol.K = 0.0;
    sol.x = 0.0;
    sol.delta = 0.0;
    sol.pi_bar = 0.0;
    sol.r_total = 0.0;
    sol.score_mass = 0.0;
    return sol;
  }

  if (policy.is_cumulative()) {
    const CumulativeFixedPoint fp =
        cumulative_fixed_point(params, policy, theta, phi, opt.tol, opt);
    sol.scores = fp.scores;
    sol.K = fp.r_total / policy.f_prime_one();
    sol.x = params.alpha / (params.mu * sol.K);
    if (fp.ergodic) {
      sol.regime = Regime::Ergodic;
      sol.delta = 0.0;
      sol.pi_bar = 1.0;
      sol.r_total = fp.r_total;
    } else {
      sol.regime = Regime::Condensed;
      sol.delta = fp.r_total * (1.0 - fp.limit);
      sol.pi_bar = policy.f(fp.limit);
      sol.r_total = fp.r_total * fp.limit;
      sol.notes.push_back(
          "cumulative condensed quantities use the pi_bar = 1 recursion "
          "ansatz; no closed condensed theory exists for this family");
    }
    double score = 0.0;
    for (Eigen::Index n = 0; n < sol.scores.size(); ++n)
      score += sol.scores[n] * static_cast<double>(n + 1);
    sol.score_mass = score;
    sol.residuals["r1_identity"] =
        std::abs(sol.scores[0] - params.lambda / params.mu);
    sol.residuals["fixed_point_limit"] = std::abs(fp.iterate - fp.limit);
    if (fp.ergodic)
      sol.residuals["r_total_identity"] =
          std::abs(params.mu * sol.r_total -
                   params.alpha * sol.pi_bar * theta.moment1() -
                   params.lambda * phi.moment1());
    return sol;
  }

  if (params.alpha == 0.0) {
    // Visit-free lower bound; selection never acts, any policy is stable.
    sol = assemble_weighted(params, policy, theta, phi, 0.0,
                            std::numeric_limits<double>::infinity(), opt);
  } else if (policy.unbounded_weights()) {
    // No finite K exists; the unique admissible stationary solution drops
    // the visit term entirely.
    sol.regime = Regime::NonErgodicUnboundedWeights;
    sol.K = std::numeric_limits<double>::infinity();
    sol.x = 0.0;
    sol.delta = 0.0;
    sol.pi_bar = 0.0;
    const Eigen::Index len = effective_len(opt, theta, phi);
    sol.scores = Eigen::VectorXd(len);
    const double create = params.lambda / params.mu;
    for (Eigen::Index n = 0; n < len; ++n) sol.scores[n] = create * phi.tail(n);
    sol.r_total = create * phi.moment1();
    sol.score_mass = params.lambda *
                     (phi.moment2_factorial() + 2.0 * phi.moment1()) /
                     (2.0 * params.mu);
    sol.residuals["r1_identity"] =
        std::abs(sol.scores[0] - params.lambda / params.mu);
  } else if (theta.is_unit_jump()) {
    const ConsistencyRoot root = solve_consistency(params, policy, phi, opt.tol);
    if (root.found)
      sol = assemble_weighted(params, policy, theta, phi, root.x, root.K, opt);
    else
      sol = condensed_solution(params, policy, phi, opt);
  } else {
    const ConsistencyRoot root = consistency_general(
        params, policy, theta, phi, opt.general_horizon, opt.tol);
    if (!root.found)
      throw RegimeError(
          "no finite weighted mass exists for these parameters (largest "
          "certified series value " +
          std::to_string(root.bound) +
          "); the condensed closure covers the unit score increment only");
    sol = assemble_weighted(params, policy, theta, phi, root.x, root.K, opt);
  }

  // Exit identities.
  const double r1_residual =
      std::abs(sol.scores[0] - params.lambda / params.mu);
  if (r1_residual > 1e-10)
    throw SolverError("stationary r_1 deviates from lambda/mu by " +
                      std::to_string(r1_residual));
  const double identity =
      std::abs(params.mu * sol.r_total -
               params.alpha * sol.pi_bar * theta.moment1() -
               params.lambda * phi.moment1());
  sol.residuals["r_total_identity"] = identity;
  if (std::isfinite(sol.r_total) &&
      identity > 1e-8 * std::max(1.0, sol.r_total))
    throw SolverError("stationary r(1) identity residual " +
                      std::to_string(identity));
  return sol;
}

}  // namespace herding::stationary
