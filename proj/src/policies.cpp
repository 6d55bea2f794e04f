#include "herding/policies.hpp"

#include <cmath>
#include <limits>

#include "herding/errors.hpp"

namespace herding {

namespace {

// Grid check that f is a valid cumulative-policy functional: f(0)=0,
// f(1)=1, non-decreasing and strictly convex (secant slopes increasing).
void validate_cumulative(const std::function<double(double)>& f,
                         double f_prime_one) {
  constexpr int kGrid = 64;
  if (std::abs(f(0.0)) > 1e-12) throw ConfigError("cumulative f(0) must be 0");
  if (std::abs(f(1.0) - 1.0) > 1e-12)
    throw ConfigError("cumulative f(1) must be 1");
  if (!(f_prime_one > 1.0) || !std::isfinite(f_prime_one))
    throw ConfigError("cumulative policy requires 1 < f'(1) < inf");
  double prev_value = 0.0;
  double prev_slope = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= kGrid; ++k) {
    const double x = static_cast<double>(k) / kGrid;
    const double value = f(x);
    if (!(std::isfinite(value)) || value < -1e-12)
      throw ConfigError("cumulative f must be finite and non-negative");
    if (value < prev_value - 1e-12)
      throw ConfigError("cumulative f must be non-decreasing");
    const double slope = (value - prev_value) * kGrid;
    if (slope < prev_slope - 1e-9)
      throw ConfigError("cumulative f fails the convexity grid check");
    prev_slope = slope;
    prev_value = value;
  }
}

}  // namespace

PolicySpec PolicySpec::uniform() {
  PolicySpec p;
  p.kind_ = Kind::Uniform;
  return p;
}

PolicySpec PolicySpec::score_linear() {
  PolicySpec p;
  p.kind_ = Kind::ScoreLinear;
  return p;
}

PolicySpec PolicySpec::ratio_power(double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("ratio_power requires gamma > 0");
  PolicySpec p;
  p.kind_ = Kind::RatioPower;
  p.gamma_ = gamma;
  return p;
}

PolicySpec PolicySpec::asymptotic_class(double gamma, double nu) {
  if (!(gamma > 0.0) || !(nu > 0.0))
    throw ConfigError("asymptotic_class requires gamma > 0 and nu > 0");
  PolicySpec p;
  p.kind_ = Kind::AsymptoticClass;
  p.gamma_ = gamma;
  p.nu_ = nu;
  return p;
}

PolicySpec PolicySpec::weight_table(std::vector<double> weights,
                                    TableTail tail, double tail_gamma) {
  if (weights.empty()) throw ConfigError("weight table must be non-empty");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0))
      throw ConfigError("weight table entries must be positive");
    if (i > 0 && weights[i] < weights[i - 1])
      throw ConfigError("weight table entries must be non-decreasing");
  }
  PolicySpec p;
  p.kind_ = Kind::WeightTable;
  p.table_tail_ = tail;
  if (tail == TableTail::Clamp) {
    // Store on the lim a_i = 1 scale: the clamped tail is the limit.
    const double limit = weights.back();
    for (double& w : weights) w /= limit;
  } else {
    if (!(tail_gamma > 0.0))
      throw ConfigError("ratio_power table tail requires gamma > 0");
    p.gamma_ = tail_gamma;
    const auto e = static_cast<double>(weights.size());
    const double first_tail = std::pow((e + 1.0) / (e + 2.0), tail_gamma);
    if (weights.back() > first_tail + 1e-12)
      throw ConfigError(
          "weight table last entry exceeds its ratio_power tail; entries must "
          "be on the lim a_i = 1 scale");
  }
  p.table_ = std::move(weights);
  p.table_products_.resize(p.table_.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < p.table_.size(); ++i) {
    prod *= p.table_[i];
    p.table_products_[i] = prod;
  }
  return p;
}

PolicySpec PolicySpec::cumulative_power(double exponent) {
  if (!(exponent > 1.0))
    throw ConfigError("cumulative_power requires exponent > 1");
  PolicySpec p;
  p.kind_ = Kind::CumulativeF;
  p.cum_exponent_ = exponent;
  p.f_ = [exponent](double x) { return std::pow(x, exponent); };
  p.f_prime_ = [exponent](double x) {
    return exponent * std::pow(x, exponent - 1.0);
  };
  p.f_prime_one_ = exponent;
  validate_cumulative(p.f_, p.f_prime_one_);
  return p;
}

PolicySpec PolicySpec::cumulative(std::function<double(double)> f,
                                  double f_prime_one,
                                  std::function<double(double)> f_prime) {
  if (!f) throw ConfigError("cumulative policy requires a function handle");
  validate_cumulative(f, f_prime_one);
  PolicySpec p;
  p.kind_ = Kind::CumulativeF;
  p.f_ = std::move(f);
  p.f_prime_ = std::move(f_prime);
  p.f_prime_one_ = f_prime_one;
  return p;
}

double PolicySpec::weight(Eigen::Index i) const {
  if (i < 1) throw ConfigError("weights are indexed by scores >= 1");
  switch (kind_) {
    case Kind::Uniform:
      return 1.0;
    case Kind::ScoreLinear:
      return static_cast<double>(i);
    case Kind::RatioPower:
      return std::pow(static_cast<double>(i) / static_cast<double>(i + 1),
                      gamma_);
    case Kind::WeightTable:
      if (i <= static_cast<Eigen::Index>(table_.size()))
        return table_[static_cast<std::size_t>(i - 1)];
      if (table_tail_ == TableTail::Clamp) return table_.back();
      return std::pow(static_cast<double>(i) / static_cast<double>(i + 1),
                      gamma_);
    case Kind::AsymptoticClass:
      throw ConfigError(
          "asymptotic_class specifies exponents only; pointwise weights are "
          "not available");
    case Kind::CumulativeF:
      throw ConfigError(
          "cumulative policies have state-dependent weights; use "
          "effective_weights_cumulative");
  }
  return 0.0;  // unreachable
}

double PolicySpec::cum_weight_product(Eigen::Index n) const {
  if (n < 0) throw ConfigError("cum_weight_product requires n >= 0");
  if (n == 0) return 1.0;
  switch (kind_) {
    case Kind::Uniform:
      return 1.0;
    case Kind::ScoreLinear: {
      double prod = 1.0;
      for (Eigen::Index i = 1; i <= n; ++i) prod *= static_cast<double>(i);
      return prod;  // may overflow to inf for large n, by design
    }
    case Kind::RatioPower:
      // Telescoping product: A_n = 1/(n+1)^gamma exactly.
      return std::pow(static_cast<double>(n + 1), -gamma_);
    case Kind::WeightTable: {
      const auto e = static_cast<Eigen::Index>(table_.size());
      if (n <= e) return table_products_[static_cast<std::size_t>(n - 1)];
      if (table_tail_ == TableTail::Clamp)
        return table_products_.back();  // tail weight is 1 after scaling
      // Tail product telescopes from the table end E: ((E+1)/(n+1))^gamma.
      return table_products_.back() *
             std::pow(static_cast<double>(e + 1) / static_cast<double>(n + 1),
                      gamma_);
    }
    default:
      weight(1);  // raises the appropriate error
      return 0.0;
  }
}

Eigen::VectorXd PolicySpec::cum_weight_products(Eigen::Index n_max) const {
  Eigen::VectorXd out(n_max + 1);
  switch (kind_) {
    case Kind::Uniform:
      out.setOnes();
      return out;
    case Kind::RatioPower:
      out = Eigen::ArrayXd::LinSpaced(n_max + 1, 1.0,
                                      static_cast<double>(n_max + 1))
                .pow(-gamma_)
                .matrix();
      return out;
    default: {
      out[0] = 1.0;
      for (Eigen::Index n = 1; n <= n_max; ++n) out[n] = out[n - 1] * weight(n);
      return out;
    }
  }
}

PolicySpec::ProductTail PolicySpec::product_tail() const {
  switch (kind_) {
    case Kind::Uniform:
      return {ProductTail::Kind::ConstantLimit, 0.0, 1.0, 0};
    case Kind::ScoreLinear:
      return {ProductTail::Kind::Unbounded, 0.0, 0.0, 0};
    case Kind::RatioPower:
      return {ProductTail::Kind::PowerLaw, gamma_, 1.0, 0};
    case Kind::WeightTable: {
      const auto e = static_cast<Eigen::Index>(table_.size());
      if (table_tail_ == TableTail::Clamp)
        return {ProductTail::Kind::ConstantLimit, 0.0, table_products_.back(),
                e};
      // A_n = A_E (E+1)^gamma / (n+1)^gamma for n >= E.
      return {ProductTail::Kind::PowerLaw, gamma_,
              table_products_.back() *
                  std::pow(static_cast<double>(e + 1), gamma_),
              e};
    }
    default:
      return {ProductTail::Kind::Unspecified, 0.0, 0.0, 0};
  }
}

double PolicySpec::f(double x) const {
  if (kind_ != Kind::CumulativeF)
    throw ConfigError("f is defined for cumulative policies only");
  return f_(x);
}

double PolicySpec::f_derivative(double x) const {
  if (kind_ != Kind::CumulativeF)
    throw ConfigError("f is defined for cumulative policies only");
  if (f_prime_) return f_prime_(x);
  const double h = 1e-7;
  const double lo = std::max(0.0, x - h);
  const double hi = std::min(1.0, x + h);
  return (f_(hi) - f_(lo)) / (hi - lo);
}

double PolicySpec::f_inverse(double y) const {
  if (kind_ != Kind::CumulativeF)
    throw ConfigError("f is defined for cumulative policies only");
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  if (cum_exponent_ > 0.0) return std::pow(y, 1.0 / cum_exponent_);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f_(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Eigen::VectorXd policy_probs(const PolicySpec& policy,
                             const Eigen::Ref<const Eigen::VectorXd>& r,
                             double escaped_mass) {
  if (escaped_mass < 0.0) throw ConfigError("escaped mass must be >= 0");
  if ((r.array() < 0.0).any())
    throw ConfigError("score profile entries must be non-negative");
  const Eigen::Index n = r.size();
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(n);
  if (r.isZero(0.0)) return probs;

  if (policy.is_cumulative()) {
    if (escaped_mass > 0.0)
      throw RegimeError(
          "cumulative policies are undefined on a profile with escaped mass");
    const double total = r.sum();
    double prev_p = 0.0;
    double prev_f = 0.0;
    double cum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      cum += r[i];
      const double p = std::min(cum / total, 1.0);
      const double fp = (p == prev_p) ? prev_f : policy.f(p);
      probs[i] = fp - prev_f;
      prev_p = p;
      prev_f = fp;
    }
    return probs;
  }

  double weighted = escaped_mass;  // escaped mass carries the limit weight 1
  for (Eigen::Index i = 0; i < n; ++i)
    if (r[i] > 0.0) weighted += policy.weight(i + 1) * r[i];
  if (!(weighted > 0.0)) return probs;
  for (Eigen::Index i = 0; i < n; ++i)
    if (r[i] > 0.0) probs[i] = policy.weight(i + 1) * r[i] / weighted;
  return probs;
}

EffectiveWeights effective_weights_cumulative(
    const PolicySpec& policy, const Eigen::Ref<const Eigen::VectorXd>& r) {
  if (!policy.is_cumulative())
    throw ConfigError("effective weights apply to cumulative policies only");
  const double total = r.sum();
  if (!(total > 0.0))
    throw ConfigError("effective weights require positive total mass");

  const double fp1 = policy.f_prime_one();
  EffectiveWeights out;
  out.K = total / fp1;
  out.weights.resize(r.size());
  double cum = 0.0;
  double prev_f = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    cum += r[i];
    const double p = std::min(cum / total, 1.0);
    if (r[i] > 0.0) {
      const double fp = policy.f(p);
      out.weights[i] = total / (fp1 * r[i]) * (fp - prev_f);
      prev_f = fp;
    } else {
      // Empty bin: the convexity sandwich pins the right-continuous limit.
      out.weights[i] = policy.f_derivative(p) / fp1;
    }
  }
  return out;
}

}  // namespace herding
