#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace herding {

// POI-selection rule. Two families:
//
//  * pointwise-weight policies select score i with probability
//    a_i r_i / (K + delta), K = sum_j a_j r_j, where the weights a_i are
//    positive, non-decreasing and (for the bounded variants) scaled so
//    lim a_i = 1. `delta` is the score mass that has escaped past the
//    tracked range; it competes for visits with asymptotic weight 1.
//
//  * cumulative policies select through a convex function f of the
//    cumulative score distribution: pi_i = f(P_i) - f(P_{i-1}) with
//    P_i = (r_1 + ... + r_i) / r(1).
//
// Immutable after construction; all evaluation functions are pure.
class PolicySpec {
 public:
  enum class Kind {
    Uniform,          // a_i = 1
    ScoreLinear,      // a_i = i, unbounded (known unstable)
    RatioPower,       // a_i = (i/(i+1))^gamma, gamma > 0
    WeightTable,      // explicit a_1..a_E plus a tail rule
    AsymptoticClass,  // a_i = 1 - gamma i^-nu + O(i^-nu-1); classification only
    CumulativeF,      // convex f on [0,1], f(0)=0, f(1)=1, 1 < f'(1) < inf
  };

  // How a WeightTable continues past its last entry.
  enum class TableTail { Clamp, RatioPower };

  static PolicySpec uniform();
  static PolicySpec score_linear();
  static PolicySpec ratio_power(double gamma);
  static PolicySpec asymptotic_class(double gamma, double nu);
  // Table entries must be positive and non-decreasing. With the default
  // Clamp tail the table is rescaled so its last entry (the weight limit)
  // is 1; with a RatioPower tail the entries must already lie on the
  // lim a_i = 1 scale, i.e. not exceed the first tail weight.
  static PolicySpec weight_table(std::vector<double> weights,
                                 TableTail tail = TableTail::Clamp,
                                 double tail_gamma = 0.0);
  static PolicySpec cumulative_power(double exponent);  // f(x) = x^c, c > 1
  // Generic cumulative policy; f_prime is optional (finite differences are
  // used for diagnostics when absent). f is validated on a grid: convex,
  // f(0)=0, f(1)=1, non-decreasing, f'(1) > 1.
  static PolicySpec cumulative(std::function<double(double)> f,
                               double f_prime_one,
                               std::function<double(double)> f_prime = {});

  Kind kind() const { return kind_; }

  // True for the variants with pointwise weights a_i.
  bool has_pointwise_weights() const {
    return kind_ == Kind::Uniform || kind_ == Kind::ScoreLinear ||
           kind_ == Kind::RatioPower || kind_ == Kind::WeightTable;
  }
  bool is_cumulative() const { return kind_ == Kind::CumulativeF; }

  // True when the weights grow without bound (never ergodic).
  bool unbounded_weights() const { return kind_ == Kind::ScoreLinear; }

  // a_i for i >= 1. Unsupported for CumulativeF (weights are
  // state-dependent there) and AsymptoticClass (only the exponents are
  // specified).
  double weight(Eigen::Index i) const;

  // A_n = prod_{i=1..n} a_i, with A_0 = 1 (empty product).
  double cum_weight_product(Eigen::Index n) const;

  // A_0..A_n as a vector (batch form of cum_weight_product).
  Eigen::VectorXd cum_weight_products(Eigen::Index n_max) const;

  // Asymptotic model of A_n used by the series machinery: beyond
  // `from`, A_n = scale / (n+1)^gamma exactly (PowerLaw) or
  // A_n = scale (ConstantLimit).
  struct ProductTail {
    enum class Kind { ConstantLimit, PowerLaw, Unbounded, Unspecified } kind;
    double gamma = 0.0;
    double scale = 1.0;
    Eigen::Index from = 0;
  };
  ProductTail product_tail() const;

  // Cumulative-family accessors.
  double f(double x) const;
  double f_prime_one() const { return f_prime_one_; }
  // Derivative of f (analytic for built-ins, central difference otherwise);
  // used only in diagnostics.
  double f_derivative(double x) const;
  // Inverse of f on [0,1] (closed form for the power built-in, bisection
  // otherwise); used by the stochastic simulator.
  double f_inverse(double y) const;

  double gamma() const { return gamma_; }
  double nu() const { return nu_; }
  const std::vector<double>& table() const { return table_; }

 private:
  PolicySpec() = default;

  Kind kind_ = Kind::Uniform;
  double gamma_ = 0.0;
  double nu_ = 0.0;
  std::vector<double> table_;
  std::vector<double> table_products_;  // A_1..A_E for WeightTable
  TableTail table_tail_ = TableTail::Clamp;
  std::function<double(double)> f_;
  std::function<double(double)> f_prime_;
  double f_prime_one_ = 0.0;
  double cum_exponent_ = 0.0;  // set for the power built-in
};

// Selection probabilities on a score profile r (index 0 <-> score 1).
// `escaped_mass` is the mass past the tracked range; it must be 0 for
// cumulative policies. An all-zero profile yields an all-zero vector (no
// POI to select). For weight variants the entries sum to K/(K+delta).
Eigen::VectorXd policy_probs(const PolicySpec& policy,
                             const Eigen::Ref<const Eigen::VectorXd>& r,
                             double escaped_mass = 0.0);

// The state-dependent weights a_i = r(1)/(f'(1) r_i) [f(P_i)-f(P_{i-1})]
// of a cumulative policy on a profile, together with K = r(1)/f'(1).
// Empty bins take the right-continuous limit f'(P_i)/f'(1).
struct EffectiveWeights {
  Eigen::VectorXd weights;
  double K = 0.0;
};
EffectiveWeights effective_weights_cumulative(
    const PolicySpec& policy, const Eigen::Ref<const Eigen::VectorXd>& r);

}  // namespace herding
