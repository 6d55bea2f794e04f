#pragma once

#include <Eigen/Core>
#include <map>

namespace herding {

// A probability distribution on positive integer scores with finite support.
// Holds the score-increment law theta and the initial-score law phi, and
// exposes the derived quantities the solvers consume: the generating
// function, the tail sums Theta_n = sum_{k>n} p_k (the power-series
// coefficients of (1-gf(z))/(1-z)) and the first two factorial moments.
//
// Immutable after construction; safe to share across threads.
class ProbSeq {
 public:
  // Builds from a {score -> mass} map. Keys must be >= 1 and masses in
  // (0, 1]; the total mass must equal 1 within kSumTolerance unless
  // `renormalize` is set, in which case the masses are rescaled explicitly.
  static ProbSeq from_map(const std::map<int, double>& masses,
                          bool renormalize = false);

  // Point mass at `score`, i.e. gf(z) = z^score.
  static ProbSeq point_mass(int score);

  static constexpr double kSumTolerance = 1e-12;

  // Mass at score k (0 outside the support).
  double mass(Eigen::Index k) const {
    return (k >= 1 && k <= max_score()) ? probs_[k] : 0.0;
  }

  // Largest score carrying mass.
  Eigen::Index max_score() const { return probs_.size() - 1; }

  // Generating function sum_k p_k z^k for z in [0, 1].
  double gf(double z) const;

  // Tail sum beyond n: tail(0) = 1, tail(n) = 0 for n >= max_score().
  double tail(Eigen::Index n) const {
    if (n < 0) return 1.0;
    return n < tails_.size() ? tails_[n] : 0.0;
  }

  // First moment sum_k k p_k, equal to sum_n tail(n).
  double moment1() const { return moment1_; }

  // Second factorial moment sum_k k (k-1) p_k.
  double moment2_factorial() const { return moment2_factorial_; }

  // True when the distribution is the unit jump gf(z) = z.
  bool is_unit_jump() const { return max_score() == 1; }

  // Dense mass vector indexed by score, entry 0 unused and zero.
  const Eigen::VectorXd& dense() const { return probs_; }

  // Tail sums tail(0)..tail(max_score()-1) as a vector.
  const Eigen::VectorXd& tails() const { return tails_; }

  // The support as a {score -> mass} map (for config echo).
  std::map<int, double> as_map() const;

 private:
  ProbSeq() = default;

  Eigen::VectorXd probs_;  // probs_[k] = mass at score k, k = 1..max
  Eigen::VectorXd tails_;  // tails_[n] = sum_{k>n} probs_[k], n = 0..max-1
  double moment1_ = 0.0;
  double moment2_factorial_ = 0.0;
};

}  // namespace herding
