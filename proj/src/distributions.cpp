#include "herding/distributions.hpp"

#include <cmath>

#include "herding/errors.hpp"

namespace herding {

ProbSeq ProbSeq::from_map(const std::map<int, double>& masses,
                          bool renormalize) {
  if (masses.empty()) throw ConfigError("distribution has empty support");

  int max_score = 0;
  double sum = 0.0;
  for (const auto& [score, mass] : masses) {
    if (score < 1)
      throw ConfigError("distribution support must start at score 1, got " +
                        std::to_string(score));
    if (!(mass > 0.0))
      throw ConfigError("distribution mass at score " + std::to_string(score) +
                        " must be positive");
    if (!renormalize && mass > 1.0 + kSumTolerance)
      throw ConfigError("distribution mass at score " + std::to_string(score) +
                        " exceeds 1");
    max_score = std::max(max_score, score);
    sum += mass;
  }
  if (!renormalize && std::abs(sum - 1.0) > kSumTolerance)
    throw ConfigError("distribution masses sum to " + std::to_string(sum) +
                      ", expected 1 (set renormalize to rescale)");

  ProbSeq d;
  d.probs_ = Eigen::VectorXd::Zero(max_score + 1);
  for (const auto& [score, mass] : masses) d.probs_[score] = mass / sum;

  d.tails_ = Eigen::VectorXd::Zero(max_score);
  double tail = 0.0;
  for (Eigen::Index k = max_score; k >= 1; --k) {
    tail += d.probs_[k];
    d.tails_[k - 1] = tail;
  }
  d.tails_[0] = 1.0;  // exact by normalization

  d.moment1_ = 0.0;
  d.moment2_factorial_ = 0.0;
  for (Eigen::Index k = 1; k <= max_score; ++k) {
    d.moment1_ += static_cast<double>(k) * d.probs_[k];
    d.moment2_factorial_ += static_cast<double>(k) * (k - 1.0) * d.probs_[k];
  }
  return d;
}

ProbSeq ProbSeq::point_mass(int score) {
  return from_map({{score, 1.0}});
}

double ProbSeq::gf(double z) const {
  if (!(z >= 0.0 && z <= 1.0))
    throw ConfigError("generating function argument must lie in [0, 1]");
  // Horner over the dense coefficients.
  double acc = 0.0;
  for (Eigen::Index k = max_score(); k >= 1; --k) acc = acc * z + probs_[k];
  return acc * z;
}

std::map<int, double> ProbSeq::as_map() const {
  std::map<int, double> out;
  for (Eigen::Index k = 1; k <= max_score(); ++k)
    if (probs_[k] > 0.0) out[static_cast<int>(k)] = probs_[k];
  return out;
}

}  // namespace herding
