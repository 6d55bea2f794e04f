#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <vector>

#include "herding/distributions.hpp"
#include "herding/meanfield.hpp"
#include "herding/params.hpp"
#include "herding/policies.hpp"

namespace herding::sim {

struct Stats {
  std::uint64_t creations = 0;
  std::uint64_t decays = 0;
  std::uint64_t deaths = 0;
  std::uint64_t visits = 0;
  std::uint64_t null_visits = 0;  // visit clock fired on an empty system
  std::uint64_t overflows = 0;    // POIs pushed past the score cap
};

// Finite-N configuration of the game: POI counts by score, event
// statistics and the owned RNG. One run owns its state; independent runs
// with distinct seeds may execute concurrently.
class SimState {
 public:
  SimState(std::int64_t players, std::uint64_t seed,
           int score_cap = 1'000'000);

  std::int64_t players() const { return players_; }
  double time() const { return t_; }
  std::int64_t total_count() const { return total_count_; }
  std::int64_t total_score() const { return total_score_; }
  std::int64_t escaped_score() const { return escaped_score_; }
  std::int64_t count_at(int score) const;
  int top_score() const { return top_; }
  int score_cap() const { return score_cap_; }
  const Stats& stats() const { return stats_; }
  std::uint64_t seed() const { return seed_; }

  // sum over occupied scores of score * count, recomputed from scratch
  // (conservation checks).
  std::int64_t recompute_total_score() const;

 private:
  friend struct Stepper;

  std::int64_t players_;
  std::uint64_t seed_;
  int score_cap_;
  double t_ = 0.0;
  std::int64_t total_count_ = 0;
  std::int64_t total_score_ = 0;
  std::int64_t escaped_score_ = 0;
  int top_ = 0;
  Stats stats_;
  std::mt19937_64 rng_;

  std::vector<std::int64_t> counts_;        // dense by score
  std::vector<std::int64_t> count_tree_;    // Fenwick over counts
  std::vector<double> weight_tree_;         // Fenwick over a_s * n_s
};

enum class Event { Created, Decayed, Died, Visited, NullVisit, Absorbed };

struct StepResult {
  Event event = Event::Absorbed;
  double dt = 0.0;  // +inf when absorbed
  int score = 0;    // score acted upon (created-at / decayed-from / visited)
};

// One exact jump of the Markov chain: exponential holding time at the
// total rate lambda N + mu sum n_i + alpha N, event drawn proportionally.
// The visit channel keeps its full rate and thins on an empty system.
// With lambda = 0 and no POIs the state is absorbing and dt = +inf.
StepResult step(SimState& state, const ModelParams& params,
                const PolicySpec& policy, const ProbSeq& theta,
                const ProbSeq& phi);

struct SampleGrid {
  double t_end = 100.0;
  Eigen::Index samples = 101;
  Eigen::Index prefix = 12;  // exported scores r_1..r_prefix
};

struct EmpiricalTrajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd prefix;       // normalized counts n_s/N, one row per sample
  Eigen::VectorXd mass;         // total_count / N
  Eigen::VectorXd mean_score;   // total_score / total_count (0 when empty)
  Eigen::VectorXd top_score;
  Eigen::VectorXd overflow;     // cumulative overflow count
  Eigen::VectorXd above_prefix; // mass with score > prefix, per player
  Stats stats;
  std::uint64_t seed = 0;
  std::int64_t players = 0;
};

EmpiricalTrajectory simulate(std::int64_t players, const ModelParams& params,
                             const PolicySpec& policy, const ProbSeq& theta,
                             const ProbSeq& phi, const SampleGrid& grid,
                             std::uint64_t seed, int score_cap = 1'000'000);

struct ComparisonReport {
  Eigen::VectorXd times;
  Eigen::VectorXd sup_err;   // over the exported prefix
  Eigen::VectorXd mass_err;
  double max_sup_err = 0.0;
  double max_mass_err = 0.0;
  // Herding indicator at the final sample: empirical mass above the
  // prefix threshold against the mean-field tail (escaped mass listed
  // separately).
  double empirical_above = 0.0;
  double meanfield_above = 0.0;
  double meanfield_escaped = 0.0;
  bool herding_flag = false;
};

// Pointwise comparison on matching sample grids.
ComparisonReport compare_to_meanfield(const EmpiricalTrajectory& empirical,
                                      const meanfield::Trajectory& limit);

}  // namespace herding::sim
