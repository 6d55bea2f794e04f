#include "herding/simulator.hpp"

#include <cmath>
#include <limits>

#include "herding/errors.hpp"

namespace herding::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fenwick primitives over 1-based score indices.
template <typename T>
void tree_add(std::vector<T>& tree, int i, T delta) {
  for (; i < static_cast<int>(tree.size()); i += i & -i) tree[i] += delta;
}

template <typename T>
T tree_prefix(const std::vector<T>& tree, int i) {
  T sum = 0;
  for (; i > 0; i -= i & -i) sum += tree[i];
  return sum;
}

// Smallest index whose prefix sum reaches `target` (> 0).
template <typename T>
int tree_lower_bound(const std::vector<T>& tree, T target) {
  int pos = 0;
  int mask = 1;
  while (2 * mask < static_cast<int>(tree.size())) mask *= 2;
  for (; mask > 0; mask /= 2) {
    const int next = pos + mask;
    if (next < static_cast<int>(tree.size()) && tree[next] < target) {
      pos = next;
      target -= tree[next];
    }
  }
  return pos + 1;
}

}  // namespace

SimState::SimState(std::int64_t players, std::uint64_t seed, int score_cap)
    : players_(players),
      seed_(seed),
      score_cap_(score_cap),
      rng_(seed),
      counts_(static_cast<std::size_t>(score_cap) + 1, 0),
      count_tree_(static_cast<std::size_t>(score_cap) + 1, 0),
      weight_tree_(static_cast<std::size_t>(score_cap) + 1, 0.0) {
  if (players < 1) throw ConfigError("player count must be >= 1");
  if (score_cap < 2) throw ConfigError("score cap must be >= 2");
}

std::int64_t SimState::count_at(int score) const {
  if (score < 1 || score > score_cap_) return 0;
  return counts_[static_cast<std::size_t>(score)];
}

std::int64_t SimState::recompute_total_score() const {
  std::int64_t sum = 0;
  for (int s = top_; s >= 1; --s)
    sum += counts_[static_cast<std::size_t>(s)] * s;
  return sum;
}

struct Stepper {
  SimState& st;
  const ModelParams& params;
  const PolicySpec& policy;
  const ProbSeq& theta;
  const ProbSeq& phi;

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(st.rng_);
  }

  int draw_score(const ProbSeq& dist) {
    const double u = uniform();
    double acc = 0.0;
    for (Eigen::Index k = 1; k <= dist.max_score(); ++k) {
      acc += dist.mass(k);
      if (u <= acc) return static_cast<int>(k);
    }
    return static_cast<int>(dist.max_score());
  }

  void insert(int score) {
    st.counts_[static_cast<std::size_t>(score)] += 1;
    tree_add<std::int64_t>(st.count_tree_, score, 1);
    if (policy.has_pointwise_weights())
      tree_add(st.weight_tree_, score, policy.weight(score));
    st.total_count_ += 1;
    st.total_score_ += score;
    st.top_ = std::max(st.top_, score);
  }

  void remove(int score) {
    auto& bin = st.counts_[static_cast<std::size_t>(score)];
    if (bin <= 0) throw SolverError("internal: removing from an empty bin");
    bin -= 1;
    tree_add<std::int64_t>(st.count_tree_, score, -1);
    if (policy.has_pointwise_weights())
      tree_add(st.weight_tree_, score, -policy.weight(score));
    st.total_count_ -= 1;
    st.total_score_ -= score;
    while (st.top_ >= 1 && st.counts_[static_cast<std::size_t>(st.top_)] == 0)
      st.top_ -= 1;
  }

  int select_visited() {
    if (policy.is_cumulative()) {
      // P(selected <= s) = f(prefix(s)/total); invert through f.
      const double target =
          policy.f_inverse(uniform()) * static_cast<double>(st.total_count_);
      const auto want = static_cast<std::int64_t>(std::ceil(target));
      return tree_lower_bound(st.count_tree_,
                              std::max<std::int64_t>(want, 1));
    }
    const double total = tree_prefix(st.weight_tree_, st.score_cap_);
    const double target = std::max(uniform() * total, 1e-300);
    const int found = tree_lower_bound(st.weight_tree_, target);
    // Rounding drift in the tree can overshoot the last occupied bin.
    if (found > st.top_ || st.counts_[static_cast<std::size_t>(found)] == 0)
      return st.top_;
    return found;
  }

  StepResult run() {
    const auto n_players = static_cast<double>(st.players_);
    const double create_rate = params.lambda * n_players;
    const double decay_rate = params.mu * static_cast<double>(st.total_count_);
    const double visit_rate = params.alpha * n_players;

    if (st.total_count_ == 0 && create_rate == 0.0) {
      // Only null visits remain: the empty state is absorbing.
      return {Event::Absorbed, kInf, 0};
    }
    const double total_rate = create_rate + decay_rate + visit_rate;
    const double dt = -std::log1p(-uniform()) / total_rate;
    st.t_ += dt;

    const double pick = uniform() * total_rate;
    if (pick < create_rate) {
      const int score = draw_score(phi);
      insert(score);
      st.stats_.creations += 1;
      return {Event::Created, dt, score};
    }
    if (pick < create_rate + decay_rate) {
      // The channel offset doubles as the uniform POI index.
      const auto idx = static_cast<std::int64_t>(
          std::min((pick - create_rate) / params.mu,
                   static_cast<double>(st.total_count_ - 1)));
      const int score = tree_lower_bound(st.count_tree_, idx + 1);
      remove(score);
      st.stats_.decays += 1;
      if (score == 1) {
        st.stats_.deaths += 1;
        return {Event::Died, dt, score};
      }
      insert(score - 1);
      return {Event::Decayed, dt, score};
    }
    if (st.total_count_ == 0) {
      st.stats_.null_visits += 1;
      return {Event::NullVisit, dt, 0};
    }
    const int score = select_visited();
    const int jump = draw_score(theta);
    st.stats_.visits += 1;
    remove(score);
    const std::int64_t landed = static_cast<std::int64_t>(score) + jump;
    if (landed > st.score_cap_) {
      st.stats_.overflows += 1;
      st.escaped_score_ += landed;
    } else {
      insert(static_cast<int>(landed));
    }
    return {Event::Visited, dt, score};
  }
};

StepResult step(SimState& state, const ModelParams& params,
                const PolicySpec& policy, const ProbSeq& theta,
                const ProbSeq& phi) {
  params.validate();
  Stepper stepper{state, params, policy, theta, phi};
  return stepper.run();
}

namespace {

struct Snapshot {
  std::vector<std::int64_t> prefix;
  std::int64_t total_count = 0;
  std::int64_t total_score = 0;
  int top = 0;
  Stats stats;
};

Snapshot take_snapshot(const SimState& state, Eigen::Index prefix_len) {
  Snapshot snap;
  snap.prefix.resize(static_cast<std::size_t>(prefix_len));
  for (Eigen::Index p = 0; p < prefix_len; ++p)
    snap.prefix[static_cast<std::size_t>(p)] =
        state.count_at(static_cast<int>(p) + 1);
  snap.total_count = state.total_count();
  snap.total_score = state.total_score();
  snap.top = state.top_score();
  snap.stats = state.stats();
  return snap;
}

}  // namespace

EmpiricalTrajectory simulate(std::int64_t players, const ModelParams& params,
                             const PolicySpec& policy, const ProbSeq& theta,
                             const ProbSeq& phi, const SampleGrid& grid,
                             std::uint64_t seed, int score_cap) {
  params.validate();
  if (!(grid.t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (grid.samples < 2) throw ConfigError("need at least two samples");
  if (grid.prefix < 1) throw ConfigError("prefix length must be >= 1");

  SimState state(players, seed, score_cap);
  EmpiricalTrajectory out;
  out.times = Eigen::VectorXd::LinSpaced(grid.samples, 0.0, grid.t_end);
  out.prefix.resize(grid.samples, grid.prefix);
  out.mass.resize(grid.samples);
  out.mean_score.resize(grid.samples);
  out.top_score.resize(grid.samples);
  out.overflow.resize(grid.samples);
  out.above_prefix.resize(grid.samples);
  out.seed = seed;
  out.players = players;

  const auto n_players = static_cast<double>(players);
  auto record = [&](Eigen::Index row, const Snapshot& snap) {
    std::int64_t in_prefix = 0;
    for (Eigen::Index p = 0; p < grid.prefix; ++p) {
      const std::int64_t c = snap.prefix[static_cast<std::size_t>(p)];
      out.prefix(row, p) = static_cast<double>(c) / n_players;
      in_prefix += c;
    }
    out.mass[row] = static_cast<double>(snap.total_count) / n_players;
    out.mean_score[row] = snap.total_count > 0
                              ? static_cast<double>(snap.total_score) /
                                    static_cast<double>(snap.total_count)
                              : 0.0;
    out.top_score[row] = snap.top;
    out.overflow[row] = static_cast<double>(snap.stats.overflows);
    out.above_prefix[row] =
        static_cast<double>(snap.total_count - in_prefix) / n_players;
  };

  Snapshot snap = take_snapshot(state, grid.prefix);
  record(0, snap);
  Eigen::Index row = 1;
  while (row < grid.samples) {
    snap = take_snapshot(state, grid.prefix);
    const double before = state.time();
    const StepResult result = step(state, params, policy, theta, phi);
    const double after = std::isinf(result.dt) ? kInf : state.time();
    // The chain is right-continuous: between events the state is the
    // post-event state of the last jump, held in the snapshot. A sample
    // landing exactly on an event time takes the pre-event state.
    while (row < grid.samples && out.times[row] > before &&
           out.times[row] <= after) {
      record(row, snap);
      ++row;
    }
    if (std::isinf(result.dt)) {
      for (; row < grid.samples; ++row) record(row, snap);
      break;
    }
  }
  out.stats = snap.stats;  // statistics up to the last event before t_end
  return out;
}

ComparisonReport compare_to_meanfield(const EmpiricalTrajectory& empirical,
                                      const meanfield::Trajectory& limit) {
  if (empirical.times.size() != limit.times.size() ||
      (empirical.times - limit.times).cwiseAbs().maxCoeff() > 1e-9)
    throw ConfigError("sample grids do not match");

  const Eigen::Index samples = empirical.times.size();
  const Eigen::Index prefix =
      std::min(empirical.prefix.cols(), limit.scores.cols());

  ComparisonReport report;
  report.times = empirical.times;
  report.sup_err.resize(samples);
  report.mass_err.resize(samples);
  for (Eigen::Index row = 0; row < samples; ++row) {
    report.sup_err[row] = (empirical.prefix.row(row).head(prefix) -
                           limit.scores.row(row).head(prefix))
                              .cwiseAbs()
                              .maxCoeff();
    report.mass_err[row] =
        std::abs(empirical.mass[row] - limit.scores.row(row).sum());
  }
  report.max_sup_err = report.sup_err.maxCoeff();
  report.max_mass_err = report.mass_err.maxCoeff();

  const Eigen::Index last = samples - 1;
  report.empirical_above = empirical.above_prefix[last];
  report.meanfield_above =
      limit.scores.row(last).sum() - limit.scores.row(last).head(prefix).sum();
  report.meanfield_escaped = limit.escaped[last];
  // Heuristic condensation flag: substantial empirical mass sits above the
  // exported prefix while the finite mean-field tail there is thin.
  report.herding_flag = report.empirical_above > 0.02 &&
                        report.empirical_above >
                            4.0 * std::max(report.meanfield_above, 1e-12);
  return report;
}

}  // namespace herding::sim
