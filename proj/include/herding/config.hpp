#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "herding/distributions.hpp"
#include "herding/params.hpp"
#include "herding/policies.hpp"

namespace herding {

// Policy block of a run configuration.
struct PolicyConfig {
  std::string type = "uniform";
  double gamma = 0.0;
  double nu = 0.0;
  double exponent = 0.0;  // cumulative_power
  std::vector<double> table;
  std::string table_tail = "clamp";
  double tail_gamma = 0.0;

  PolicySpec build() const;
};

// A single JSON document configuring every subcommand; unknown keys are
// rejected at every level. Command-specific blocks carry defaults so a
// minimal config only names params, distributions and the policy.
struct RunConfig {
  ModelParams params;
  std::map<int, double> theta_map = {{1, 1.0}};
  std::map<int, double> phi_map = {{1, 1.0}};
  bool renormalize = false;
  PolicyConfig policy;

  struct Stationary {
    Eigen::Index truncation = 2000;
    double tol = 1e-10;
    Eigen::Index prefix = 64;  // scores exported to CSV
  } stationary;

  struct Integrate {
    Eigen::Index truncation = 2000;
    double t_end = 60.0;
    Eigen::Index samples = 121;
    double abs_tol = 1e-9;
    double rel_tol = 1e-7;
    Eigen::Index prefix = 12;
    std::map<int, double> r0;  // initial profile; empty world by default
  } integrate;

  struct Simulate {
    std::int64_t players = 500;
    double t_end = 100.0;
    Eigen::Index samples = 101;
    std::uint64_t seed = 1;
    Eigen::Index prefix = 12;
    int score_cap = 1'000'000;
  } simulate;

  struct Phase {
    std::vector<double> gammas = {0.5, 0.8, 1.0, 1.2, 1.5, 2.0, 2.5, 3.0};
    double ratio_min = 0.1;
    double ratio_max = 1.2;
    Eigen::Index ratio_steps = 23;
  } phase;

  struct Figure {
    std::vector<double> gammas = {0.8, 1.5, 2.5};
    double lambda = 3.0;
    double mu = 3.0;
    std::vector<double> grid;  // empty selects the default grid
  } figure;

  ProbSeq theta() const { return ProbSeq::from_map(theta_map, renormalize); }
  ProbSeq phi() const { return ProbSeq::from_map(phi_map, renormalize); }
  PolicySpec policy_spec() const { return policy.build(); }
};

// Parses a config document, rejecting unknown keys.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);

// Shipped preset: score increments 5 (mass 1-p) and 15 (mass p), initial
// score 50, decay rate 3 per day, in-game score-proportional selection.
// lambda, alpha and p are measured quantities and stay overridable.
RunConfig preset(const std::string& name, double p = 0.4);

// Round-trips a config back to JSON (for run sidecars).
std::string config_to_json(const RunConfig& config);

}  // namespace herding
