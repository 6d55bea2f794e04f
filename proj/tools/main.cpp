#include <Eigen/Core>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "herding/closed_forms.hpp"
#include "herding/config.hpp"
#include "herding/errors.hpp"
#include "herding/io.hpp"
#include "herding/meanfield.hpp"
#include "herding/simulator.hpp"
#include "herding/stationary.hpp"
#include "json.hpp"

namespace {

using herding::RunConfig;
using nlohmann::json;
namespace fs = std::filesystem;
namespace io = herding::io;

// JSON has no inf/nan literals; encode them as strings.
json json_number(double value) {
  if (std::isfinite(value)) return value;
  return io::format_double(value);
}

struct CommonOptions {
  std::string config_path;
  std::string preset_name;
  std::string out_dir = "out";
  double preset_p = 0.4;
  int threads = 1;
  std::optional<double> lambda, alpha, mu, t_end;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> players;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON config path");
  cmd->add_option("--preset", opt.preset_name, "named preset");
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--p", opt.preset_p, "preset big-jump probability");
  cmd->add_option("--threads", opt.threads, "worker threads for sweeps");
  cmd->add_option("--lambda", opt.lambda, "creation rate per player");
  cmd->add_option("--alpha", opt.alpha, "visit rate per player");
  cmd->add_option("--mu", opt.mu, "score decay rate");
  cmd->add_option("--seed", opt.seed, "simulation seed");
  cmd->add_option("--players", opt.players, "player count");
  cmd->add_option("--t-end", opt.t_end, "time horizon");
}

RunConfig resolve(const CommonOptions& opt) {
  RunConfig cfg;
  if (!opt.config_path.empty() && !opt.preset_name.empty())
    throw herding::ConfigError("pass either --config or --preset, not both");
  if (!opt.config_path.empty())
    cfg = herding::load_config_file(opt.config_path);
  else if (!opt.preset_name.empty())
    cfg = herding::preset(opt.preset_name, opt.preset_p);
  if (opt.lambda) cfg.params.lambda = *opt.lambda;
  if (opt.alpha) cfg.params.alpha = *opt.alpha;
  if (opt.mu) cfg.params.mu = *opt.mu;
  if (opt.seed) cfg.simulate.seed = *opt.seed;
  if (opt.players) cfg.simulate.players = *opt.players;
  if (opt.t_end) {
    cfg.simulate.t_end = *opt.t_end;
    cfg.integrate.t_end = *opt.t_end;
  }
  cfg.params.validate();
  return cfg;
}

// Runs fn(i) for i in [0, count) on a small worker pool, preserving result
// order through the index.
void parallel_for(Eigen::Index count, int threads,
                  const std::function<void(Eigen::Index)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (Eigen::Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const int workers = std::min<int>(threads, static_cast<int>(count));
  pool.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr failure;
  std::mutex failure_lock;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (Eigen::Index i = w; i < count; i += workers) fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> hold(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    });
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string trajectory_csv(const herding::meanfield::Trajectory& traj,
                           Eigen::Index prefix) {
  const Eigen::Index cols = std::min(prefix, traj.scores.cols());
  std::vector<std::string> header = {"t"};
  for (Eigen::Index p = 0; p < cols; ++p)
    header.push_back("r" + std::to_string(p + 1));
  header.insert(header.end(), {"mass", "mean_score", "escaped_mass"});
  std::string text = io::csv_row(header);
  for (Eigen::Index row = 0; row < traj.samples(); ++row) {
    std::vector<std::string> cells = {io::format_double(traj.times[row])};
    for (Eigen::Index p = 0; p < cols; ++p)
      cells.push_back(io::format_double(traj.scores(row, p)));
    const double mass = traj.scores.row(row).sum();
    double mean = 0.0;
    if (mass > 0.0) {
      double weighted = 0.0;
      for (Eigen::Index n = 0; n < traj.scores.cols(); ++n)
        weighted += static_cast<double>(n + 1) * traj.scores(row, n);
      mean = weighted / mass;
    }
    cells.push_back(io::format_double(mass));
    cells.push_back(io::format_double(mean));
    cells.push_back(io::format_double(traj.escaped[row]));
    text += io::csv_row(cells);
  }
  return text;
}

std::string empirical_csv(const herding::sim::EmpiricalTrajectory& traj) {
  std::vector<std::string> header = {"t", "mass", "mean_score", "top_score",
                                     "overflow_count"};
  for (Eigen::Index p = 0; p < traj.prefix.cols(); ++p)
    header.push_back("r" + std::to_string(p + 1));
  std::string text = io::csv_row(header);
  for (Eigen::Index row = 0; row < traj.times.size(); ++row) {
    std::vector<std::string> cells = {
        io::format_double(traj.times[row]), io::format_double(traj.mass[row]),
        io::format_double(traj.mean_score[row]),
        io::format_double(traj.top_score[row]),
        io::format_double(traj.overflow[row])};
    for (Eigen::Index p = 0; p < traj.prefix.cols(); ++p)
      cells.push_back(io::format_double(traj.prefix(row, p)));
    text += io::csv_row(cells);
  }
  return text;
}

json solution_json(const herding::stationary::StationarySolution& sol,
                   Eigen::Index prefix) {
  json doc;
  doc["regime"] = herding::stationary::regime_name(sol.regime);
  doc["K"] = json_number(sol.K);
  doc["x"] = json_number(sol.x);
  doc["delta"] = json_number(sol.delta);
  doc["pi_bar"] = json_number(sol.pi_bar);
  doc["r_total"] = json_number(sol.r_total);
  const double mean =
      sol.r_total > 0.0 ? sol.score_mass / sol.r_total
                        : std::numeric_limits<double>::quiet_NaN();
  doc["r_mean_score"] = json_number(mean);
  json head = json::array();
  for (Eigen::Index n = 0; n < std::min(prefix, sol.scores.size()); ++n)
    head.push_back(sol.scores[n]);
  doc["r_prefix"] = head;
  json residuals = json::object();
  for (const auto& [name, value] : sol.residuals)
    residuals[name] = json_number(value);
  doc["residuals"] = residuals;
  doc["notes"] = sol.notes;
  return doc;
}

int cmd_stationary(const CommonOptions& opt) {
  const RunConfig cfg = resolve(opt);
  herding::stationary::Options sopt;
  sopt.truncation = cfg.stationary.truncation;
  sopt.tol = cfg.stationary.tol;
  const auto sol = herding::stationary::solve(
      cfg.params, cfg.policy_spec(), cfg.theta(), cfg.phi(), sopt);

  io::write_text(fs::path(opt.out_dir) / "solution.json",
                 solution_json(sol, cfg.stationary.prefix).dump(2) + "\n");
  std::string csv = io::csv_row({"score", "r"});
  for (Eigen::Index n = 0; n < sol.scores.size(); ++n)
    csv += io::csv_row({std::to_string(n + 1),
                        io::format_double(sol.scores[n])});
  io::write_text(fs::path(opt.out_dir) / "r.csv", csv);
  std::cout << "regime " << herding::stationary::regime_name(sol.regime)
            << ", r_total " << io::format_double(sol.r_total) << "\n";
  return 0;
}

herding::meanfield::Trajectory run_integration(const RunConfig& cfg) {
  herding::meanfield::State start;
  start.scores = Eigen::VectorXd::Zero(cfg.integrate.truncation);
  for (const auto& [score, value] : cfg.integrate.r0) {
    if (score > cfg.integrate.truncation)
      throw herding::ConfigError(
          "initial profile reaches past the truncation");
    start.scores[score - 1] = value;
  }
  herding::meanfield::Controls controls;
  controls.abs_tol = cfg.integrate.abs_tol;
  controls.rel_tol = cfg.integrate.rel_tol;
  return herding::meanfield::integrate(
      start, cfg.params, cfg.policy_spec(), cfg.theta(), cfg.phi(),
      cfg.integrate.t_end, controls, cfg.integrate.samples);
}

int cmd_integrate(const CommonOptions& opt) {
  const RunConfig cfg = resolve(opt);
  const auto traj = run_integration(cfg);
  io::write_text(fs::path(opt.out_dir) / "trajectory.csv",
                 trajectory_csv(traj, cfg.integrate.prefix));
  json meta;
  meta["clip_events"] = traj.clip_events;
  meta["steps"] = traj.steps;
  meta["escaped_final"] = json_number(traj.escaped[traj.samples() - 1]);
  meta["top_bin_peak"] = json_number(traj.top_bin_peak);
  io::write_text(fs::path(opt.out_dir) / "integrate.json",
                 meta.dump(2) + "\n");
  std::cout << "integrated to t " << io::format_double(cfg.integrate.t_end)
            << " in " << traj.steps << " steps\n";
  if (traj.top_bin_peak > 1e-10)
    std::cout << "note: top bin reached " << io::format_double(traj.top_bin_peak)
              << "; raise the truncation unless condensation is expected\n";
  return 0;
}

int cmd_simulate(const CommonOptions& opt) {
  const RunConfig cfg = resolve(opt);
  const herding::sim::SampleGrid grid{cfg.simulate.t_end,
                                      cfg.simulate.samples,
                                      cfg.simulate.prefix};
  const auto traj = herding::sim::simulate(
      cfg.simulate.players, cfg.params, cfg.policy_spec(), cfg.theta(),
      cfg.phi(), grid, cfg.simulate.seed, cfg.simulate.score_cap);
  io::write_text(fs::path(opt.out_dir) / "empirical.csv",
                 empirical_csv(traj));
  json sidecar = json::parse(herding::config_to_json(cfg));
  sidecar["events"] = {{"creations", traj.stats.creations},
                       {"decays", traj.stats.decays},
                       {"deaths", traj.stats.deaths},
                       {"visits", traj.stats.visits},
                       {"null_visits", traj.stats.null_visits},
                       {"overflows", traj.stats.overflows}};
  io::write_text(fs::path(opt.out_dir) / "run.json", sidecar.dump(2) + "\n");
  std::cout << "simulated " << cfg.simulate.players << " players to t "
            << io::format_double(cfg.simulate.t_end) << "\n";
  return 0;
}

int cmd_compare(const CommonOptions& opt) {
  RunConfig cfg = resolve(opt);
  // Shared sample grid for both routes.
  cfg.integrate.t_end = cfg.simulate.t_end;
  cfg.integrate.samples = cfg.simulate.samples;
  cfg.integrate.prefix = cfg.simulate.prefix;
  const auto limit = run_integration(cfg);
  const herding::sim::SampleGrid grid{cfg.simulate.t_end,
                                      cfg.simulate.samples,
                                      cfg.simulate.prefix};
  const auto empirical = herding::sim::simulate(
      cfg.simulate.players, cfg.params, cfg.policy_spec(), cfg.theta(),
      cfg.phi(), grid, cfg.simulate.seed, cfg.simulate.score_cap);
  const auto report = herding::sim::compare_to_meanfield(empirical, limit);

  io::write_text(fs::path(opt.out_dir) / "empirical.csv",
                 empirical_csv(empirical));
  io::write_text(fs::path(opt.out_dir) / "meanfield.csv",
                 trajectory_csv(limit, cfg.integrate.prefix));
  std::string csv = io::csv_row({"t", "sup_err", "mass_err"});
  for (Eigen::Index row = 0; row < report.times.size(); ++row)
    csv += io::csv_row({io::format_double(report.times[row]),
                        io::format_double(report.sup_err[row]),
                        io::format_double(report.mass_err[row])});
  io::write_text(fs::path(opt.out_dir) / "compare.csv", csv);

  json doc;
  doc["max_sup_err"] = json_number(report.max_sup_err);
  doc["max_mass_err"] = json_number(report.max_mass_err);
  doc["herding"] = {{"empirical_above", json_number(report.empirical_above)},
                    {"meanfield_above", json_number(report.meanfield_above)},
                    {"meanfield_escaped",
                     json_number(report.meanfield_escaped)},
                    {"flag", report.herding_flag}};
  doc["seed"] = empirical.seed;
  doc["players"] = empirical.players;
  io::write_text(fs::path(opt.out_dir) / "report.json", doc.dump(2) + "\n");
  std::cout << "max sup err " << io::format_double(report.max_sup_err)
            << ", max mass err " << io::format_double(report.max_mass_err)
            << (report.herding_flag ? ", herding" : "") << "\n";
  return 0;
}

int cmd_phase(const CommonOptions& opt) {
  const RunConfig cfg = resolve(opt);
  const auto& block = cfg.phase;
  if (block.ratio_steps < 2 || !(block.ratio_max > block.ratio_min))
    throw herding::ConfigError("phase needs an increasing ratio range");

  const herding::ProbSeq phi = cfg.phi();
  std::vector<double> bounds(block.gammas.size());
  parallel_for(static_cast<Eigen::Index>(block.gammas.size()), opt.threads,
               [&](Eigen::Index i) {
                 const auto diag = herding::stationary::ergodicity_bound(
                     herding::PolicySpec::ratio_power(
                         block.gammas[static_cast<std::size_t>(i)]),
                     phi);
                 bounds[static_cast<std::size_t>(i)] = diag.bound;
               });

  std::string csv =
      io::csv_row({"gamma", "alpha_over_lambda", "alpha", "bound", "regime"});
  for (std::size_t g = 0; g < block.gammas.size(); ++g) {
    for (Eigen::Index s = 0; s < block.ratio_steps; ++s) {
      const double ratio =
          block.ratio_min + (block.ratio_max - block.ratio_min) *
                                static_cast<double>(s) /
                                static_cast<double>(block.ratio_steps - 1);
      const char* regime = ratio <= bounds[g] ? "Ergodic" : "Condensed";
      csv += io::csv_row({io::format_double(block.gammas[g]),
                          io::format_double(ratio),
                          io::format_double(ratio * cfg.params.lambda),
                          io::format_double(bounds[g]), regime});
    }
  }
  io::write_text(fs::path(opt.out_dir) / "phase.csv", csv);
  std::cout << "phase table over " << block.gammas.size() << " gammas x "
            << block.ratio_steps << " ratios\n";
  return 0;
}

int cmd_figure(const CommonOptions& opt) {
  const RunConfig cfg = resolve(opt);
  const std::vector<double> grid =
      cfg.figure.grid.empty() ? herding::closed_forms::default_figure_grid()
                              : cfg.figure.grid;

  using herding::closed_forms::FigureRow;
  std::vector<std::vector<FigureRow>> per_gamma(cfg.figure.gammas.size());
  parallel_for(static_cast<Eigen::Index>(cfg.figure.gammas.size()),
               opt.threads, [&](Eigen::Index i) {
                 per_gamma[static_cast<std::size_t>(i)] =
                     herding::closed_forms::figure_sweep(
                         {cfg.figure.gammas[static_cast<std::size_t>(i)]},
                         cfg.figure.lambda, cfg.figure.mu, grid);
               });

  std::string csv = io::csv_row({"gamma", "x", "alpha", "r_prime_1"});
  for (const auto& rows : per_gamma)
    for (const FigureRow& row : rows)
      csv += io::csv_row({io::format_double(row.gamma),
                          io::format_double(row.x),
                          io::format_double(row.alpha),
                          io::format_double(row.r_prime_1)});
  io::write_text(fs::path(opt.out_dir) / "figure.csv", csv);
  std::cout << "figure data for " << cfg.figure.gammas.size() << " curves\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "herding: stationary analysis and simulation of a multi-player "
      "scoring game"};
  app.require_subcommand(1);

  CommonOptions opt;
  CLI::App* stationary =
      app.add_subcommand("stationary", "solve the stationary regime");
  CLI::App* integrate =
      app.add_subcommand("integrate", "integrate the deterministic dynamics");
  CLI::App* simulate =
      app.add_subcommand("simulate", "run the finite-N stochastic game");
  CLI::App* compare =
      app.add_subcommand("compare", "simulate and integrate on one grid");
  CLI::App* phase =
      app.add_subcommand("phase", "ergodic/condensed phase table");
  CLI::App* figure =
      app.add_subcommand("figure", "expected-score curves against alpha");
  for (CLI::App* cmd : {stationary, integrate, simulate, compare, phase, figure})
    add_common(cmd, opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (stationary->parsed()) return cmd_stationary(opt);
    if (integrate->parsed()) return cmd_integrate(opt);
    if (simulate->parsed()) return cmd_simulate(opt);
    if (compare->parsed()) return cmd_compare(opt);
    if (phase->parsed()) return cmd_phase(opt);
    if (figure->parsed()) return cmd_figure(opt);
  } catch (const herding::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const herding::SolverError& err) {
    std::cerr << "solver error: " << err.what() << "\n";
    return 3;
  } catch (const herding::RegimeError& err) {
    std::cerr << "regime error: " << err.what() << "\n";
    return 4;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
