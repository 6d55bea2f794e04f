#include "herding/config.hpp"

#include <fstream>
#include <set>

#include "herding/errors.hpp"
#include "json.hpp"

namespace herding {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

std::map<int, double> parse_dist(const json& obj, const std::string& where) {
  if (!obj.is_object() || obj.empty())
    throw ConfigError(where + " must be a non-empty {\"score\": mass} object");
  std::map<int, double> out;
  for (const auto& item : obj.items()) {
    int score = 0;
    try {
      std::size_t used = 0;
      score = std::stoi(item.key(), &used);
      if (used != item.key().size()) throw std::invalid_argument(item.key());
    } catch (const std::exception&) {
      throw ConfigError(where + " key '" + item.key() +
                        "' is not an integer score");
    }
    if (!item.value().is_number())
      throw ConfigError(where + " mass at '" + item.key() +
                        "' is not a number");
    out[score] = item.value().get<double>();
  }
  return out;
}

double get_number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ConfigError(std::string("'") + key + "' must be a number");
  return obj[key].get<double>();
}

Eigen::Index get_index(const json& obj, const char* key,
                       Eigen::Index fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer())
    throw ConfigError(std::string("'") + key + "' must be an integer");
  return obj[key].get<Eigen::Index>();
}

}  // namespace

PolicySpec PolicyConfig::build() const {
  if (type == "uniform") return PolicySpec::uniform();
  if (type == "score_linear") return PolicySpec::score_linear();
  if (type == "ratio_power") return PolicySpec::ratio_power(gamma);
  if (type == "asymptotic_class")
    return PolicySpec::asymptotic_class(gamma, nu);
  if (type == "cumulative_power") return PolicySpec::cumulative_power(exponent);
  if (type == "weight_table") {
    const auto tail = table_tail == "clamp"
                          ? PolicySpec::TableTail::Clamp
                          : PolicySpec::TableTail::RatioPower;
    if (table_tail != "clamp" && table_tail != "ratio_power")
      throw ConfigError("weight_table tail must be 'clamp' or 'ratio_power'");
    return PolicySpec::weight_table(table, tail, tail_gamma);
  }
  throw ConfigError("unknown policy type '" + type + "'");
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("config is not valid JSON: ") + err.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  check_keys(doc, "config",
             {"params", "theta", "phi", "renormalize", "policy", "stationary",
              "integrate", "simulate", "phase", "figure"});

  RunConfig cfg;
  if (doc.contains("params")) {
    const json& p = doc["params"];
    check_keys(p, "params", {"lambda", "alpha", "mu"});
    cfg.params.lambda = get_number(p, "lambda", cfg.params.lambda);
    cfg.params.alpha = get_number(p, "alpha", cfg.params.alpha);
    cfg.params.mu = get_number(p, "mu", cfg.params.mu);
  }
  if (doc.contains("renormalize")) {
    if (!doc["renormalize"].is_boolean())
      throw ConfigError("'renormalize' must be a boolean");
    cfg.renormalize = doc["renormalize"].get<bool>();
  }
  if (doc.contains("theta")) cfg.theta_map = parse_dist(doc["theta"], "theta");
  if (doc.contains("phi")) cfg.phi_map = parse_dist(doc["phi"], "phi");

  if (doc.contains("policy")) {
    const json& p = doc["policy"];
    check_keys(p, "policy",
               {"type", "gamma", "nu", "exponent", "c", "table", "tail",
                "tail_gamma"});
    if (!p.contains("type") || !p["type"].is_string())
      throw ConfigError("policy block needs a string 'type'");
    cfg.policy.type = p["type"].get<std::string>();
    cfg.policy.gamma = get_number(p, "gamma", 0.0);
    cfg.policy.nu = get_number(p, "nu", 0.0);
    // "c" is the conventional name of the cumulative power; both spellings
    // are accepted.
    cfg.policy.exponent = get_number(p, "exponent", get_number(p, "c", 0.0));
    if (p.contains("table")) {
      if (!p["table"].is_array())
        throw ConfigError("policy 'table' must be an array");
      cfg.policy.table = p["table"].get<std::vector<double>>();
    }
    if (p.contains("tail")) {
      if (!p["tail"].is_string())
        throw ConfigError("policy 'tail' must be a string");
      cfg.policy.table_tail = p["tail"].get<std::string>();
    }
    cfg.policy.tail_gamma = get_number(p, "tail_gamma", 0.0);
  }

  if (doc.contains("stationary")) {
    const json& b = doc["stationary"];
    check_keys(b, "stationary", {"truncation", "tol", "prefix"});
    cfg.stationary.truncation =
        get_index(b, "truncation", cfg.stationary.truncation);
    cfg.stationary.tol = get_number(b, "tol", cfg.stationary.tol);
    cfg.stationary.prefix = get_index(b, "prefix", cfg.stationary.prefix);
  }
  if (doc.contains("integrate")) {
    const json& b = doc["integrate"];
    check_keys(b, "integrate",
               {"truncation", "t_end", "samples", "abs_tol", "rel_tol",
                "prefix", "r0"});
    cfg.integrate.truncation =
        get_index(b, "truncation", cfg.integrate.truncation);
    cfg.integrate.t_end = get_number(b, "t_end", cfg.integrate.t_end);
    cfg.integrate.samples = get_index(b, "samples", cfg.integrate.samples);
    cfg.integrate.abs_tol = get_number(b, "abs_tol", cfg.integrate.abs_tol);
    cfg.integrate.rel_tol = get_number(b, "rel_tol", cfg.integrate.rel_tol);
    cfg.integrate.prefix = get_index(b, "prefix", cfg.integrate.prefix);
    if (b.contains("r0")) {
      for (const auto& item : b["r0"].items()) {
        int score = 0;
        try {
          score = std::stoi(item.key());
        } catch (const std::exception&) {
          throw ConfigError("integrate r0 key '" + item.key() +
                            "' is not an integer score");
        }
        const double value = item.value().get<double>();
        if (score < 1 || !(value >= 0.0))
          throw ConfigError("integrate r0 entries must map scores >= 1 to "
                            "non-negative densities");
        cfg.integrate.r0[score] = value;
      }
    }
  }
  if (doc.contains("simulate")) {
    const json& b = doc["simulate"];
    check_keys(b, "simulate",
               {"players", "t_end", "samples", "seed", "prefix", "score_cap"});
    cfg.simulate.players = get_index(b, "players", cfg.simulate.players);
    cfg.simulate.t_end = get_number(b, "t_end", cfg.simulate.t_end);
    cfg.simulate.samples = get_index(b, "samples", cfg.simulate.samples);
    if (b.contains("seed")) {
      if (!b["seed"].is_number_unsigned() && !b["seed"].is_number_integer())
        throw ConfigError("'seed' must be an integer");
      cfg.simulate.seed = b["seed"].get<std::uint64_t>();
    }
    cfg.simulate.prefix = get_index(b, "prefix", cfg.simulate.prefix);
    cfg.simulate.score_cap = static_cast<int>(
        get_index(b, "score_cap", cfg.simulate.score_cap));
  }
  if (doc.contains("phase")) {
    const json& b = doc["phase"];
    check_keys(b, "phase", {"gammas", "ratio_min", "ratio_max", "ratio_steps"});
    if (b.contains("gammas"))
      cfg.phase.gammas = b["gammas"].get<std::vector<double>>();
    cfg.phase.ratio_min = get_number(b, "ratio_min", cfg.phase.ratio_min);
    cfg.phase.ratio_max = get_number(b, "ratio_max", cfg.phase.ratio_max);
    cfg.phase.ratio_steps =
        get_index(b, "ratio_steps", cfg.phase.ratio_steps);
  }
  if (doc.contains("figure")) {
    const json& b = doc["figure"];
    check_keys(b, "figure", {"gammas", "lambda", "mu", "grid"});
    if (b.contains("gammas"))
      cfg.figure.gammas = b["gammas"].get<std::vector<double>>();
    cfg.figure.lambda = get_number(b, "lambda", cfg.figure.lambda);
    cfg.figure.mu = get_number(b, "mu", cfg.figure.mu);
    if (b.contains("grid"))
      cfg.figure.grid = b["grid"].get<std::vector<double>>();
  }

  // Fail fast on anything a command would reject later.
  cfg.params.validate();
  cfg.theta();
  cfg.phi();
  cfg.policy_spec();
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

RunConfig preset(const std::string& name, double p) {
  if (name != "mamicroplanete")
    throw ConfigError("unknown preset '" + name + "'");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("preset mix p must be in (0,1)");
  RunConfig cfg;
  cfg.params.mu = 3.0;  // decay of one point at rate 3 per day
  cfg.params.lambda = 1.0;
  cfg.params.alpha = 1.0;
  cfg.theta_map = {{5, 1.0 - p}, {15, p}};
  cfg.phi_map = {{50, 1.0}};
  cfg.policy.type = "score_linear";
  return cfg;
}

std::string config_to_json(const RunConfig& config) {
  json doc;
  doc["params"] = {{"lambda", config.params.lambda},
                   {"alpha", config.params.alpha},
                   {"mu", config.params.mu}};
  json theta = json::object();
  for (const auto& [score, mass] : config.theta_map)
    theta[std::to_string(score)] = mass;
  doc["theta"] = theta;
  json phi = json::object();
  for (const auto& [score, mass] : config.phi_map)
    phi[std::to_string(score)] = mass;
  doc["phi"] = phi;
  json policy;
  policy["type"] = config.policy.type;
  if (config.policy.gamma != 0.0) policy["gamma"] = config.policy.gamma;
  if (config.policy.nu != 0.0) policy["nu"] = config.policy.nu;
  if (config.policy.exponent != 0.0)
    policy["exponent"] = config.policy.exponent;
  if (!config.policy.table.empty()) {
    policy["table"] = config.policy.table;
    policy["tail"] = config.policy.table_tail;
    if (config.policy.tail_gamma != 0.0)
      policy["tail_gamma"] = config.policy.tail_gamma;
  }
  doc["policy"] = policy;
  doc["simulate"] = {{"players", config.simulate.players},
                     {"t_end", config.simulate.t_end},
                     {"samples", config.simulate.samples},
                     {"seed", config.simulate.seed},
                     {"prefix", config.simulate.prefix},
                     {"score_cap", config.simulate.score_cap}};
  return doc.dump(2) + "\n";
}

}  // namespace herding
