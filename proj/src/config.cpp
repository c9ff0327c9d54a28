#include "cycleqd/config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "cycleqd/error.hpp"

namespace cycleqd {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

void read_seed(const json& j, const char* key, std::uint64_t& out, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(where + "." + key + " must be a non-negative integer");
  }
  out = v.get<std::uint64_t>();
}

void apply_suite(SuiteSpec& spec, std::optional<std::uint64_t>& suite_seed, const json& j) {
  if (j.contains("family")) {
    const auto family = j.at("family");
    if (family == "analytic") {
      spec.family = SuiteFamily::analytic;
    } else if (family == "network") {
      spec.family = SuiteFamily::network;
    } else {
      throw ConfigError("suite.family must be \"analytic\" or \"network\"");
    }
  }
  if (spec.family == SuiteFamily::analytic) {
    reject_unknown(j, {"family", "seed", "tasks", "layers", "width", "center_scale", "perturbation",
                       "inter_center_fitness"},
                   "suite");
    auto& a = spec.analytic;
    read(j, "tasks", a.tasks, "suite");
    read(j, "layers", a.layers, "suite");
    read(j, "width", a.width, "suite");
    read(j, "center_scale", a.center_scale, "suite");
    read(j, "perturbation", a.perturbation, "suite");
    read(j, "inter_center_fitness", a.inter_center_fitness, "suite");
  } else {
    reject_unknown(j, {"family", "seed", "tasks", "input_dim", "hidden", "grid_points",
                       "target_terms", "steps", "step_size"},
                   "suite");
    auto& n = spec.network;
    read(j, "tasks", n.tasks, "suite");
    read(j, "input_dim", n.input_dim, "suite");
    read(j, "hidden", n.hidden, "suite");
    read(j, "grid_points", n.grid_points, "suite");
    read(j, "target_terms", n.target_terms, "suite");
    read(j, "steps", n.steps, "suite");
    read(j, "step_size", n.step_size, "suite");
  }
  if (j.contains("seed")) {
    if (j.at("seed").is_null()) {
      suite_seed.reset();
    } else {
      std::uint64_t s = 0;
      read_seed(j, "seed", s, "suite");
      suite_seed = s;
    }
  }
}

void apply_bounds(RunConfig& c, const json& j) {
  if (j.is_string()) {
    if (j != "auto") throw ConfigError("bounds must be \"auto\", an object, or a list of pairs");
    c.explicit_bounds.clear();
    return;
  }
  if (j.is_object()) {
    reject_unknown(j, {"rule", "lower_ratio", "upper_ratio"}, "bounds");
    if (j.contains("rule") && j.at("rule") != "auto") {
      throw ConfigError("bounds.rule must be \"auto\"");
    }
    read(j, "lower_ratio", c.lower_ratio, "bounds");
    read(j, "upper_ratio", c.upper_ratio, "bounds");
    c.explicit_bounds.clear();
    return;
  }
  if (!j.is_array()) throw ConfigError("bounds must be \"auto\", an object, or a list of pairs");
  c.explicit_bounds.clear();
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw ConfigError("each explicit bound must be a [lower, upper] pair");
    }
    c.explicit_bounds.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
}

void apply_cycle(RunConfig& c, const json& j) {
  if (!j.is_string()) throw ConfigError("cycle must be a string");
  const auto s = j.get<std::string>();
  if (s == "cyclic") {
    c.cycle = CycleMode::cyclic;
    return;
  }
  if (s.rfind("fixed:", 0) == 0) {
    const std::string digits = s.substr(6);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos ||
        digits.size() > 6) {
      throw ConfigError("cycle must be \"cyclic\" or \"fixed:<k>\"");
    }
    c.cycle = CycleMode::fixed;
    c.fixed_task = std::stoi(digits);
    return;
  }
  throw ConfigError("cycle must be \"cyclic\" or \"fixed:<k>\"");
}

}  // namespace

RunConfig apply_overrides(const RunConfig& config, const json& patch) {
  RunConfig c = config;
  reject_unknown(patch, {"generations", "bins", "bounds", "cell_capacity", "crossover", "mutation",
                         "sampling", "cycle", "seed", "snapshot_every", "parallel_eval", "suite"},
                 "config");
  read(patch, "generations", c.generations, "config");
  if (patch.contains("bins")) {
    if (patch.at("bins").is_number_integer()) {
      read(patch, "bins", c.default_bins, "config");
      c.bins.clear();
    } else {
      read(patch, "bins", c.bins, "config");
    }
  }
  if (patch.contains("bounds")) apply_bounds(c, patch.at("bounds"));
  read(patch, "cell_capacity", c.cell_capacity, "config");
  if (patch.contains("crossover")) {
    const auto& x = patch.at("crossover");
    reject_unknown(x, {"mu", "sigma", "degenerate_threshold", "max_attempts"}, "crossover");
    read(x, "mu", c.crossover.mu, "crossover");
    read(x, "sigma", c.crossover.sigma, "crossover");
    read(x, "degenerate_threshold", c.crossover.degenerate_threshold, "crossover");
    read(x, "max_attempts", c.crossover.max_attempts, "crossover");
  }
  if (patch.contains("mutation")) {
    const auto& m = patch.at("mutation");
    reject_unknown(m, {"mode", "w_max", "gaussian_sigma"}, "mutation");
    if (m.contains("mode")) {
      const auto mode = m.at("mode");
      if (mode == "svd") {
        c.mutation_mode = MutationMode::svd;
      } else if (mode == "gaussian") {
        c.mutation_mode = MutationMode::gaussian;
      } else if (mode == "none") {
        c.mutation_mode = MutationMode::none;
      } else {
        throw ConfigError("mutation.mode must be \"svd\", \"gaussian\" or \"none\"");
      }
    }
    read(m, "w_max", c.mutation.w_max, "mutation");
    read(m, "gaussian_sigma", c.mutation.gaussian_sigma, "mutation");
  }
  if (patch.contains("sampling")) {
    const auto& s = patch.at("sampling");
    reject_unknown(s, {"mode", "alpha_low", "alpha_high"}, "sampling");
    if (s.contains("mode")) {
      const auto mode = s.at("mode");
      if (mode == "elite") {
        c.sampling.mode = SamplingMode::elite;
      } else if (mode == "random") {
        c.sampling.mode = SamplingMode::random;
      } else {
        throw ConfigError("sampling.mode must be \"elite\" or \"random\"");
      }
    }
    read(s, "alpha_low", c.sampling.alpha_low, "sampling");
    read(s, "alpha_high", c.sampling.alpha_high, "sampling");
  }
  if (patch.contains("cycle")) apply_cycle(c, patch.at("cycle"));
  read_seed(patch, "seed", c.seed, "config");
  read(patch, "snapshot_every", c.snapshot_every, "config");
  read(patch, "parallel_eval", c.parallel_eval, "config");
  if (patch.contains("suite")) {
    const auto& s = patch.at("suite");
    if (!s.is_object()) throw ConfigError("suite must be an object");
    apply_suite(c.suite, c.suite_seed, s);
  }
  c.validate();
  return c;
}

RunConfig config_from_json(const json& j) {
  if (j.is_object() && j.contains("config") && j.contains("derived")) {
    return apply_overrides(RunConfig{}, j.at("config"));
  }
  return apply_overrides(RunConfig{}, j);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json suite_spec_to_json(const SuiteSpec& spec) {
  if (spec.family == SuiteFamily::analytic) {
    const auto& a = spec.analytic;
    return {{"family", "analytic"},
            {"tasks", a.tasks},
            {"layers", a.layers},
            {"width", a.width},
            {"center_scale", a.center_scale},
            {"perturbation", a.perturbation},
            {"inter_center_fitness", a.inter_center_fitness},
            {"seed", a.seed}};
  }
  const auto& n = spec.network;
  return {{"family", "network"},
          {"tasks", n.tasks},
          {"input_dim", n.input_dim},
          {"hidden", n.hidden},
          {"grid_points", n.grid_points},
          {"target_terms", n.target_terms},
          {"steps", n.steps},
          {"step_size", n.step_size},
          {"seed", n.seed}};
}

SuiteSpec suite_spec_from_json(const json& j) {
  SuiteSpec spec;
  std::optional<std::uint64_t> seed;
  apply_suite(spec, seed, j);
  if (seed) {
    spec.analytic.seed = *seed;
    spec.network.seed = *seed;
  }
  return spec;
}

json config_to_json(const RunConfig& c) {
  json bounds;
  if (c.explicit_bounds.empty()) {
    bounds = {{"rule", "auto"}, {"lower_ratio", c.lower_ratio}, {"upper_ratio", c.upper_ratio}};
  } else {
    bounds = json::array();
    for (const auto& [lo, hi] : c.explicit_bounds) bounds.push_back({lo, hi});
  }
  std::string cycle = "cyclic";
  if (c.cycle == CycleMode::fixed) cycle = "fixed:" + std::to_string(c.fixed_task);
  return {{"generations", c.generations},
          {"bins", c.resolved_bins()},
          {"bounds", bounds},
          {"cell_capacity", c.cell_capacity},
          {"crossover",
           {{"mu", c.crossover.mu},
            {"sigma", c.crossover.sigma},
            {"degenerate_threshold", c.crossover.degenerate_threshold},
            {"max_attempts", c.crossover.max_attempts}}},
          {"mutation",
           {{"mode", std::string(to_string(c.mutation_mode))},
            {"w_max", c.mutation.w_max},
            {"gaussian_sigma", c.mutation.gaussian_sigma}}},
          {"sampling",
           {{"mode", std::string(to_string(c.sampling.mode))},
            {"alpha_low", c.sampling.alpha_low},
            {"alpha_high", c.sampling.alpha_high}}},
          {"cycle", cycle},
          {"seed", c.seed},
          {"snapshot_every", c.snapshot_every},
          {"parallel_eval", c.parallel_eval},
          {"suite", suite_spec_to_json(c.resolved_suite())}};
}

}  // namespace cycleqd
