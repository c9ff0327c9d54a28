#pragma once

#include <filesystem>

#include <json.hpp>

#include "cycleqd/engine.hpp"
#include "cycleqd/task_suite.hpp"

namespace cycleqd {

// Config schema (every key optional, unknown keys rejected):
//
//   generations     int, default 300
//   bins            int or one int per task, default 15
//   bounds          "auto", {"rule": "auto", "lower_ratio", "upper_ratio"},
//                   or [[lower, upper], ...] per task
//   cell_capacity   must be 1
//   crossover       {"mu", "sigma", "degenerate_threshold", "max_attempts"}
//   mutation        {"mode": "svd" | "gaussian" | "none", "w_max", "gaussian_sigma"}
//   sampling        {"mode": "elite" | "random", "alpha_low", "alpha_high"}
//   cycle           "cyclic" or "fixed:<k>"
//   seed            unsigned 64-bit
//   snapshot_every  int, 0 disables intermediate snapshots
//   parallel_eval   bool
//   suite           {"family": "analytic" | "network", "seed", family fields}
//
// A manifest ({"config": ..., "derived": ...}) is accepted in place of a
// config and yields its resolved config.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// Fully resolved form: bins expanded per task, suite seed pinned.
nlohmann::json config_to_json(const RunConfig& config);

nlohmann::json suite_spec_to_json(const SuiteSpec& spec);
SuiteSpec suite_spec_from_json(const nlohmann::json& j);

// Applies the keys of `patch` on top of `config`.
RunConfig apply_overrides(const RunConfig& config, const nlohmann::json& patch);

}  // namespace cycleqd
