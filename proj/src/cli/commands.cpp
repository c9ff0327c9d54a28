#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "cycleqd/cli.hpp"
#include "cycleqd/config.hpp"
#include "cycleqd/error.hpp"
#include "cycleqd/serialization.hpp"
#include "cycleqd/spectral.hpp"

namespace cycleqd::cli {

using nlohmann::json;

RunConfig resolve_config(const GlobalOptions& options) {
  RunConfig base = options.config ? load_config(*options.config) : RunConfig{};
  json patch = options.overrides;
  if (options.seed) patch["seed"] = *options.seed;
  if (options.generations) patch["generations"] = *options.generations;
  return apply_overrides(base, patch);
}

namespace {

void prepare_output(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir)) {
    throw ConfigError(dir.string() + " exists and is not a directory");
  }
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw ConfigError("output directory " + dir.string() +
                      " is not empty; pass --force to write into it");
  }
  fs::create_directories(dir);
}

std::string join(const std::vector<double>& values) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << values[i];
  return out.str();
}

}  // namespace

int cmd_run(const GlobalOptions& options, std::ostream& out) {
  const RunConfig config = resolve_config(options);
  const fs::path dir = options.out.value_or(default_output("run-seed" + std::to_string(config.seed)));
  prepare_output(dir, options.force);
  const RunOutput run = execute_run(config, dir);
  if (!options.quiet) {
    const auto& s = run.summary;
    out << "run written to " << dir.string() << "\n"
        << "aggregated fitness: " << join(s.at("fitness").get<std::vector<double>>())
        << "  mean " << std::fixed << std::setprecision(4) << s.at("mean").get<double>() << "\n"
        << "best expert mean:   " << s.at("baselines").at("best_expert_mean").get<double>() << "\n"
        << "average merge mean: " << s.at("baselines").at("average_merge_mean").get<double>()
        << "\n";
  }
  return 0;
}

int cmd_ablate(const GlobalOptions& options, const std::vector<std::uint64_t>& seeds,
               std::ostream& out) {
  const RunConfig config = resolve_config(options);
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  const fs::path dir = options.out.value_or(default_output("ablate"));
  prepare_output(dir, options.force);

  std::vector<AblationRow> rows;
  for (const auto& variant : ablation_variants(config)) {
    double total = 0.0;
    for (std::uint64_t seed : seeds) {
      const fs::path run_dir =
          dir / ("trial-" + std::to_string(variant.trial)) / ("seed-" + std::to_string(seed));
      rows.push_back(execute_variant(variant, seed, run_dir));
      total += rows.back().mean;
    }
    if (!options.quiet) {
      out << variant.trial << "  " << std::left << std::setw(48) << variant.label << std::right
          << std::fixed << std::setprecision(4) << total / static_cast<double>(seeds.size())
          << "\n";
    }
  }
  write_text(dir / "ablation.csv", ablation_csv(rows));
  if (!options.quiet) out << "ablation written to " << (dir / "ablation.csv").string() << "\n";
  return 0;
}

int cmd_aggregate(const GlobalOptions& options, const fs::path& snapshot_dir, std::ostream& out) {
  const auto suite_path = find_suite(snapshot_dir);
  if (!suite_path) throw Error("no suite.json found at or above " + snapshot_dir.string());
  const TaskSuite suite = load_suite(*suite_path);
  const auto archives = read_snapshot(snapshot_dir);
  if (archives.size() != suite.evaluators.size()) {
    throw Error("snapshot holds " + std::to_string(archives.size()) + " archives for " +
                std::to_string(suite.evaluators.size()) + " tasks");
  }
  const std::string base_id = suite.base.fingerprint();
  std::vector<Genome> elites;
  std::vector<double> quality;
  std::vector<EliteContribution> parts;
  for (const auto& archive : archives) elites.push_back(elite_of(archive));
  for (std::size_t k = 0; k < elites.size(); ++k) {
    if (elites[k].tv->base_id() != base_id) {
      throw IncompatibleParameters("elite of archive " + std::to_string(k) +
                                   " is relative to a different base");
    }
    quality.push_back(elites[k].fitness[k]);
    parts.push_back({*elites[k].tv, elites[k].fitness[k]});
  }
  const ParameterSet aggregated = aggregate(suite.base, parts);
  const json summary =
      summary_json(aggregated, suite.evaluators, elite_records(elites, aggregation_weights(quality)));
  const fs::path dir = options.out.value_or(snapshot_dir);
  fs::create_directories(dir);
  write_json(dir / "aggregated.json", to_json(aggregated));
  write_json(dir / "summary.json", summary);
  if (!options.quiet) {
    out << "aggregated fitness: " << join(summary.at("fitness").get<std::vector<double>>())
        << "  mean " << std::fixed << std::setprecision(4) << summary.at("mean").get<double>()
        << "\n";
  }
  return 0;
}

int cmd_similarity(const GlobalOptions& options, const fs::path& model_a, const fs::path& model_b,
                   const fs::path& base, std::ostream& out) {
  const ParameterSet b = parameter_set_from_json(read_json(base));
  const TaskVector ta = compute_task_vector(parameter_set_from_json(read_json(model_a)), b);
  const TaskVector tb = compute_task_vector(parameter_set_from_json(read_json(model_b)), b);
  const SimilarityBreakdown s = similarity_breakdown(ta, tb);

  json entries = json::array();
  for (const auto& e : s.per_entry) entries.push_back({{"name", e.name}, {"cosine", e.cosine}});
  const fs::path dir = options.out.value_or(default_output("similarity"));
  fs::create_directories(dir);
  write_json(dir / "similarity.json",
             {{"similarity", s.similarity}, {"qualifying_entries", s.per_entry.size()},
              {"entries", entries}});
  out << "similarity " << format_double(s.similarity) << "\n";
  if (!options.quiet) {
    for (const auto& e : s.per_entry) out << "  " << e.name << " " << format_double(e.cosine) << "\n";
  }
  return 0;
}

int cmd_heatmap(const GlobalOptions& options, const fs::path& snapshot_dir, std::ostream& out) {
  const auto archives = read_snapshot(snapshot_dir);
  const fs::path dir = options.out.value_or(default_output("heatmap"));
  for (const auto& archive : archives) {
    const auto file = dir / ("archive-" + std::to_string(archive.quality_task()) + ".csv");
    write_text(file, heatmap_csv(archive));
    if (!options.quiet) {
      out << file.string() << ": " << archive.size() << " of " << archive.lattice_size()
          << " cells occupied\n";
    }
  }
  return 0;
}

namespace {

// "a.b.c=value" into {"a": {"b": {"c": value}}}; value is JSON when it
// parses, a string otherwise.
void add_setting(json& patch, const std::string& setting) {
  const auto eq = setting.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key=value, got '" + setting + "'");
  }
  const std::string key = setting.substr(0, eq);
  const std::string raw = setting.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &patch;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("--set key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyclic multi-archive quality-diversity search over task vectors"};
  app.require_subcommand(1);

  GlobalOptions options;
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  int generations = 0;
  std::vector<std::string> settings;
  std::string mutation;
  std::string sampling;
  std::string cycle;
  bool parallel = false;

  auto* config_opt = app.add_option("--config", config_path, "JSON config or run manifest");
  auto* out_opt = app.add_option("--out", out_path, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed");
  auto* gen_opt = app.add_option("--generations", generations, "Generation budget");
  app.add_flag("--quiet", options.quiet, "Suppress progress output");
  app.add_flag("--force", options.force, "Write into a non-empty output directory");
  app.add_option("--set", settings, "Config override key.path=value (repeatable)");
  auto* mutation_opt = app.add_option("--mutation", mutation, "svd, gaussian or none")
                           ->check(CLI::IsMember({"svd", "gaussian", "none"}));
  auto* sampling_opt = app.add_option("--sampling", sampling, "elite or random")
                           ->check(CLI::IsMember({"elite", "random"}));
  auto* cycle_opt = app.add_option("--cycle", cycle, "cyclic or fixed:<k>");
  auto* parallel_opt = app.add_flag("--parallel-eval", parallel, "Evaluate tasks in parallel");
  app.fallthrough();

  auto* run = app.add_subcommand("run", "Train and write a run directory");

  auto* ablate = app.add_subcommand("ablate", "Run the five ablation trials");
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  ablate->add_option("--seeds", seeds, "Seed set")->delimiter(',');

  auto* agg = app.add_subcommand("aggregate", "Aggregate the elites of a snapshot");
  std::string agg_dir;
  agg->add_option("snapshot", agg_dir, "Snapshot directory")->required();

  auto* sim = app.add_subcommand("similarity", "Singular-value similarity of two models");
  std::string model_a, model_b, base;
  sim->add_option("model_a", model_a, "First model JSON")->required();
  sim->add_option("model_b", model_b, "Second model JSON")->required();
  sim->add_option("base", base, "Base model JSON")->required();

  auto* heat = app.add_subcommand("heatmap", "Export heatmap CSVs of a snapshot");
  std::string heat_dir, heat_out;
  heat->add_option("snapshot", heat_dir, "Snapshot directory")->required();
  heat->add_option("out_dir", heat_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*config_opt) options.config = config_path;
    if (*out_opt) options.out = out_path;
    if (*seed_opt) options.seed = seed;
    if (*gen_opt) options.generations = generations;
    for (const auto& s : settings) add_setting(options.overrides, s);
    if (*mutation_opt) options.overrides["mutation"]["mode"] = mutation;
    if (*sampling_opt) options.overrides["sampling"]["mode"] = sampling;
    if (*cycle_opt) options.overrides["cycle"] = cycle;
    if (*parallel_opt) options.overrides["parallel_eval"] = parallel;

    if (*run) return cmd_run(options, std::cout);
    if (*ablate) return cmd_ablate(options, seeds, std::cout);
    if (*agg) return cmd_aggregate(options, agg_dir, std::cout);
    if (*sim) return cmd_similarity(options, model_a, model_b, base, std::cout);
    if (*heat) {
      if (!heat_out.empty()) options.out = heat_out;
      return cmd_heatmap(options, heat_dir, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace cycleqd::cli
