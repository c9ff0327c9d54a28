#include <cstdlib>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include "cycleqd/cli.hpp"
#include "cycleqd/config.hpp"
#include "cycleqd/error.hpp"
#include "cycleqd/serialization.hpp"

namespace cycleqd::cli {

using nlohmann::json;

fs::path ExperimentLayout::snapshot_dir(int generation) const {
  return root / "snapshots" / ("gen-" + std::to_string(generation));
}

fs::path ExperimentLayout::snapshot(int generation, int archive) const {
  return snapshot_dir(generation) / archive_file_name(archive);
}

fs::path ExperimentLayout::heatmap(int generation, int archive) const {
  return root / "heatmaps" / ("gen-" + std::to_string(generation)) /
         ("archive-" + std::to_string(archive) + ".csv");
}

std::string archive_file_name(int archive) {
  return "archive-" + std::to_string(archive) + ".json";
}

std::string heatmap_csv(const Archive& archive) {
  std::ostringstream out;
  for (int t : archive.bc_tasks()) out << "bin_task" << t << ',';
  out << "quality,genome_id\n";
  for (std::size_t cell = 0; cell < archive.lattice_size(); ++cell) {
    for (int c : archive.coordinates(cell)) out << c << ',';
    if (const Genome* g = archive.at(cell)) {
      out << format_double(g->fitness[archive.quality_task()]) << ',' << g->id << '\n';
    } else {
      out << kEmptyMarker << ',' << kEmptyMarker << '\n';
    }
  }
  return out.str();
}

json suite_descriptor(const TaskSuite& suite) {
  json j = {{"spec", suite_spec_to_json(suite.spec)},
            {"tasks", suite.spec.tasks()},
            {"parameters", json::array()},
            {"derived", suite.derived}};
  for (const auto& e : suite.base.entries()) {
    j["parameters"].push_back({{"name", e.name}, {"shape", e.tensor.shape()}});
  }
  return j;
}

std::optional<fs::path> find_suite(const fs::path& start) {
  std::error_code ec;
  fs::path dir = fs::weakly_canonical(start, ec);
  if (ec) dir = start;
  while (true) {
    if (fs::is_regular_file(dir / "suite.json")) return dir / "suite.json";
    if (!dir.has_parent_path() || dir.parent_path() == dir) return std::nullopt;
    dir = dir.parent_path();
  }
}

TaskSuite load_suite(const fs::path& suite_json) {
  const json j = read_json(suite_json);
  if (!j.contains("spec")) throw InvalidValue(suite_json.string() + " has no suite spec");
  return build_suite(suite_spec_from_json(j.at("spec")));
}

json manifest_json(const RunConfig& config, const BinSpec& bins,
                   const std::vector<std::vector<double>>& expert_fitness,
                   const TaskSuite& suite) {
  return {{"config", config_to_json(config)},
          {"derived",
           {{"bins", to_json(bins)},
            {"expert_fitness", expert_fitness},
            {"suite", suite.derived}}}};
}

std::vector<EliteRecord> elite_records(const std::vector<Genome>& elites,
                                       const std::vector<double>& weights) {
  std::vector<EliteRecord> out;
  for (std::size_t k = 0; k < elites.size(); ++k) {
    out.push_back({static_cast<int>(k), elites[k].id, elites[k].fitness[k], weights[k]});
  }
  return out;
}

json summary_json(const ParameterSet& aggregated, const EvaluatorSet& evaluators,
                  const std::vector<EliteRecord>& elites) {
  const auto fitness = evaluate_all(aggregated, evaluators);
  const double mean = std::accumulate(fitness.begin(), fitness.end(), 0.0) /
                      static_cast<double>(fitness.size());
  json records = json::array();
  for (const auto& e : elites) {
    records.push_back(
        {{"archive", e.archive}, {"id", e.id}, {"quality", e.quality}, {"weight", e.weight}});
  }
  return {{"fitness", fitness}, {"mean", mean}, {"elites", records}};
}

void write_snapshot(const ExperimentLayout& layout, int generation,
                    const std::vector<Archive>& archives) {
  const fs::path dir = layout.snapshot_dir(generation);
  for (std::size_t k = 0; k < archives.size(); ++k) {
    const int archive = static_cast<int>(k);
    auto external = [&dir](const Genome& g) {
      const std::string rel = "genomes/" + std::to_string(g.id) + ".json";
      write_json(dir / rel, to_json(*g.tv));
      return rel;
    };
    write_json(layout.snapshot(generation, archive),
               archive_to_json(archives[k], generation, external));
    write_text(layout.heatmap(generation, archive), heatmap_csv(archives[k]));
  }
}

std::vector<Archive> read_snapshot(const fs::path& snapshot_dir) {
  std::vector<Archive> out;
  auto load = [&snapshot_dir](const std::string& rel) {
    return task_vector_from_json(read_json(snapshot_dir / rel));
  };
  for (int k = 0;; ++k) {
    const fs::path file = snapshot_dir / archive_file_name(k);
    if (!fs::exists(file)) break;
    out.push_back(archive_from_json(read_json(file), load));
  }
  if (out.empty()) throw InvalidValue("no archive snapshots in " + snapshot_dir.string());
  return out;
}

std::vector<double> average_merge_fitness(const TaskSuite& suite) {
  std::vector<TaskVector> tvs;
  for (const auto& e : suite.experts) tvs.push_back(compute_task_vector(e, suite.base));
  std::vector<ScaledTerm> terms;
  const double w = 1.0 / static_cast<double>(tvs.size());
  for (const auto& tv : tvs) terms.push_back({w, tv});
  return evaluate_all(add_scaled(suite.base, terms), suite.evaluators);
}

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string log_row(const GenerationLog& log, std::size_t tasks) {
  std::ostringstream row;
  row << log.generation << ',' << log.active_task << ',' << log.parent1 << ',' << log.parent2
      << ',' << log.child_id << ',' << (log.discarded ? "discarded" : "evaluated");
  for (std::size_t k = 0; k < tasks; ++k) {
    row << ',';
    if (!log.discarded) row << format_double(log.child_fitness[k]);
  }
  for (std::size_t k = 0; k < tasks; ++k) {
    row << ',';
    if (!log.discarded) row << to_string(log.placements[k]);
  }
  row << '\n';
  return row.str();
}

std::string log_header(std::size_t tasks) {
  std::string h = "generation,active_task,parent1,parent2,child_id,status";
  for (std::size_t k = 0; k < tasks; ++k) h += ",fitness_" + std::to_string(k);
  for (std::size_t k = 0; k < tasks; ++k) h += ",placement_" + std::to_string(k);
  return h + "\n";
}

std::ofstream open_log(const fs::path& path, const std::string& header) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << header;
  out.flush();
  return out;
}

}  // namespace

RunOutput execute_run(const RunConfig& config, const fs::path& root) {
  config.validate();
  const TaskSuite suite = build_suite(config.resolved_suite());
  const ExperimentLayout layout{root};
  write_json(layout.suite(), suite_descriptor(suite));

  const auto tasks = static_cast<std::size_t>(config.tasks());
  std::ofstream generations = open_log(layout.generations_log(), log_header(tasks));
  std::ofstream timing = open_log(layout.timing_log(), "generation,eval_seconds\n");
  std::ofstream failures;

  TrainObserver observer;
  observer.on_seeded = [&](const Engine& engine) {
    write_json(layout.manifest(),
               manifest_json(config, engine.bins(), engine.expert_fitness(), suite));
    write_snapshot(layout, 0, engine.archives());
  };
  observer.on_generation = [&](const Engine& engine, const GenerationLog& log) {
    generations << log_row(log, tasks);
    generations.flush();
    timing << log.generation << ',' << format_double(log.eval_seconds) << '\n';
    timing.flush();
    if (log.discarded) {
      if (!failures.is_open()) failures.open(layout.failures_log(), std::ios::binary);
      failures << log.generation << ": " << log.failure << '\n';
      failures.flush();
    }
    const int t = log.generation;
    if ((config.snapshot_every > 0 && t % config.snapshot_every == 0) ||
        t == config.generations) {
      write_snapshot(layout, t, engine.archives());
    }
  };

  RunOutput out;
  out.result = train(config, suite.experts, suite.base, suite.evaluators, observer);
  write_json(layout.aggregated(), to_json(out.result.aggregated));

  out.summary = summary_json(out.result.aggregated, suite.evaluators,
                             elite_records(out.result.elites, out.result.weights));
  json experts = json::array();
  double best_expert = 0.0;
  for (const auto& f : out.result.expert_fitness) {
    experts.push_back(f);
    best_expert = std::max(best_expert, mean_of(f));
  }
  const auto average = average_merge_fitness(suite);
  out.summary["generations"] = config.generations;
  out.summary["evaluations"] = out.result.evaluations;
  out.summary["baselines"] = {{"expert_fitness", experts},
                              {"best_expert_mean", best_expert},
                              {"average_merge_fitness", average},
                              {"average_merge_mean", mean_of(average)}};
  write_json(layout.summary(), out.summary);
  return out;
}

std::vector<AblationVariant> ablation_variants(const RunConfig& base) {
  auto variant = [&base](MutationMode mutation, SamplingMode sampling) {
    RunConfig c = base;
    c.cycle = CycleMode::cyclic;
    c.mutation_mode = mutation;
    c.sampling.mode = sampling;
    return c;
  };
  return {
      {0, "QD + No mutation + Random sampling",
       variant(MutationMode::none, SamplingMode::random), true},
      {1, "CycleQD + No mutation + Random sampling",
       variant(MutationMode::none, SamplingMode::random), false},
      {2, "CycleQD + Gaussian mutation + Random sampling",
       variant(MutationMode::gaussian, SamplingMode::random), false},
      {3, "CycleQD + SVD mutation + Random sampling",
       variant(MutationMode::svd, SamplingMode::random), false},
      {4, "CycleQD + SVD mutation + Elite sampling",
       variant(MutationMode::svd, SamplingMode::elite), false},
  };
}

AblationRow execute_variant(const AblationVariant& variant, std::uint64_t seed,
                            const fs::path& root) {
  RunConfig config = variant.config;
  config.seed = seed;
  AblationRow row{variant.trial, variant.label, seed, {}, 0.0};
  if (!variant.fixed_quality) {
    const RunOutput run = execute_run(config, root);
    row.fitness = run.summary.at("fitness").get<std::vector<double>>();
    row.mean = run.summary.at("mean").get<double>();
    return row;
  }

  std::vector<Genome> elites;
  for (int k = 0; k < config.tasks(); ++k) {
    const RunOutput run = execute_run(fixed_quality_config(config, k),
                                      root / ("task-" + std::to_string(k)));
    elites.push_back(run.result.elites[static_cast<std::size_t>(k)]);
  }
  const TaskSuite suite = build_suite(config.resolved_suite());
  std::vector<double> quality;
  std::vector<EliteContribution> parts;
  for (std::size_t k = 0; k < elites.size(); ++k) {
    quality.push_back(elites[k].fitness[k]);
    parts.push_back({*elites[k].tv, elites[k].fitness[k]});
  }
  const ParameterSet aggregated = aggregate(suite.base, parts);
  const ExperimentLayout layout{root};
  write_json(layout.aggregated(), to_json(aggregated));
  const json summary = summary_json(aggregated, suite.evaluators,
                                    elite_records(elites, aggregation_weights(quality)));
  write_json(layout.summary(), summary);
  row.fitness = summary.at("fitness").get<std::vector<double>>();
  row.mean = summary.at("mean").get<double>();
  return row;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "trial,label,seed,mean_fitness";
  const std::size_t tasks = rows.empty() ? 0 : rows.front().fitness.size();
  for (std::size_t k = 0; k < tasks; ++k) out << ",fitness_" << k;
  out << '\n';
  for (const auto& r : rows) {
    out << r.trial << ",\"" << r.label << "\"," << r.seed << ',' << format_double(r.mean);
    for (double f : r.fitness) out << ',' << format_double(f);
    out << '\n';
  }
  return out.str();
}

fs::path default_output(const std::string& name) {
  const char* root = std::getenv("CYCLEQD_OUTPUT_ROOT");
  return fs::path(root != nullptr && *root != '\0' ? root : "runs") / name;
}

}  // namespace cycleqd::cli
