#include "cycleqd/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "cycleqd/error.hpp"
#include "cycleqd/random.hpp"

namespace cycleqd {

std::vector<int> RunConfig::resolved_bins() const {
  if (bins.empty()) {
    return std::vector<int>(static_cast<std::size_t>(std::max(tasks(), 0)), default_bins);
  }
  return bins;
}

std::uint64_t RunConfig::resolved_suite_seed() const noexcept {
  if (suite_seed) return *suite_seed;
  return derive_stream(seed, "suite", 0).next_u64();
}

SuiteSpec RunConfig::resolved_suite() const {
  SuiteSpec s = suite;
  s.analytic.seed = resolved_suite_seed();
  s.network.seed = resolved_suite_seed();
  return s;
}

void RunConfig::validate() const {
  const int k = tasks();
  if (k < 2) throw ConfigError("at least two tasks are required");
  if (generations < 0) throw ConfigError("generations must be >= 0");
  if (!bins.empty() && static_cast<int>(bins.size()) != k) {
    throw ConfigError("bins lists " + std::to_string(bins.size()) + " counts for " +
                      std::to_string(k) + " tasks");
  }
  for (int b : resolved_bins()) {
    if (b < 1) throw ConfigError("bin counts must be >= 1");
  }
  if (!explicit_bounds.empty()) {
    if (static_cast<int>(explicit_bounds.size()) != k) {
      throw ConfigError("bounds lists " + std::to_string(explicit_bounds.size()) +
                        " pairs for " + std::to_string(k) + " tasks");
    }
    for (const auto& [lo, hi] : explicit_bounds) {
      TaskBins{lo, hi, 1}.validate();
    }
  }
  if (!(lower_ratio > 0.0) || !(upper_ratio > 0.0) || !std::isfinite(lower_ratio) ||
      !std::isfinite(upper_ratio)) {
    throw ConfigError("bound ratios must be positive");
  }
  if (cell_capacity != 1) throw ConfigError("cell_capacity must be 1");
  crossover.validate();
  mutation.validate();
  sampling.validate();
  if (cycle == CycleMode::fixed && (fixed_task < 0 || fixed_task >= k)) {
    throw ConfigError("fixed:" + std::to_string(fixed_task) + " requires a task below " +
                      std::to_string(k));
  }
  if (snapshot_every < 0) throw ConfigError("snapshot_every must be >= 0");
}

std::string_view to_string(MutationMode m) {
  switch (m) {
    case MutationMode::svd: return "svd";
    case MutationMode::gaussian: return "gaussian";
    case MutationMode::none: return "none";
  }
  return "unknown";
}

std::string_view to_string(CycleMode m) {
  return m == CycleMode::cyclic ? "cyclic" : "fixed";
}

std::string_view to_string(SamplingMode m) {
  return m == SamplingMode::elite ? "elite" : "random";
}

int active_task(const RunConfig& config, int t) {
  if (config.cycle == CycleMode::fixed) return config.fixed_task;
  return (t - 1) % config.tasks();
}

BinSpec auto_bounds(const std::vector<std::vector<double>>& expert_fitness,
                    const std::vector<int>& bins, double lower_ratio, double upper_ratio) {
  if (expert_fitness.empty()) throw ConfigError("auto bounds need at least one expert");
  const std::size_t k = bins.size();
  BinSpec spec;
  for (std::size_t t = 0; t < k; ++t) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& row : expert_fitness) {
      if (row.size() != k) throw InvalidFitness("expert fitness rows must have one value per task");
      lo = std::min(lo, row[t]);
      hi = std::max(hi, row[t]);
    }
    const double lower = lower_ratio * lo;
    const double upper = upper_ratio * hi;
    if (!(lower < upper)) {
      throw DegenerateBounds("automatic bounds for task " + std::to_string(t) +
                             " collapse to [" + std::to_string(lower) + ", " +
                             std::to_string(upper) + "]; set explicit bounds in the config");
    }
    spec.tasks.push_back({lower, upper, bins[t]});
  }
  return spec;
}

BinSpec resolve_bins(const RunConfig& config,
                     const std::vector<std::vector<double>>& expert_fitness) {
  const auto bins = config.resolved_bins();
  if (config.explicit_bounds.empty()) {
    return auto_bounds(expert_fitness, bins, config.lower_ratio, config.upper_ratio);
  }
  BinSpec spec;
  for (std::size_t t = 0; t < bins.size(); ++t) {
    spec.tasks.push_back({config.explicit_bounds[t].first, config.explicit_bounds[t].second, bins[t]});
  }
  return spec;
}

Engine::Engine(RunConfig config, std::vector<ParameterSet> experts, ParameterSet base,
               EvaluatorSet evaluators)
    : config_(std::move(config)), base_(std::move(base)), evaluators_(std::move(evaluators)) {
  config_.validate();
  if (experts.empty()) throw ConfigError("at least one expert is required");
  if (static_cast<int>(evaluators_.size()) != config_.tasks()) {
    throw ConfigError("the suite provides " + std::to_string(evaluators_.size()) +
                      " evaluators for " + std::to_string(config_.tasks()) + " tasks");
  }
  base_id_ = base_.fingerprint();

  std::vector<Genome> seeded;
  for (const auto& expert : experts) {
    auto tv = std::make_shared<const TaskVector>(compute_task_vector(expert, base_));
    auto fitness = evaluate_all(expert, evaluators_, config_.parallel_eval);
    evaluations_ += evaluators_.size();
    expert_fitness_.push_back(fitness);
    seeded.push_back({next_id_++, 0, std::move(fitness), std::move(tv)});
  }
  bins_ = resolve_bins(config_, expert_fitness_);
  for (int k = 0; k < config_.tasks(); ++k) archives_.emplace_back(k, bins_);
  seed_with_experts(archives_, seeded);
}

GenerationLog Engine::step() {
  const int t = generation_ + 1;
  GenerationLog log;
  log.generation = t;
  log.active_task = active_task(config_, t);
  const auto gen = static_cast<std::uint64_t>(t);

  auto sampling_rng = derive_stream(config_.seed, "sampling", gen);
  const auto [p1, p2] = sample_parents(archives_[log.active_task], config_.sampling, sampling_rng);
  log.parent1 = p1.id;
  log.parent2 = p2.id;

  auto crossover_rng = derive_stream(config_.seed, "crossover", gen);
  TaskVector child = crossover(*p1.tv, *p2.tv, config_.crossover, crossover_rng);
  auto mutation_rng = derive_stream(config_.seed, "mutation", gen);
  switch (config_.mutation_mode) {
    case MutationMode::svd: child = svd_mutate(child, config_.mutation, mutation_rng); break;
    case MutationMode::gaussian:
      child = gaussian_mutate(child, config_.mutation, mutation_rng);
      break;
    case MutationMode::none: break;
  }
  log.child_id = next_id_++;

  const ScaledTerm term[] = {{1.0, child}};
  const ParameterSet candidate = add_scaled(base_, term);
  const auto started = std::chrono::steady_clock::now();
  try {
    log.child_fitness = evaluate_all(candidate, evaluators_, config_.parallel_eval);
  } catch (const EvaluationFailure& e) {
    log.discarded = true;
    log.failure = e.what();
  }
  log.eval_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  evaluations_ += evaluators_.size();

  if (!log.discarded) {
    Genome genome{log.child_id, t, log.child_fitness,
                  std::make_shared<const TaskVector>(std::move(child))};
    for (auto& archive : archives_) log.placements.push_back(archive.update(genome));
  }
  generation_ = t;
  return log;
}

std::vector<Genome> Engine::elites() const {
  std::vector<Genome> out;
  for (const auto& archive : archives_) out.push_back(elite_of(archive));
  return out;
}

namespace {

std::vector<double> elite_quality(const std::vector<Genome>& elites) {
  std::vector<double> out;
  for (std::size_t k = 0; k < elites.size(); ++k) out.push_back(elites[k].fitness[k]);
  return out;
}

ParameterSet aggregate_elites(const ParameterSet& base, const std::vector<Genome>& elites) {
  std::vector<EliteContribution> parts;
  for (std::size_t k = 0; k < elites.size(); ++k) {
    parts.push_back({*elites[k].tv, elites[k].fitness[k]});
  }
  return aggregate(base, parts);
}

}  // namespace

ParameterSet Engine::aggregated() const { return aggregate_elites(base_, elites()); }

TrainResult train(const RunConfig& config, const std::vector<ParameterSet>& experts,
                  const ParameterSet& base, const EvaluatorSet& evaluators,
                  const TrainObserver& observer) {
  Engine engine(config, experts, base, evaluators);
  if (observer.on_seeded) observer.on_seeded(engine);
  TrainResult result;
  for (int t = 1; t <= config.generations; ++t) {
    result.logs.push_back(engine.step());
    if (observer.on_generation) observer.on_generation(engine, result.logs.back());
  }
  result.bins = engine.bins();
  result.expert_fitness = engine.expert_fitness();
  result.archives = engine.archives();
  result.elites = engine.elites();
  result.weights = aggregation_weights(elite_quality(result.elites));
  result.aggregated = aggregate_elites(base, result.elites);
  result.evaluations = engine.evaluations();
  return result;
}

RunConfig fixed_quality_config(const RunConfig& config, int task) {
  RunConfig sub = config;
  sub.cycle = CycleMode::fixed;
  sub.fixed_task = task;
  const int k = config.tasks();
  // Generations t in 1..N with (t - 1) mod K == task.
  sub.generations = config.generations > task ? (config.generations - task + k - 1) / k : 0;
  sub.seed = mix64(config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(task + 1));
  sub.suite_seed = config.resolved_suite_seed();
  return sub;
}

FixedQualityResult train_fixed_quality(const RunConfig& config,
                                       const std::vector<ParameterSet>& experts,
                                       const ParameterSet& base, const EvaluatorSet& evaluators) {
  config.validate();
  FixedQualityResult out;
  for (int k = 0; k < config.tasks(); ++k) {
    out.runs.push_back(train(fixed_quality_config(config, k), experts, base, evaluators));
    out.elites.push_back(out.runs.back().elites[static_cast<std::size_t>(k)]);
  }
  out.weights = aggregation_weights(elite_quality(out.elites));
  out.aggregated = aggregate_elites(base, out.elites);
  return out;
}

}  // namespace cycleqd
