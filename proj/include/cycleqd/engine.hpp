#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cycleqd/archive.hpp"
#include "cycleqd/operators.hpp"
#include "cycleqd/param_set.hpp"
#include "cycleqd/task_suite.hpp"

namespace cycleqd {

enum class MutationMode { svd, gaussian, none };
enum class CycleMode { cyclic, fixed };

struct RunConfig {
  int generations = 300;
  // Bin count per task; empty means default_bins for every task.
  std::vector<int> bins;
  int default_bins = 15;
  // Explicit (lower, upper) per task; empty selects the expert-relative rule.
  std::vector<std::pair<double, double>> explicit_bounds;
  double lower_ratio = 0.85;
  double upper_ratio = 1.15;
  int cell_capacity = 1;

  CrossoverParams crossover;
  MutationParams mutation;
  MutationMode mutation_mode = MutationMode::svd;
  SamplingParams sampling;

  CycleMode cycle = CycleMode::cyclic;
  int fixed_task = 0;

  std::uint64_t seed = 1;
  int snapshot_every = 100;
  bool parallel_eval = false;

  SuiteSpec suite;
  // Suite seed; derived from `seed` when unset.
  std::optional<std::uint64_t> suite_seed;

  int tasks() const noexcept { return suite.tasks(); }
  // Per-task bin counts of length tasks().
  std::vector<int> resolved_bins() const;
  std::uint64_t resolved_suite_seed() const noexcept;
  // Suite spec with the resolved seed applied.
  SuiteSpec resolved_suite() const;
  void validate() const;
};

std::string_view to_string(MutationMode m);
std::string_view to_string(CycleMode m);
std::string_view to_string(SamplingMode m);

// Zero-based active task for generation t >= 1: (t - 1) mod K when cyclic,
// the fixed task otherwise.
int active_task(const RunConfig& config, int t);

// Per task k: lower = lower_ratio * min over experts, upper = upper_ratio *
// max over experts. expert_fitness[e][k] is expert e on task k. Throws
// DegenerateBounds when a task's bounds collapse.
BinSpec auto_bounds(const std::vector<std::vector<double>>& expert_fitness,
                    const std::vector<int>& bins, double lower_ratio = 0.85,
                    double upper_ratio = 1.15);

// Explicit bounds when configured, auto_bounds otherwise.
BinSpec resolve_bins(const RunConfig& config, const std::vector<std::vector<double>>& expert_fitness);

struct GenerationLog {
  int generation = 0;
  int active_task = 0;
  std::uint64_t parent1 = 0;
  std::uint64_t parent2 = 0;
  std::uint64_t child_id = 0;
  bool discarded = false;
  std::string failure;
  // Empty when discarded.
  std::vector<double> child_fitness;
  // Outcome per archive; empty when discarded.
  std::vector<Placement> placements;
  double eval_seconds = 0.0;
};

struct TrainResult {
  BinSpec bins;
  std::vector<std::vector<double>> expert_fitness;
  std::vector<Archive> archives;
  // elites[k] is elite_of(archives[k]).
  std::vector<Genome> elites;
  std::vector<double> weights;
  ParameterSet aggregated;
  std::vector<GenerationLog> logs;
  std::uint64_t evaluations = 0;
};

// Algorithm state for one run. Construction evaluates and seeds the
// experts; each step() runs one generation.
class Engine {
 public:
  Engine(RunConfig config, std::vector<ParameterSet> experts, ParameterSet base,
         EvaluatorSet evaluators);

  const RunConfig& config() const noexcept { return config_; }
  const ParameterSet& base() const noexcept { return base_; }
  const BinSpec& bins() const noexcept { return bins_; }
  const std::vector<std::vector<double>>& expert_fitness() const noexcept { return expert_fitness_; }
  const std::vector<Archive>& archives() const noexcept { return archives_; }
  // Last completed generation.
  int generation() const noexcept { return generation_; }
  // Single-task evaluations so far.
  std::uint64_t evaluations() const noexcept { return evaluations_; }

  GenerationLog step();

  std::vector<Genome> elites() const;
  // aggregate() over the per-archive elites, weighted by their quality.
  ParameterSet aggregated() const;

 private:
  RunConfig config_;
  ParameterSet base_;
  std::string base_id_;
  EvaluatorSet evaluators_;
  BinSpec bins_;
  std::vector<std::vector<double>> expert_fitness_;
  std::vector<Archive> archives_;
  int generation_ = 0;
  std::uint64_t next_id_ = 0;
  std::uint64_t evaluations_ = 0;
};

struct TrainObserver {
  // Called after seeding (generation 0) and after every generation.
  std::function<void(const Engine&)> on_seeded;
  std::function<void(const Engine&, const GenerationLog&)> on_generation;
};

// Runs config.generations steps and aggregates the elites.
TrainResult train(const RunConfig& config, const std::vector<ParameterSet>& experts,
                  const ParameterSet& base, const EvaluatorSet& evaluators,
                  const TrainObserver& observer = {});

// Fixed-quality ablation: one run per task k with the quality fixed to k
// and as many generations as task k is active in a cyclic run of the same
// budget; the result aggregates the elite of archive k from run k.
struct FixedQualityResult {
  std::vector<TrainResult> runs;
  std::vector<Genome> elites;
  std::vector<double> weights;
  ParameterSet aggregated;
};

// Config of the k-th sub-run of the fixed-quality ablation.
RunConfig fixed_quality_config(const RunConfig& config, int task);

FixedQualityResult train_fixed_quality(const RunConfig& config,
                                       const std::vector<ParameterSet>& experts,
                                       const ParameterSet& base, const EvaluatorSet& evaluators);

}  // namespace cycleqd
