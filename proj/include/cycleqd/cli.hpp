#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cycleqd/engine.hpp"
#include "cycleqd/task_suite.hpp"

namespace cycleqd::cli {

namespace fs = std::filesystem;

// Files of one run directory.
struct ExperimentLayout {
  fs::path root;

  fs::path manifest() const { return root / "manifest.json"; }
  fs::path suite() const { return root / "suite.json"; }
  fs::path generations_log() const { return root / "logs" / "generations.csv"; }
  // Wall-clock evaluation times; kept apart so generations.csv is reproducible.
  fs::path timing_log() const { return root / "logs" / "timing.csv"; }
  fs::path failures_log() const { return root / "logs" / "failures.txt"; }
  fs::path snapshot_dir(int generation) const;
  fs::path snapshot(int generation, int archive) const;
  fs::path heatmap(int generation, int archive) const;
  fs::path aggregated() const { return root / "result" / "aggregated.json"; }
  fs::path summary() const { return root / "result" / "summary.json"; }
};

std::string archive_file_name(int archive);

// Header: one "bin_task<j>" column per BC task, then quality and genome_id.
// One row per lattice cell in cell order; empty cells carry kEmptyMarker.
std::string heatmap_csv(const Archive& archive);
inline constexpr const char* kEmptyMarker = "NA";

// Family, task count, dimensions, seed and derived constants.
nlohmann::json suite_descriptor(const TaskSuite& suite);
// Nearest suite.json in `start` or its ancestors.
std::optional<fs::path> find_suite(const fs::path& start);
TaskSuite load_suite(const fs::path& suite_json);

// {"config": resolved config, "derived": {"bins", "expert_fitness", "suite"}}.
nlohmann::json manifest_json(const RunConfig& config, const BinSpec& bins,
                             const std::vector<std::vector<double>>& expert_fitness,
                             const TaskSuite& suite);

struct EliteRecord {
  int archive;
  std::uint64_t id;
  double quality;
  double weight;
};

// {"fitness", "mean", "elites"}: the aggregated model re-evaluated on every
// task, plus the elites and weights that produced it.
nlohmann::json summary_json(const ParameterSet& aggregated, const EvaluatorSet& evaluators,
                            const std::vector<EliteRecord>& elites);

std::vector<EliteRecord> elite_records(const std::vector<Genome>& elites,
                                       const std::vector<double>& weights);

// Writes snapshot JSON and heatmap CSV for every archive at `generation`.
void write_snapshot(const ExperimentLayout& layout, int generation,
                    const std::vector<Archive>& archives);

// Reads every archive-<k>.json in a snapshot directory, in archive order.
std::vector<Archive> read_snapshot(const fs::path& snapshot_dir);

struct RunOutput {
  TrainResult result;
  nlohmann::json summary;
};

// Builds the suite, trains, and writes the full layout under `root`.
// Generation rows are flushed as they complete, so a failed run keeps its
// partial logs.
RunOutput execute_run(const RunConfig& config, const fs::path& root);

// Mean-over-tasks fitness of base + mean of the expert task vectors.
std::vector<double> average_merge_fitness(const TaskSuite& suite);

struct AblationVariant {
  int trial;
  std::string label;
  RunConfig config;
  bool fixed_quality;
};

// The five ablation trials built on `base`, in trial order.
std::vector<AblationVariant> ablation_variants(const RunConfig& base);

struct AblationRow {
  int trial;
  std::string label;
  std::uint64_t seed;
  std::vector<double> fitness;
  double mean;
};

// Runs one variant for one seed and writes its layout under `root`.
AblationRow execute_variant(const AblationVariant& variant, std::uint64_t seed,
                            const fs::path& root);

std::string ablation_csv(const std::vector<AblationRow>& rows);

struct GlobalOptions {
  std::optional<fs::path> config;
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> generations;
  bool quiet = false;
  bool force = false;
  // Merged on top of the config file.
  nlohmann::json overrides = nlohmann::json::object();
};

// Config file (or defaults) with overrides, seed and generations applied.
RunConfig resolve_config(const GlobalOptions& options);

// Default output directory for a command: $CYCLEQD_OUTPUT_ROOT (or
// "runs") joined with `name`.
fs::path default_output(const std::string& name);

int cmd_run(const GlobalOptions& options, std::ostream& out);
int cmd_ablate(const GlobalOptions& options, const std::vector<std::uint64_t>& seeds,
               std::ostream& out);
int cmd_aggregate(const GlobalOptions& options, const fs::path& snapshot_dir, std::ostream& out);
int cmd_similarity(const GlobalOptions& options, const fs::path& model_a, const fs::path& model_b,
                   const fs::path& base, std::ostream& out);
int cmd_heatmap(const GlobalOptions& options, const fs::path& snapshot_dir, std::ostream& out);

// Parses argv and dispatches. Exit status: 0 success, 1 runtime failure,
// 2 configuration or usage error.
int main(int argc, char** argv);

}  // namespace cycleqd::cli
