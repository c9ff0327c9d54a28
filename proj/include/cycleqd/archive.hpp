#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cycleqd/param_set.hpp"
#include "cycleqd/random.hpp"

namespace cycleqd {

// A candidate model: its task vector plus the cached fitness on every task.
struct Genome {
  std::uint64_t id = 0;
  int birth_generation = 0;
  std::vector<double> fitness;
  std::shared_ptr<const TaskVector> tv;
};

// Binning of one task's fitness axis.
struct TaskBins {
  double lower = 0.0;
  double upper = 1.0;
  int bins = 15;

  void validate() const;
  bool operator==(const TaskBins&) const = default;
};

// One TaskBins per task; the same spec serves all K archives.
struct BinSpec {
  std::vector<TaskBins> tasks;

  std::size_t task_count() const noexcept { return tasks.size(); }
  void validate() const;
  bool operator==(const BinSpec&) const = default;
};

// floor((f - lower) / width) clamped into [0, bins - 1].
int bin_index(double f, const TaskBins& spec);

enum class Placement { inserted, replaced, rejected };
std::string_view to_string(Placement p);

// MAP-Elites lattice for one quality task. Cells are indexed by the bins of
// every other task (the behavior characteristics) and hold at most one
// genome; a challenger replaces the incumbent only with strictly greater
// quality.
class Archive {
 public:
  Archive(int quality_task, BinSpec spec);

  int quality_task() const noexcept { return quality_task_; }
  const BinSpec& spec() const noexcept { return spec_; }
  std::size_t task_count() const noexcept { return spec_.task_count(); }
  // Tasks acting as BCs, ascending.
  const std::vector<int>& bc_tasks() const noexcept { return bc_tasks_; }

  // prod over BC tasks of their bin counts.
  std::size_t lattice_size() const noexcept { return lattice_size_; }
  // Row-major over bc_tasks(): the first BC task is the slowest axis.
  std::size_t cell_of(std::span<const double> fitness) const;
  std::vector<int> coordinates(std::size_t cell) const;
  std::size_t cell_at(std::span<const int> coordinates) const;

  const Genome* at(std::size_t cell) const;
  // Occupied cells in ascending cell order.
  const std::map<std::size_t, Genome>& occupied() const noexcept { return cells_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool empty() const noexcept { return cells_.empty(); }

  Placement update(const Genome& genome);

 private:
  int quality_task_;
  BinSpec spec_;
  std::vector<int> bc_tasks_;
  std::vector<std::size_t> strides_;
  std::size_t lattice_size_ = 1;
  std::map<std::size_t, Genome> cells_;
};

// Passes every expert through every archive.
void seed_with_experts(std::span<Archive> archives, std::span<const Genome> experts);

enum class SamplingMode { elite, random };

struct SamplingParams {
  double alpha_low = 0.5;
  double alpha_high = 0.8;
  SamplingMode mode = SamplingMode::elite;

  void validate() const;
};

struct SamplingWeights {
  std::vector<std::size_t> cells;  // occupied cells, ascending
  std::vector<double> probabilities;
};

// Elite mode: gamma_j = prod over all K tasks of
//   alpha_low + norm(f_j,i) * (alpha_high - alpha_low)
// with min-max normalization over the occupied genomes (0.5 when a task's
// max equals its min); P_j = gamma_j / sum(gamma). Random mode: uniform.
SamplingWeights sampling_weights(const Archive& archive, const SamplingParams& params);

// Two independent draws with replacement.
std::pair<Genome, Genome> sample_parents(const Archive& archive, const SamplingParams& params,
                                         RandomStream& rng);

// Highest quality; ties go to the later birth generation, then larger id.
const Genome& elite_of(const Archive& archive);

}  // namespace cycleqd
