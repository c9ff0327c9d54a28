#include "cycleqd/archive.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cycleqd/error.hpp"

namespace cycleqd {

void TaskBins::validate() const {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    throw ConfigError("bin bounds must satisfy lower < upper (got " + std::to_string(lower) +
                      ", " + std::to_string(upper) + ")");
  }
  if (bins < 1) throw ConfigError("bin count must be >= 1");
}

void BinSpec::validate() const {
  if (tasks.size() < 2) throw ConfigError("a bin spec needs at least two tasks");
  for (const auto& t : tasks) t.validate();
}

int bin_index(double f, const TaskBins& spec) {
  const double width = (spec.upper - spec.lower) / spec.bins;
  const double raw = std::floor((f - spec.lower) / width);
  if (!(raw > 0.0)) return 0;
  if (raw >= spec.bins - 1) return spec.bins - 1;
  return static_cast<int>(raw);
}

std::string_view to_string(Placement p) {
  switch (p) {
    case Placement::inserted: return "inserted";
    case Placement::replaced: return "replaced";
    case Placement::rejected: return "rejected";
  }
  return "unknown";
}

Archive::Archive(int quality_task, BinSpec spec) : quality_task_(quality_task), spec_(std::move(spec)) {
  spec_.validate();
  const int k = static_cast<int>(spec_.task_count());
  if (quality_task_ < 0 || quality_task_ >= k) {
    throw ConfigError("quality task " + std::to_string(quality_task_) + " out of range");
  }
  for (int t = 0; t < k; ++t) {
    if (t != quality_task_) bc_tasks_.push_back(t);
  }
  strides_.assign(bc_tasks_.size(), 1);
  for (std::size_t i = bc_tasks_.size(); i-- > 0;) {
    strides_[i] = lattice_size_;
    const auto bins = static_cast<std::size_t>(spec_.tasks[bc_tasks_[i]].bins);
    if (lattice_size_ > std::numeric_limits<std::size_t>::max() / bins) {
      throw ConfigError("archive lattice is too large");
    }
    lattice_size_ *= bins;
  }
}

std::size_t Archive::cell_of(std::span<const double> fitness) const {
  if (fitness.size() != task_count()) {
    throw InvalidFitness("fitness vector has " + std::to_string(fitness.size()) +
                         " values, expected " + std::to_string(task_count()));
  }
  std::size_t cell = 0;
  for (std::size_t i = 0; i < bc_tasks_.size(); ++i) {
    const int t = bc_tasks_[i];
    cell += strides_[i] * static_cast<std::size_t>(bin_index(fitness[t], spec_.tasks[t]));
  }
  return cell;
}

std::vector<int> Archive::coordinates(std::size_t cell) const {
  std::vector<int> out(bc_tasks_.size());
  for (std::size_t i = 0; i < bc_tasks_.size(); ++i) {
    out[i] = static_cast<int>(cell / strides_[i]);
    cell %= strides_[i];
  }
  return out;
}

std::size_t Archive::cell_at(std::span<const int> coordinates) const {
  if (coordinates.size() != bc_tasks_.size()) throw InvalidValue("wrong number of coordinates");
  std::size_t cell = 0;
  for (std::size_t i = 0; i < bc_tasks_.size(); ++i) {
    const int bins = spec_.tasks[bc_tasks_[i]].bins;
    if (coordinates[i] < 0 || coordinates[i] >= bins) throw InvalidValue("coordinate out of range");
    cell += strides_[i] * static_cast<std::size_t>(coordinates[i]);
  }
  return cell;
}

const Genome* Archive::at(std::size_t cell) const {
  const auto it = cells_.find(cell);
  return it == cells_.end() ? nullptr : &it->second;
}

namespace {

void check_genome(const Genome& g, std::size_t k) {
  if (g.fitness.size() != k) {
    throw InvalidFitness("genome " + std::to_string(g.id) + " has " +
                         std::to_string(g.fitness.size()) + " fitness values, expected " +
                         std::to_string(k));
  }
  for (double f : g.fitness) {
    if (!std::isfinite(f)) {
      throw InvalidFitness("genome " + std::to_string(g.id) + " has a non-finite fitness");
    }
  }
}

}  // namespace

Placement Archive::update(const Genome& genome) {
  check_genome(genome, task_count());
  const std::size_t cell = cell_of(genome.fitness);
  auto [it, inserted] = cells_.try_emplace(cell, genome);
  if (inserted) return Placement::inserted;
  if (genome.fitness[quality_task_] > it->second.fitness[quality_task_]) {
    it->second = genome;
    return Placement::replaced;
  }
  return Placement::rejected;
}

void seed_with_experts(std::span<Archive> archives, std::span<const Genome> experts) {
  for (auto& archive : archives) {
    for (const auto& expert : experts) archive.update(expert);
  }
}

void SamplingParams::validate() const {
  if (!std::isfinite(alpha_low) || !std::isfinite(alpha_high) || alpha_low < 0.0 ||
      alpha_low > alpha_high) {
    throw ConfigError("sampling requires 0 <= alpha_low <= alpha_high");
  }
}

SamplingWeights sampling_weights(const Archive& archive, const SamplingParams& params) {
  if (archive.empty()) throw EmptyArchive("sampling from an empty archive");
  SamplingWeights out;
  const std::size_t n = archive.size();
  out.cells.reserve(n);
  for (const auto& [cell, g] : archive.occupied()) out.cells.push_back(cell);

  if (params.mode == SamplingMode::random) {
    out.probabilities.assign(n, 1.0 / static_cast<double>(n));
    return out;
  }

  const std::size_t k = archive.task_count();
  std::vector<double> lo(k, std::numeric_limits<double>::infinity());
  std::vector<double> hi(k, -std::numeric_limits<double>::infinity());
  for (const auto& [cell, g] : archive.occupied()) {
    for (std::size_t t = 0; t < k; ++t) {
      lo[t] = std::min(lo[t], g.fitness[t]);
      hi[t] = std::max(hi[t], g.fitness[t]);
    }
  }
  const double span = params.alpha_high - params.alpha_low;
  std::vector<double> gamma;
  gamma.reserve(n);
  double total = 0.0;
  for (const auto& [cell, g] : archive.occupied()) {
    double product = 1.0;
    for (std::size_t t = 0; t < k; ++t) {
      const double norm = hi[t] > lo[t] ? (g.fitness[t] - lo[t]) / (hi[t] - lo[t]) : 0.5;
      product *= params.alpha_low + norm * span;
    }
    gamma.push_back(product);
    total += product;
  }
  if (total > 0.0) {
    for (double& g : gamma) g /= total;
  } else {
    // Only reachable with alpha_low == 0.
    gamma.assign(n, 1.0 / static_cast<double>(n));
  }
  out.probabilities = std::move(gamma);
  return out;
}

std::pair<Genome, Genome> sample_parents(const Archive& archive, const SamplingParams& params,
                                         RandomStream& rng) {
  const auto weights = sampling_weights(archive, params);
  const std::size_t a = rng.categorical(weights.probabilities);
  const std::size_t b = rng.categorical(weights.probabilities);
  return {*archive.at(weights.cells[a]), *archive.at(weights.cells[b])};
}

const Genome& elite_of(const Archive& archive) {
  if (archive.empty()) {
    throw EmptyArchive("archive for task " + std::to_string(archive.quality_task()) +
                       " is empty");
  }
  const int q = archive.quality_task();
  const Genome* best = nullptr;
  for (const auto& [cell, g] : archive.occupied()) {
    if (best == nullptr) {
      best = &g;
      continue;
    }
    const double fg = g.fitness[q];
    const double fb = best->fitness[q];
    if (fg > fb || (fg == fb && (g.birth_generation > best->birth_generation ||
                                 (g.birth_generation == best->birth_generation && g.id > best->id)))) {
      best = &g;
    }
  }
  return *best;
}

}  // namespace cycleqd
