#include "cycleqd/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "compensated.hpp"
#include "cycleqd/error.hpp"
#include "cycleqd/spectral.hpp"

namespace cycleqd {

void CrossoverParams::validate() const {
  if (!std::isfinite(mu)) throw ConfigError("crossover.mu must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("crossover.sigma must be > 0");
  if (!(degenerate_threshold > 0.0) || !std::isfinite(degenerate_threshold)) {
    throw ConfigError("crossover.degenerate_threshold must be > 0");
  }
  if (max_attempts < 1) throw ConfigError("crossover.max_attempts must be >= 1");
}

void MutationParams::validate() const {
  if (!(w_max > 0.0) || !std::isfinite(w_max)) throw ConfigError("mutation.w_max must be > 0");
  if (!(gaussian_sigma > 0.0) || !std::isfinite(gaussian_sigma)) {
    throw ConfigError("mutation.gaussian_sigma must be > 0");
  }
}

namespace {

struct ExactWeights {
  detail::DoubleDouble first;
  detail::DoubleDouble second;
};

// omega1 / (omega1 + omega2) and its complement, each as a double-double,
// so the pair sums to 1 far below double resolution.
ExactWeights exact_weights(double omega1, double omega2) {
  const auto sum = detail::two_sum(omega1, omega2);
  if (sum.hi == 0.0 || !std::isfinite(sum.hi)) {
    throw DegenerateCrossover("crossover: omega1 + omega2 is zero");
  }
  const double q = omega1 / sum.hi;
  // omega1 - q * sum, with the q * sum.hi product taken exactly.
  const double rem = -std::fma(q, sum.hi, -omega1) - q * sum.lo;
  const auto first = detail::two_sum(q, rem / sum.hi);
  const auto t = detail::two_sum(1.0, -first.hi);
  const auto second = detail::two_sum(t.hi, t.lo - first.lo);
  return {first, second};
}

}  // namespace

MixingWeights normalized_weights(double omega1, double omega2) {
  const auto w = exact_weights(omega1, omega2);
  return {w.first.hi, w.second.hi};
}

TaskVector merge_pair(const TaskVector& p1, const TaskVector& p2, double omega1, double omega2) {
  if (!p1.compatible_with(p2)) {
    throw IncompatibleParameters("crossover: parents are not relative to the same base");
  }
  const auto w = exact_weights(omega1, omega2);
  // p2 + w1 * (p1 - p2): equal parents cancel exactly, so crossover(p, p) == p.
  const ScaledTerm diff_terms[] = {{1.0, p1}, {-1.0, p2}};
  const TaskVector diff = combine(diff_terms);
  const ScaledTerm terms[] = {{1.0, p2}, {w.first.hi, diff, w.first.lo}};
  return combine(terms);
}

TaskVector crossover(const TaskVector& p1, const TaskVector& p2, const CrossoverParams& params,
                     RandomStream& rng) {
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    const double omega1 = rng.normal(params.mu, params.sigma);
    const double omega2 = rng.normal(params.mu, params.sigma);
    if (std::abs(omega1 + omega2) >= params.degenerate_threshold) {
      return merge_pair(p1, p2, omega1, omega2);
    }
  }
  throw DegenerateCrossover("crossover: |omega1 + omega2| stayed below " +
                            std::to_string(params.degenerate_threshold) + " for " +
                            std::to_string(params.max_attempts) + " draws");
}

std::vector<std::size_t> mutable_entries(const TaskVector& tv) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tv.entries().size(); ++i) {
    const auto& t = tv.entries()[i].tensor;
    if (t.rank() == 2 && t.max_rank() > 1) out.push_back(i);
  }
  return out;
}

namespace {

TaskVector apply_scaling(const TaskVector& child, const SvdFactorization& factorization,
                         std::span<const std::vector<double>> factors) {
  std::vector<Entry> entries;
  std::vector<std::vector<double>> residual;
  entries.reserve(child.entries().size());
  residual.reserve(child.entries().size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < child.entries().size(); ++i) {
    const auto& entry = child.entries()[i];
    const auto& f = factorization.entries[i];
    if (f.pass_through) {
      entries.push_back(entry);
      const auto r = child.residual(i);
      residual.emplace_back(r.begin(), r.end());
      continue;
    }
    if (next >= factors.size()) {
      throw InvalidValue("scale_spectra: missing factors for entry '" + entry.name + "'");
    }
    const auto& w = factors[next++];
    if (w.size() != f.rank()) {
      throw InvalidValue("scale_spectra: entry '" + entry.name + "' needs " +
                         std::to_string(f.rank()) + " factors, got " + std::to_string(w.size()));
    }
    std::vector<double> scaled(f.rank());
    for (std::size_t k = 0; k < scaled.size(); ++k) scaled[k] = f.singular_values[k] * w[k];
    entries.push_back({entry.name, Tensor::from_matrix(f.reconstruct(scaled))});
    residual.emplace_back();
  }
  if (next != factors.size()) {
    throw InvalidValue("scale_spectra: " + std::to_string(factors.size()) +
                       " factor vectors for " + std::to_string(next) + " mutable entries");
  }
  return TaskVector(ParameterSet(std::move(entries)), child.base_id(), std::move(residual));
}

}  // namespace

TaskVector scale_spectra(const TaskVector& child, std::span<const std::vector<double>> factors) {
  return apply_scaling(child, svd_factorize(child), factors);
}

TaskVector svd_mutate(const TaskVector& child, const MutationParams& params, RandomStream& rng) {
  const SvdFactorization factorization = svd_factorize(child);
  std::vector<std::vector<double>> factors;
  for (const auto& f : factorization.entries) {
    if (f.pass_through) continue;
    std::vector<double> w(f.rank());
    for (double& x : w) x = rng.uniform(0.0, params.w_max);
    factors.push_back(std::move(w));
  }
  return apply_scaling(child, factorization, factors);
}

TaskVector gaussian_mutate(const TaskVector& child, const MutationParams& params,
                           RandomStream& rng) {
  std::vector<Entry> entries;
  entries.reserve(child.entries().size());
  for (const auto& e : child.entries()) {
    std::vector<double> values = e.tensor.values();
    for (double& v : values) v += rng.normal(0.0, params.gaussian_sigma);
    entries.push_back({e.name, Tensor::reshaped_like(e.tensor, std::move(values))});
  }
  return TaskVector(ParameterSet(std::move(entries)), child.base_id(), child.residuals());
}

std::vector<double> aggregation_weights(std::span<const double> fitness) {
  if (fitness.empty()) throw InvalidValue("aggregate: no elites");
  for (double f : fitness) {
    if (!std::isfinite(f)) throw InvalidFitness("aggregate: non-finite elite fitness");
  }
  const double top = *std::max_element(fitness.begin(), fitness.end());
  std::vector<double> beta(fitness.size());
  double total = 0.0;
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    beta[i] = std::exp(fitness[i] - top);
    total += beta[i];
  }
  for (double& b : beta) b /= total;
  return beta;
}

ParameterSet aggregate(const ParameterSet& base, std::span<const EliteContribution> elites) {
  std::vector<double> fitness;
  fitness.reserve(elites.size());
  for (const auto& e : elites) fitness.push_back(e.fitness);
  const auto beta = aggregation_weights(fitness);
  std::vector<ScaledTerm> terms;
  terms.reserve(elites.size());
  for (std::size_t k = 0; k < elites.size(); ++k) terms.push_back({beta[k], elites[k].tv});
  return add_scaled(base, terms);
}

}  // namespace cycleqd
