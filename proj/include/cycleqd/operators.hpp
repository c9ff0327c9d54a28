#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cycleqd/param_set.hpp"
#include "cycleqd/random.hpp"

namespace cycleqd {

struct CrossoverParams {
  double mu = 1.0;
  double sigma = 0.03;
  // Draws with |omega1 + omega2| below this are redrawn.
  double degenerate_threshold = 1e-6;
  int max_attempts = 100;

  void validate() const;
};

struct MutationParams {
  double w_max = 0.3;
  double gaussian_sigma = 0.01;

  void validate() const;
};

// Normalized mixing coefficients, each rounded to double from an exact
// double-double pair; first + second == 1 within one ulp.
struct MixingWeights {
  double first;
  double second;
};

MixingWeights normalized_weights(double omega1, double omega2);

// (omega1 * p1 + omega2 * p2) / (omega1 + omega2). Negative omegas are
// allowed; the denominator must be nonzero.
TaskVector merge_pair(const TaskVector& p1, const TaskVector& p2, double omega1, double omega2);

// Task-vector merging crossover: omega1, omega2 ~ N(mu, sigma^2) i.i.d.,
// redrawn while |omega1 + omega2| < degenerate_threshold.
TaskVector crossover(const TaskVector& p1, const TaskVector& p2, const CrossoverParams& params,
                     RandomStream& rng);

// Indices of entries that SVD mutation rescales: matrices with
// min(m, n) > 1. Everything else passes through.
std::vector<std::size_t> mutable_entries(const TaskVector& tv);

// Replaces each mutable entry U diag(s) V^T with U diag(s * w) V^T.
// factors[k] is w for the k-th mutable entry and must have length
// min(m, n) of that entry.
TaskVector scale_spectra(const TaskVector& child, std::span<const std::vector<double>> factors);

// scale_spectra with a fresh w ~ U[0, w_max]^r per mutable entry.
TaskVector svd_mutate(const TaskVector& child, const MutationParams& params, RandomStream& rng);

// Adds N(0, gaussian_sigma^2) noise to every element of every entry.
TaskVector gaussian_mutate(const TaskVector& child, const MutationParams& params,
                           RandomStream& rng);

// Softmax of the elite fitnesses.
std::vector<double> aggregation_weights(std::span<const double> fitness);

struct EliteContribution {
  std::reference_wrapper<const TaskVector> tv;
  double fitness;
};

// base + sum_k beta_k * tv_k with beta = softmax(fitness).
ParameterSet aggregate(const ParameterSet& base, std::span<const EliteContribution> elites);

}  // namespace cycleqd
