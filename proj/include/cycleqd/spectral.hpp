#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cycleqd/param_set.hpp"

namespace cycleqd {

// Thin SVD of one task-vector entry. Pass-through entries (vectors and
// matrices with min(m, n) == 1) carry no factors.
struct EntryFactorization {
  std::string name;
  bool pass_through = true;
  RowMatrix left;                        // m x r
  std::vector<double> singular_values;   // length r, descending, >= 0
  RowMatrix right;                       // n x r
  // Components below kNegligibleRatio * sigma_max; retained, only flagged.
  std::vector<bool> negligible;

  std::size_t rank() const noexcept { return singular_values.size(); }
  // U * diag(scaled) * V^T for a replacement spectrum of length rank().
  RowMatrix reconstruct(const std::vector<double>& scaled) const;
  RowMatrix reconstruct() const { return reconstruct(singular_values); }
};

struct SvdFactorization {
  std::vector<EntryFactorization> entries;
};

inline constexpr double kNegligibleRatio = 1e-10;

// Factorizes every 2-D entry with min(m, n) > 1. Throws NumericalFailure
// naming the entry when the decomposition does not converge.
SvdFactorization svd_factorize(const TaskVector& tv);

// Singular values of one matrix, descending.
std::vector<double> singular_values(const Tensor& matrix);

struct SimilarityBreakdown {
  struct EntryCosine {
    std::string name;
    double cosine;
  };
  double similarity = 0.0;
  std::vector<EntryCosine> per_entry;
};

// Mean cosine between the singular-value vectors of matching entries of two
// task vectors, over the entries with min(m, n) > 1. Two all-zero spectra
// count as cosine 1; one zero spectrum against a nonzero one counts as 0.
// Throws UndefinedSimilarity when no entry qualifies.
// Cosine of two singular-value vectors of equal length: 1 when both are
// zero, 0 when exactly one is.
double spectrum_cosine(const std::vector<double>& a, const std::vector<double>& b);

SimilarityBreakdown similarity_breakdown(const TaskVector& a, const TaskVector& b);
double model_similarity(const TaskVector& a, const TaskVector& b);

}  // namespace cycleqd
