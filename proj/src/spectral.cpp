#include "cycleqd/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "cycleqd/error.hpp"

namespace cycleqd {

namespace {

bool qualifies(const Tensor& t) { return t.rank() == 2 && t.max_rank() > 1; }

Eigen::JacobiSVD<Eigen::MatrixXd> decompose(const std::string& name, const Tensor& t,
                                            unsigned int options) {
  const Eigen::MatrixXd m = t.as_matrix();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, options);
  if (svd.info() != Eigen::Success) throw NumericalFailure(name, "SVD did not converge");
  const auto& s = svd.singularValues();
  if (!s.allFinite()) throw NumericalFailure(name, "non-finite singular values");
  return svd;
}

}  // namespace

RowMatrix EntryFactorization::reconstruct(const std::vector<double>& scaled) const {
  const Eigen::Map<const Eigen::VectorXd> s(scaled.data(), static_cast<Eigen::Index>(scaled.size()));
  return left * s.asDiagonal() * right.transpose();
}

SvdFactorization svd_factorize(const TaskVector& tv) {
  SvdFactorization out;
  out.entries.reserve(tv.entries().size());
  for (const auto& e : tv.entries()) {
    EntryFactorization f;
    f.name = e.name;
    if (qualifies(e.tensor)) {
      const auto svd = decompose(e.name, e.tensor, Eigen::ComputeThinU | Eigen::ComputeThinV);
      f.pass_through = false;
      f.left = svd.matrixU();
      f.right = svd.matrixV();
      const auto& s = svd.singularValues();
      f.singular_values.assign(s.data(), s.data() + s.size());
      const double cutoff = s.size() > 0 ? kNegligibleRatio * s(0) : 0.0;
      f.negligible.reserve(f.singular_values.size());
      for (double v : f.singular_values) f.negligible.push_back(v <= cutoff);
    }
    out.entries.push_back(std::move(f));
  }
  return out;
}

std::vector<double> singular_values(const Tensor& matrix) {
  if (matrix.rank() != 2) throw InvalidValue("singular_values: expected a matrix");
  const auto svd = decompose("matrix", matrix, 0);
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

double spectrum_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvalidValue("spectrum_cosine: lengths differ");
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    ab += a[i] * b[i];
  }
  if (aa == 0.0 && bb == 0.0) return 1.0;
  if (aa == 0.0 || bb == 0.0) return 0.0;
  // sqrt(x * x) == x exactly, so identical spectra give exactly 1.
  return std::clamp(ab / std::sqrt(aa * bb), 0.0, 1.0);
}

SimilarityBreakdown similarity_breakdown(const TaskVector& a, const TaskVector& b) {
  if (!a.deltas().shape_compatible(b.deltas())) {
    throw IncompatibleParameters("model_similarity: task vectors are not shape-compatible");
  }
  SimilarityBreakdown out;
  double total = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    const auto& ea = a.entries()[i];
    if (!qualifies(ea.tensor)) continue;
    const auto sa = decompose(ea.name, ea.tensor, 0).singularValues();
    const auto sb = decompose(ea.name, b.entries()[i].tensor, 0).singularValues();
    const double cosine = spectrum_cosine({sa.data(), sa.data() + sa.size()},
                                          {sb.data(), sb.data() + sb.size()});
    out.per_entry.push_back({ea.name, cosine});
    total += cosine;
  }
  if (out.per_entry.empty()) {
    throw UndefinedSimilarity(
        "model_similarity: no weight matrix with rank greater than 1 to compare");
  }
  out.similarity = total / static_cast<double>(out.per_entry.size());
  return out;
}

double model_similarity(const TaskVector& a, const TaskVector& b) {
  return similarity_breakdown(a, b).similarity;
}

}  // namespace cycleqd
