#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cycleqd {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A dense real tensor of rank 1 (vector) or rank 2 (row-major matrix).
// Values are finite and fixed at construction.
class Tensor {
 public:
  Tensor() = default;

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor from_matrix(const RowMatrix& m);
  static Tensor zeros_like(const Tensor& other);
  // Builds a tensor shaped like `other` from replacement values.
  static Tensor reshaped_like(const Tensor& other, std::vector<double> values);

  int rank() const noexcept { return rank_; }
  std::size_t rows() const noexcept { return rows_; }
  // 1 for vectors.
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::vector<std::size_t> shape() const;

  // min(rows, cols) for matrices; 1 for vectors.
  std::size_t max_rank() const noexcept;

  const std::vector<double>& values() const noexcept { return values_; }
  Eigen::Map<const RowMatrix> as_matrix() const;

  bool same_shape(const Tensor& other) const noexcept {
    return rank_ == other.rank_ && rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool operator==(const Tensor& other) const = default;

 private:
  Tensor(int rank, std::size_t rows, std::size_t cols, std::vector<double> values);

  int rank_ = 1;
  std::size_t rows_ = 0;
  std::size_t cols_ = 1;
  std::vector<double> values_;
};

struct Entry {
  std::string name;
  Tensor tensor;

  bool operator==(const Entry& other) const = default;
};

// Ordered named tensors standing in for model weights. Names are unique
// and the order is part of the identity of the set.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  const Tensor* find(std::string_view name) const;
  std::size_t element_count() const noexcept;

  // Identical name/shape sequences.
  bool shape_compatible(const ParameterSet& other) const noexcept;

  // Content hash over names, shapes and value bits; used as the base id of
  // task vectors derived from this set.
  std::string fingerprint() const;

  ParameterSet zeros_like() const;
  std::vector<double> flatten() const;

  bool operator==(const ParameterSet& other) const = default;

 private:
  std::vector<Entry> entries_;
};

// Parameter delta relative to a shared base model.
//
// Each entry may carry a low-order residual so the stored delta is the
// unevaluated sum deltas + residual. compute_task_vector fills it with the
// exact rounding error of the subtraction, which makes base + tv reproduce
// the model bit for bit.
class TaskVector {
 public:
  TaskVector() = default;
  TaskVector(ParameterSet deltas, std::string base_id);
  TaskVector(ParameterSet deltas, std::string base_id, std::vector<std::vector<double>> residual);

  static TaskVector zeros_for(const ParameterSet& base);

  const ParameterSet& deltas() const noexcept { return deltas_; }
  const std::vector<Entry>& entries() const noexcept { return deltas_.entries(); }
  const std::string& base_id() const noexcept { return base_id_; }

  bool has_residual() const noexcept { return !residual_.empty(); }
  // Empty span when the entry carries no residual.
  std::span<const double> residual(std::size_t entry) const noexcept;
  const std::vector<std::vector<double>>& residuals() const noexcept { return residual_; }

  bool compatible_with(const TaskVector& other) const noexcept {
    return base_id_ == other.base_id_ && deltas_.shape_compatible(other.deltas_);
  }

  bool operator==(const TaskVector& other) const = default;

 private:
  ParameterSet deltas_;
  std::string base_id_;
  std::vector<std::vector<double>> residual_;
};

struct ScaledTerm {
  double coefficient;
  std::reference_wrapper<const TaskVector> tv;
  // Low-order part of the coefficient, for callers that hold it exactly.
  double coefficient_low = 0.0;
};

// Entrywise model - base.
TaskVector compute_task_vector(const ParameterSet& model, const ParameterSet& base);

// base + sum(coefficient * tv), entrywise.
ParameterSet add_scaled(const ParameterSet& base, std::span<const ScaledTerm> terms);

// sum(coefficient * tv) over task vectors sharing one base. Requires at
// least one term. The result keeps a residual, so identities such as
// 0.25*tv + 0.75*tv == tv hold exactly.
TaskVector combine(std::span<const ScaledTerm> terms);

// Squared Euclidean distance over the flattened parameters.
double squared_distance(const ParameterSet& a, const ParameterSet& b);

}  // namespace cycleqd
