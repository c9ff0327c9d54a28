#include "cycleqd/param_set.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <unordered_set>

#include "compensated.hpp"
#include "cycleqd/error.hpp"

namespace cycleqd {

namespace {

void require_finite(const std::vector<double>& values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidValue("tensor contains a non-finite value");
  }
}

std::string describe_shape(const Tensor& t) {
  if (t.rank() == 1) return "[" + std::to_string(t.rows()) + "]";
  return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

void require_compatible(const ParameterSet& a, const ParameterSet& b, const char* what) {
  if (a.shape_compatible(b)) return;
  std::string msg = std::string(what) + ": parameter sets are not shape-compatible";
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].name != b[i].name || !a[i].tensor.same_shape(b[i].tensor)) {
      msg += " (entry " + std::to_string(i) + ": '" + a[i].name + "' " +
             describe_shape(a[i].tensor) + " vs '" + b[i].name + "' " +
             describe_shape(b[i].tensor) + ")";
      throw IncompatibleParameters(msg);
    }
  }
  msg += " (entry counts " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")";
  throw IncompatibleParameters(msg);
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

Tensor::Tensor(int rank, std::size_t rows, std::size_t cols, std::vector<double> values)
    : rank_(rank), rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InvalidValue("tensor value count " + std::to_string(values_.size()) +
                       " does not match its shape");
  }
  require_finite(values_);
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(1, n, 1, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor(2, rows, cols, std::move(values));
}

Tensor Tensor::from_matrix(const RowMatrix& m) {
  std::vector<double> values(m.data(), m.data() + m.size());
  return Tensor(2, static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                std::move(values));
}

Tensor Tensor::zeros_like(const Tensor& other) {
  return Tensor(other.rank_, other.rows_, other.cols_, std::vector<double>(other.size(), 0.0));
}

Tensor Tensor::reshaped_like(const Tensor& other, std::vector<double> values) {
  return Tensor(other.rank_, other.rows_, other.cols_, std::move(values));
}

std::vector<std::size_t> Tensor::shape() const {
  if (rank_ == 1) return {rows_};
  return {rows_, cols_};
}

std::size_t Tensor::max_rank() const noexcept {
  if (rank_ == 1) return 1;
  return std::min(rows_, cols_);
}

Eigen::Map<const RowMatrix> Tensor::as_matrix() const {
  return {values_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
}

ParameterSet::ParameterSet(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& e : entries_) {
    if (e.name.empty()) throw InvalidValue("parameter entry with an empty name");
    if (!seen.insert(e.name).second) {
      throw InvalidValue("duplicate parameter entry name '" + e.name + "'");
    }
  }
}

const Tensor* ParameterSet::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e.tensor;
  }
  return nullptr;
}

std::size_t ParameterSet::element_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

bool ParameterSet::shape_compatible(const ParameterSet& other) const noexcept {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (!entries_[i].tensor.same_shape(other.entries_[i].tensor)) return false;
  }
  return true;
}

std::string ParameterSet::fingerprint() const {
  Fnv1a h;
  for (const auto& e : entries_) {
    h.bytes(e.name.data(), e.name.size());
    h.u64(static_cast<std::uint64_t>(e.tensor.rank()));
    h.u64(e.tensor.rows());
    h.u64(e.tensor.cols());
    for (double v : e.tensor.values()) h.u64(std::bit_cast<std::uint64_t>(v));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.value()));
  return buf;
}

ParameterSet ParameterSet::zeros_like() const {
  std::vector<Entry> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({e.name, Tensor::zeros_like(e.tensor)});
  return ParameterSet(std::move(out));
}

std::vector<double> ParameterSet::flatten() const {
  std::vector<double> out;
  out.reserve(element_count());
  for (const auto& e : entries_) {
    out.insert(out.end(), e.tensor.values().begin(), e.tensor.values().end());
  }
  return out;
}

TaskVector::TaskVector(ParameterSet deltas, std::string base_id)
    : deltas_(std::move(deltas)), base_id_(std::move(base_id)) {}

TaskVector::TaskVector(ParameterSet deltas, std::string base_id,
                       std::vector<std::vector<double>> residual)
    : deltas_(std::move(deltas)), base_id_(std::move(base_id)), residual_(std::move(residual)) {
  if (residual_.empty()) return;
  if (residual_.size() != deltas_.size()) {
    throw InvalidValue("task vector residual has " + std::to_string(residual_.size()) +
                       " entries, expected " + std::to_string(deltas_.size()));
  }
  bool any = false;
  for (std::size_t i = 0; i < residual_.size(); ++i) {
    auto& r = residual_[i];
    if (r.empty()) continue;
    if (r.size() != deltas_[i].tensor.size()) {
      throw InvalidValue("task vector residual for '" + deltas_[i].name + "' has wrong length");
    }
    require_finite(r);
    if (std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; })) {
      r.clear();
    } else {
      any = true;
    }
  }
  if (!any) residual_.clear();
}

std::span<const double> TaskVector::residual(std::size_t entry) const noexcept {
  if (residual_.empty()) return {};
  return residual_[entry];
}

TaskVector TaskVector::zeros_for(const ParameterSet& base) {
  return TaskVector(base.zeros_like(), base.fingerprint());
}

TaskVector compute_task_vector(const ParameterSet& model, const ParameterSet& base) {
  require_compatible(model, base, "compute_task_vector");
  std::vector<Entry> out;
  std::vector<std::vector<double>> residual;
  out.reserve(base.size());
  residual.reserve(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto& m = model[i].tensor.values();
    const auto& b = base[i].tensor.values();
    std::vector<double> d(m.size());
    std::vector<double> r(m.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
      const auto diff = detail::two_sum(m[j], -b[j]);
      d[j] = diff.hi;
      r[j] = diff.lo;
    }
    out.push_back({base[i].name, Tensor::reshaped_like(base[i].tensor, std::move(d))});
    residual.push_back(std::move(r));
  }
  return TaskVector(ParameterSet(std::move(out)), base.fingerprint(), std::move(residual));
}

namespace {

struct Accumulated {
  std::vector<std::vector<double>> hi;
  std::vector<std::vector<double>> lo;
};

// start + sum(coefficient * tv) in double-double, per element.
Accumulated accumulate(const ParameterSet& start, std::span<const ScaledTerm> terms,
                       const char* what) {
  for (const auto& term : terms) {
    if (!std::isfinite(term.coefficient) || !std::isfinite(term.coefficient_low)) {
      throw InvalidCoefficient(std::string(what) + ": non-finite coefficient");
    }
    require_compatible(term.tv.get().deltas(), start, what);
  }
  Accumulated acc;
  acc.hi.reserve(start.size());
  acc.lo.reserve(start.size());
  for (const auto& e : start.entries()) {
    acc.hi.push_back(e.tensor.values());
    acc.lo.emplace_back(e.tensor.size(), 0.0);
  }
  for (const auto& term : terms) {
    const TaskVector& tv = term.tv.get();
    for (std::size_t i = 0; i < tv.entries().size(); ++i) {
      const auto& src = tv.entries()[i].tensor.values();
      const auto res = tv.residual(i);
      auto& hi = acc.hi[i];
      auto& lo = acc.lo[i];
      for (std::size_t j = 0; j < src.size(); ++j) {
        const double x_lo = res.empty() ? 0.0 : res[j];
        const auto prod = detail::mul(term.coefficient, term.coefficient_low, src[j], x_lo);
        const auto sum = detail::add({hi[j], lo[j]}, prod);
        hi[j] = sum.hi;
        lo[j] = sum.lo;
      }
    }
  }
  return acc;
}

std::vector<Entry> rebuild(const ParameterSet& like, std::vector<std::vector<double>> values) {
  std::vector<Entry> out;
  out.reserve(like.size());
  for (std::size_t i = 0; i < like.size(); ++i) {
    for (double v : values[i]) {
      if (!std::isfinite(v)) {
        throw InvalidValue("combination overflowed in entry '" + like[i].name + "'");
      }
    }
    out.push_back({like[i].name, Tensor::reshaped_like(like[i].tensor, std::move(values[i]))});
  }
  return out;
}

}  // namespace

ParameterSet add_scaled(const ParameterSet& base, std::span<const ScaledTerm> terms) {
  Accumulated acc = accumulate(base, terms, "add_scaled");
  // Round each double-double to the nearest double.
  for (std::size_t i = 0; i < acc.hi.size(); ++i) {
    for (std::size_t j = 0; j < acc.hi[i].size(); ++j) acc.hi[i][j] += acc.lo[i][j];
  }
  return ParameterSet(rebuild(base, std::move(acc.hi)));
}

TaskVector combine(std::span<const ScaledTerm> terms) {
  if (terms.empty()) throw InvalidValue("combine: at least one task vector is required");
  const TaskVector& first = terms.front().tv.get();
  for (const auto& term : terms) {
    if (term.tv.get().base_id() != first.base_id()) {
      throw IncompatibleParameters("combine: task vectors are relative to different bases");
    }
  }
  const ParameterSet zero = first.deltas().zeros_like();
  Accumulated acc = accumulate(zero, terms, "combine");
  return TaskVector(ParameterSet(rebuild(zero, std::move(acc.hi))), first.base_id(),
                    std::move(acc.lo));
}

double squared_distance(const ParameterSet& a, const ParameterSet& b) {
  require_compatible(a, b, "squared_distance");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i].tensor.values();
    const auto& y = b[i].tensor.values();
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - y[j];
      sum += d * d;
    }
  }
  return sum;
}

}  // namespace cycleqd
