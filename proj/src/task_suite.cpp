#include "cycleqd/task_suite.hpp"

#include <cmath>
#include <future>
#include <numbers>
#include <string>

#include "cycleqd/error.hpp"
#include "cycleqd/random.hpp"

namespace cycleqd {

std::vector<double> evaluate_all(const ParameterSet& candidate, const EvaluatorSet& evaluators,
                                 bool parallel) {
  auto run_one = [&candidate](const TaskEvaluator& e) {
    double f;
    try {
      f = e.evaluate(candidate);
    } catch (const std::exception& ex) {
      throw EvaluationFailure("task " + std::to_string(e.task_id()) + ": " + ex.what());
    }
    if (!std::isfinite(f) || f < 0.0 || f > 1.0) {
      throw EvaluationFailure("task " + std::to_string(e.task_id()) +
                              " returned fitness outside [0, 1]");
    }
    return f;
  };

  std::vector<double> out(evaluators.size());
  if (!parallel || evaluators.size() < 2) {
    for (std::size_t k = 0; k < evaluators.size(); ++k) out[k] = run_one(*evaluators[k]);
    return out;
  }
  std::vector<std::future<double>> pending;
  pending.reserve(evaluators.size());
  for (const auto& e : evaluators) {
    pending.push_back(std::async(std::launch::async, run_one, std::cref(*e)));
  }
  // Collect everything before rethrowing so no task outlives the call.
  std::exception_ptr first_error;
  for (std::size_t k = 0; k < pending.size(); ++k) {
    try {
      out[k] = pending[k].get();
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

AnalyticTask::AnalyticTask(int task_id, ParameterSet center, double width)
    : task_id_(task_id), center_(std::move(center)), width_(width) {
  if (!(width_ > 0.0) || !std::isfinite(width_)) throw InvalidValue("analytic task width must be > 0");
}

double AnalyticTask::evaluate(const ParameterSet& params) const {
  return std::exp(-squared_distance(params, center_) / (2.0 * width_ * width_));
}

namespace {

double norm_of(const ParameterSet& p) { return std::sqrt(squared_distance(p, p.zeros_like())); }

std::string layer_name(int layer, const char* part) {
  return "layer" + std::to_string(layer) + "." + part;
}

void check_analytic(const AnalyticSuiteSpec& s) {
  if (s.tasks < 2) throw ConfigError("suite.tasks must be >= 2");
  if (s.layers < 1 || s.width < 1) throw ConfigError("suite layers and width must be >= 1");
  if (!(s.center_scale > 0.0)) throw ConfigError("suite.center_scale must be > 0");
  if (!(s.perturbation >= 0.0)) throw ConfigError("suite.perturbation must be >= 0");
  if (!(s.inter_center_fitness > 0.0 && s.inter_center_fitness < 1.0)) {
    throw ConfigError("suite.inter_center_fitness must lie in (0, 1)");
  }
}

}  // namespace

TaskSuite make_analytic_suite(const AnalyticSuiteSpec& spec) {
  check_analytic(spec);
  const auto w = static_cast<std::size_t>(spec.width);

  auto draw_set = [&](RandomStream& rng, double stddev) {
    std::vector<Entry> entries;
    for (int l = 0; l < spec.layers; ++l) {
      std::vector<double> m(w * w);
      for (double& v : m) v = rng.normal(0.0, stddev);
      entries.push_back({layer_name(l, "weight"), Tensor::matrix(w, w, std::move(m))});
      std::vector<double> b(w);
      for (double& v : b) v = rng.normal(0.0, stddev);
      entries.push_back({layer_name(l, "bias"), Tensor::vector(std::move(b))});
    }
    return ParameterSet(std::move(entries));
  };

  TaskSuite suite;
  suite.spec.family = SuiteFamily::analytic;
  suite.spec.analytic = spec;

  std::vector<ParameterSet> centers;
  for (int k = 0; k < spec.tasks; ++k) {
    auto rng = derive_stream(spec.seed, "suite.center", static_cast<std::uint64_t>(k));
    centers.push_back(draw_set(rng, spec.center_scale));
  }
  suite.base = centers.front().zeros_like();

  // Width s such that the mean over pairs of |c_a - c_b|^2 / (2 s^2) equals
  // ln(1 / inter_center_fitness).
  double mean_sq = 0.0;
  int pairs = 0;
  for (int a = 0; a < spec.tasks; ++a) {
    for (int b = a + 1; b < spec.tasks; ++b) {
      mean_sq += squared_distance(centers[a], centers[b]);
      ++pairs;
    }
  }
  mean_sq /= pairs;
  const double width = std::sqrt(mean_sq / (2.0 * std::log(1.0 / spec.inter_center_fitness)));
  suite.derived["width"] = width;
  suite.derived["mean_center_sq_distance"] = mean_sq;

  for (int k = 0; k < spec.tasks; ++k) {
    auto rng = derive_stream(spec.seed, "suite.perturbation", static_cast<std::uint64_t>(k));
    const ParameterSet direction = draw_set(rng, 1.0);
    const double center_norm = norm_of(centers[k]);
    const double scale = spec.perturbation * center_norm / norm_of(direction);
    const auto offset = TaskVector(direction, suite.base.fingerprint());
    const ScaledTerm term[] = {{scale, offset}};
    suite.experts.push_back(add_scaled(centers[k], term));
    suite.derived["center_norm_" + std::to_string(k)] = center_norm;
    suite.evaluators.push_back(std::make_shared<AnalyticTask>(k, centers[k], width));
  }
  return suite;
}

namespace {

void check_network(const NetworkSuiteSpec& s) {
  if (s.tasks < 2) throw ConfigError("suite.tasks must be >= 2");
  if (s.input_dim < 1 || s.hidden < 1) throw ConfigError("network dims must be >= 1");
  if (s.grid_points < 2) throw ConfigError("suite.grid_points must be >= 2");
  if (s.target_terms < 1) throw ConfigError("suite.target_terms must be >= 1");
  if (s.steps < 0) throw ConfigError("suite.steps must be >= 0");
  if (!(s.step_size > 0.0)) throw ConfigError("suite.step_size must be > 0");
  double points = std::pow(static_cast<double>(s.grid_points), s.input_dim);
  if (points > 1e6) throw ConfigError("network evaluation grid is too large");
}

struct NetworkView {
  const std::vector<double>& w0;  // hidden x input, row-major
  const std::vector<double>& b0;
  const std::vector<double>& w1;  // 1 x hidden
  const std::vector<double>& b1;
  std::size_t hidden;
  std::size_t input;
};

NetworkView view_of(const ParameterSet& p) {
  if (p.size() != 4 || p[0].tensor.rank() != 2 || p[1].tensor.rank() != 1 ||
      p[2].tensor.rank() != 2 || p[3].tensor.rank() != 1 || p[2].tensor.rows() != 1 ||
      p[3].tensor.size() != 1 || p[1].tensor.size() != p[0].tensor.rows() ||
      p[2].tensor.cols() != p[0].tensor.rows()) {
    throw IncompatibleParameters("parameters do not describe a two-layer network");
  }
  return {p[0].tensor.values(), p[1].tensor.values(), p[2].tensor.values(),
          p[3].tensor.values(), p[0].tensor.rows(), p[0].tensor.cols()};
}

}  // namespace

NetworkTask::NetworkTask(int task_id, const NetworkSuiteSpec& spec) : task_id_(task_id) {
  check_network(spec);
  const auto din = static_cast<std::size_t>(spec.input_dim);
  const auto g = static_cast<std::size_t>(spec.grid_points);

  auto rng = derive_stream(spec.seed, "suite.target", static_cast<std::uint64_t>(task_id));
  struct Term {
    double amplitude;
    std::vector<double> frequency;
    double phase;
  };
  std::vector<Term> terms;
  for (int j = 0; j < spec.target_terms; ++j) {
    Term t;
    t.amplitude = rng.normal(0.0, 0.6);
    t.frequency.resize(din);
    for (double& f : t.frequency) f = rng.normal(0.0, 2.0);
    t.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    terms.push_back(std::move(t));
  }

  std::size_t count = 1;
  for (std::size_t d = 0; d < din; ++d) count *= g;
  inputs_.reserve(count);
  targets_.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::vector<double> x(din);
    std::size_t rest = idx;
    for (std::size_t d = din; d-- > 0;) {
      x[d] = -1.0 + 2.0 * static_cast<double>(rest % g) / static_cast<double>(g - 1);
      rest /= g;
    }
    double y = 0.0;
    for (const auto& t : terms) {
      double arg = t.phase;
      for (std::size_t d = 0; d < din; ++d) arg += t.frequency[d] * x[d];
      y += t.amplitude * std::sin(arg);
    }
    inputs_.push_back(std::move(x));
    targets_.push_back(y);
  }
}

double NetworkTask::loss(const ParameterSet& params) const {
  const NetworkView net = view_of(params);
  if (net.input != inputs_.front().size()) {
    throw IncompatibleParameters("network input width does not match the task");
  }
  double sum = 0.0;
  for (std::size_t p = 0; p < inputs_.size(); ++p) {
    const auto& x = inputs_[p];
    double y = net.b1[0];
    for (std::size_t h = 0; h < net.hidden; ++h) {
      double z = net.b0[h];
      for (std::size_t d = 0; d < net.input; ++d) z += net.w0[h * net.input + d] * x[d];
      y += net.w1[h] * std::tanh(z);
    }
    const double err = y - targets_[p];
    sum += err * err;
  }
  return sum / static_cast<double>(inputs_.size());
}

double NetworkTask::evaluate(const ParameterSet& params) const { return std::exp(-loss(params)); }

std::pair<double, ParameterSet> NetworkTask::loss_and_gradient(const ParameterSet& params) const {
  const NetworkView net = view_of(params);
  if (net.input != inputs_.front().size()) {
    throw IncompatibleParameters("network input width does not match the task");
  }
  std::vector<double> gw0(net.w0.size(), 0.0);
  std::vector<double> gb0(net.b0.size(), 0.0);
  std::vector<double> gw1(net.w1.size(), 0.0);
  std::vector<double> gb1(1, 0.0);
  std::vector<double> act(net.hidden);
  const double n = static_cast<double>(inputs_.size());
  double sum = 0.0;
  for (std::size_t p = 0; p < inputs_.size(); ++p) {
    const auto& x = inputs_[p];
    double y = net.b1[0];
    for (std::size_t h = 0; h < net.hidden; ++h) {
      double z = net.b0[h];
      for (std::size_t d = 0; d < net.input; ++d) z += net.w0[h * net.input + d] * x[d];
      act[h] = std::tanh(z);
      y += net.w1[h] * act[h];
    }
    const double err = y - targets_[p];
    sum += err * err;
    const double dy = 2.0 * err / n;
    gb1[0] += dy;
    for (std::size_t h = 0; h < net.hidden; ++h) {
      gw1[h] += dy * act[h];
      const double dz = dy * net.w1[h] * (1.0 - act[h] * act[h]);
      gb0[h] += dz;
      for (std::size_t d = 0; d < net.input; ++d) gw0[h * net.input + d] += dz * x[d];
    }
  }
  std::vector<Entry> grad;
  grad.push_back({params[0].name, Tensor::reshaped_like(params[0].tensor, std::move(gw0))});
  grad.push_back({params[1].name, Tensor::reshaped_like(params[1].tensor, std::move(gb0))});
  grad.push_back({params[2].name, Tensor::reshaped_like(params[2].tensor, std::move(gw1))});
  grad.push_back({params[3].name, Tensor::reshaped_like(params[3].tensor, std::move(gb1))});
  return {sum / n, ParameterSet(std::move(grad))};
}

ParameterSet network_initialization(const NetworkSuiteSpec& spec) {
  check_network(spec);
  const auto din = static_cast<std::size_t>(spec.input_dim);
  const auto hid = static_cast<std::size_t>(spec.hidden);
  auto rng = derive_stream(spec.seed, "suite.init", 0);
  std::vector<double> w0(hid * din);
  for (double& v : w0) v = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(din)));
  std::vector<double> b0(hid);
  for (double& v : b0) v = rng.normal(0.0, 0.1);
  std::vector<double> w1(hid);
  for (double& v : w1) v = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(hid)));
  std::vector<Entry> entries;
  entries.push_back({layer_name(0, "weight"), Tensor::matrix(hid, din, std::move(w0))});
  entries.push_back({layer_name(0, "bias"), Tensor::vector(std::move(b0))});
  entries.push_back({layer_name(1, "weight"), Tensor::matrix(1, hid, std::move(w1))});
  entries.push_back({layer_name(1, "bias"), Tensor::vector({0.0})});
  return ParameterSet(std::move(entries));
}

TaskSuite train_network_experts(const NetworkSuiteSpec& spec) {
  check_network(spec);
  TaskSuite suite;
  suite.spec.family = SuiteFamily::network;
  suite.spec.network = spec;
  suite.base = network_initialization(spec);
  const std::string base_id = suite.base.fingerprint();

  for (int k = 0; k < spec.tasks; ++k) {
    auto task = std::make_shared<NetworkTask>(k, spec);
    ParameterSet params = suite.base;
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(spec.steps) + 1);
    for (int step = 0; step < spec.steps; ++step) {
      auto [loss, grad] = task->loss_and_gradient(params);
      if (!std::isfinite(loss)) {
        throw TrainingFailure("network expert " + std::to_string(k) + " diverged at step " +
                              std::to_string(step));
      }
      trace.push_back(loss);
      const TaskVector g(std::move(grad), base_id);
      const ScaledTerm term[] = {{-spec.step_size, g}};
      try {
        params = add_scaled(params, term);
      } catch (const InvalidValue&) {
        throw TrainingFailure("network expert " + std::to_string(k) + " diverged at step " +
                              std::to_string(step));
      }
    }
    const double final_loss = task->loss(params);
    if (!std::isfinite(final_loss)) {
      throw TrainingFailure("network expert " + std::to_string(k) + " diverged");
    }
    trace.push_back(final_loss);
    suite.derived["final_loss_" + std::to_string(k)] = final_loss;
    suite.training_loss.push_back(std::move(trace));
    suite.experts.push_back(std::move(params));
    suite.evaluators.push_back(std::move(task));
  }
  return suite;
}

TaskSuite build_suite(const SuiteSpec& spec) {
  if (spec.family == SuiteFamily::analytic) return make_analytic_suite(spec.analytic);
  return train_network_experts(spec.network);
}

}  // namespace cycleqd
