#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cycleqd/param_set.hpp"

namespace cycleqd {

// One task's scoring function. Implementations are immutable and safe to
// call concurrently; results lie in [0, 1].
class TaskEvaluator {
 public:
  virtual ~TaskEvaluator() = default;
  virtual int task_id() const = 0;
  virtual double evaluate(const ParameterSet& params) const = 0;
};

using EvaluatorSet = std::vector<std::shared_ptr<const TaskEvaluator>>;

// Fitness vector of one candidate, slot k from evaluators[k]. With
// `parallel` each task runs on its own thread; the result is identical.
// Throws EvaluationFailure if an evaluator fails or leaves [0, 1].
std::vector<double> evaluate_all(const ParameterSet& candidate, const EvaluatorSet& evaluators,
                                 bool parallel = false);

// f(theta) = exp(-|theta - center|^2 / (2 s^2)) over the flattened parameters.
class AnalyticTask final : public TaskEvaluator {
 public:
  AnalyticTask(int task_id, ParameterSet center, double width);

  int task_id() const override { return task_id_; }
  double evaluate(const ParameterSet& params) const override;

  const ParameterSet& center() const noexcept { return center_; }
  double width() const noexcept { return width_; }

 private:
  int task_id_;
  ParameterSet center_;
  double width_;
};

struct AnalyticSuiteSpec {
  int tasks = 3;
  int layers = 2;
  // Each layer is a width x width matrix plus a width vector.
  int width = 8;
  // Standard deviation of the center entries.
  double center_scale = 0.1;
  // Expert offset norm as a fraction of its center's norm.
  double perturbation = 0.05;
  // Target geometric-mean fitness of one task's center on another task.
  double inter_center_fitness = 0.1;
  std::uint64_t seed = 0;
};

// Two-layer tanh regression network: layer0 = (hidden x input, hidden),
// layer1 = (1 x hidden, 1).
struct NetworkSuiteSpec {
  int tasks = 3;
  int input_dim = 2;
  int hidden = 8;
  // Evaluation grid points per input axis on [-1, 1].
  int grid_points = 9;
  // Sinusoidal terms in each target function.
  int target_terms = 3;
  int steps = 400;
  double step_size = 0.05;
  std::uint64_t seed = 0;
};

enum class SuiteFamily { analytic, network };

struct SuiteSpec {
  SuiteFamily family = SuiteFamily::analytic;
  AnalyticSuiteSpec analytic;
  NetworkSuiteSpec network;

  int tasks() const noexcept {
    return family == SuiteFamily::analytic ? analytic.tasks : network.tasks;
  }
};

struct TaskSuite {
  SuiteSpec spec;
  ParameterSet base;
  std::vector<ParameterSet> experts;
  EvaluatorSet evaluators;
  // Constants derived during construction, recorded for reproduction.
  std::map<std::string, double> derived;
  // Per-expert training loss, one value before each step and one after the
  // last (network family only).
  std::vector<std::vector<double>> training_loss;
};

TaskSuite make_analytic_suite(const AnalyticSuiteSpec& spec);

class NetworkTask final : public TaskEvaluator {
 public:
  NetworkTask(int task_id, const NetworkSuiteSpec& spec);

  int task_id() const override { return task_id_; }
  // exp(-mean squared error) on the task's grid.
  double evaluate(const ParameterSet& params) const override;

  double loss(const ParameterSet& params) const;
  // Loss and its gradient, shaped like params.
  std::pair<double, ParameterSet> loss_and_gradient(const ParameterSet& params) const;

  const std::vector<std::vector<double>>& inputs() const noexcept { return inputs_; }
  const std::vector<double>& targets() const noexcept { return targets_; }

 private:
  int task_id_;
  std::vector<std::vector<double>> inputs_;
  std::vector<double> targets_;
};

// Seeded initialization shared by every network expert.
ParameterSet network_initialization(const NetworkSuiteSpec& spec);

// Experts are the base trained by full-batch gradient descent on each
// task's grid. Throws TrainingFailure on a non-finite loss.
TaskSuite train_network_experts(const NetworkSuiteSpec& spec);

TaskSuite build_suite(const SuiteSpec& spec);

}  // namespace cycleqd
