#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "cycleqd/error.hpp"
#include "cycleqd/task_suite.hpp"
#include "derived.hpp"
#include "oracles.hpp"

using namespace cycleqd;

namespace {

class ConstantTask final : public TaskEvaluator {
 public:
  ConstantTask(int id, double value) : id_(id), value_(value) {}
  int task_id() const override { return id_; }
  double evaluate(const ParameterSet&) const override { return value_; }

 private:
  int id_;
  double value_;
};

NetworkSuiteSpec small_network() {
  NetworkSuiteSpec s;
  s.hidden = 5;
  s.grid_points = 5;
  s.steps = 60;
  s.seed = 21;
  return s;
}

}  // namespace

TEST_CASE("analytic task at and away from its center") {
  oracle::Fixture f(31);
  const ParameterSet center = oracle::layer(f, 3, 3);
  const AnalyticTask task(0, center, 0.7);
  CHECK(task.evaluate(center) == 1.0);

  // |center| = s * sqrt(2) puts the zero model at exp(-1).
  const double s = 0.4;
  const double scale = s * std::sqrt(2.0) / oracle::frobenius(center.flatten());
  std::vector<Entry> scaled;
  for (const auto& e : center.entries()) {
    std::vector<double> v = e.tensor.values();
    for (double& x : v) x *= scale;
    scaled.push_back({e.name, Tensor::reshaped_like(e.tensor, v)});
  }
  const ParameterSet c2(std::move(scaled));
  const AnalyticTask t2(1, c2, s);
  CHECK(t2.evaluate(c2.zeros_like()) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(AnalyticTask(0, center, 0.0), InvalidValue);
}

TEST_CASE("analytic suite") {
  const TaskSuite s = make_analytic_suite({});
  CHECK(s.experts.size() == 3);
  CHECK(s.evaluators.size() == 3);
  CHECK(s.base == s.base.zeros_like());
  CHECK(s.derived.count("width"));
  const auto r = derived::run("expert_specialization");
  CHECK_MESSAGE(r.passed, r.detail);

  AnalyticSuiteSpec bad;
  bad.tasks = 1;
  CHECK_THROWS_AS(make_analytic_suite(bad), ConfigError);
  bad = {};
  bad.inter_center_fitness = 1.0;
  CHECK_THROWS_AS(make_analytic_suite(bad), ConfigError);
}

TEST_CASE("suite construction is deterministic in the seed") {
  AnalyticSuiteSpec a;
  a.seed = 5;
  const TaskSuite x = make_analytic_suite(a), y = make_analytic_suite(a);
  CHECK(x.experts == y.experts);
  a.seed = 6;
  CHECK_FALSE(make_analytic_suite(a).experts == x.experts);
}

TEST_CASE("network gradient matches central differences") {
  const NetworkSuiteSpec spec = small_network();
  const NetworkTask task(0, spec);
  const ParameterSet p = network_initialization(spec);
  const auto [loss, grad] = task.loss_and_gradient(p);
  CHECK(loss == doctest::Approx(task.loss(p)).epsilon(1e-14));
  const double h = 1e-6;
  for (std::size_t e = 0; e < p.size(); ++e) {
    const auto& values = p[e].tensor.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto perturbed = [&](double delta) {
        std::vector<Entry> entries = p.entries();
        std::vector<double> v = values;
        v[i] += delta;
        entries[e].tensor = Tensor::reshaped_like(p[e].tensor, v);
        return task.loss(ParameterSet(std::move(entries)));
      };
      const double fd = (perturbed(h) - perturbed(-h)) / (2 * h);
      CHECK(std::abs(fd - grad[e].tensor.values()[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("network experts") {
  NetworkSuiteSpec spec = small_network();
  SUBCASE("zero steps leaves every expert at the initialization") {
    spec.steps = 0;
    const TaskSuite s = train_network_experts(spec);
    for (const auto& e : s.experts) CHECK(e == s.base);
    for (const auto& curve : s.training_loss) CHECK(curve.size() == 1);
  }
  SUBCASE("training lowers the loss") {
    for (const char* name : {"network_training_improves", "network_loss_monotone"}) {
      const auto r = derived::run(name);
      CHECK_MESSAGE(r.passed, name << ": " << r.detail);
    }
  }
  SUBCASE("evaluate is exp(-loss)") {
    const TaskSuite s = train_network_experts(spec);
    const auto& t = dynamic_cast<const NetworkTask&>(*s.evaluators[1]);
    for (const auto& e : s.experts) CHECK(t.evaluate(e) == std::exp(-t.loss(e)));
  }
  SUBCASE("divergent step size") {
    spec.step_size = 1e6;
    spec.steps = 50;
    CHECK_THROWS_AS(train_network_experts(spec), TrainingFailure);
  }
  SUBCASE("wrong shapes") {
    const NetworkTask t(0, spec);
    oracle::Fixture f(2);
    CHECK_THROWS_AS(t.evaluate(oracle::layer(f, 3, 3)), IncompatibleParameters);
  }
}

TEST_CASE("evaluate_all") {
  const TaskSuite s = make_analytic_suite({});
  SUBCASE("componentwise") {
    const auto r = derived::run("evaluate_componentwise");
    CHECK_MESSAGE(r.passed, r.detail);
  }
  SUBCASE("parallel equals serial") {
    for (const auto& e : s.experts) CHECK(evaluate_all(e, s.evaluators, true) == evaluate_all(e, s.evaluators));
  }
  SUBCASE("property: permuting evaluators permutes the fitness") {
    std::vector<std::size_t> order = {0, 1, 2};
    const auto ref = evaluate_all(s.experts[0], s.evaluators);
    do {
      EvaluatorSet permuted;
      for (std::size_t i : order) permuted.push_back(s.evaluators[i]);
      const auto got = evaluate_all(s.experts[0], permuted);
      for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == ref[order[i]]);
    } while (std::next_permutation(order.begin(), order.end()));
  }
  SUBCASE("out-of-range results fail") {
    EvaluatorSet bad = s.evaluators;
    bad[2] = std::make_shared<ConstantTask>(2, 1.5);
    CHECK_THROWS_AS(evaluate_all(s.base, bad), EvaluationFailure);
    CHECK_THROWS_AS(evaluate_all(s.base, bad, true), EvaluationFailure);
    bad[2] = std::make_shared<ConstantTask>(2, std::nan(""));
    CHECK_THROWS_AS(evaluate_all(s.base, bad), EvaluationFailure);
  }
}
