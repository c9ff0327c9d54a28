#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "cycleqd/error.hpp"
#include "cycleqd/operators.hpp"
#include "cycleqd/spectral.hpp"
#include "derived.hpp"
#include "oracles.hpp"

using namespace cycleqd;

namespace {

TaskVector tv_of(std::vector<Entry> entries) { return TaskVector(ParameterSet(std::move(entries)), "t"); }

TaskVector vec(std::vector<double> v) { return tv_of({{"v", Tensor::vector(std::move(v))}}); }

}  // namespace

TEST_CASE("crossover of a vector with itself is the identity") {
  oracle::Fixture f(3);
  RandomStream rng(1);
  CrossoverParams p;
  for (int trial = 0; trial < 100; ++trial) {
    const TaskVector tv(oracle::layer(f, 4, 3, -5, 5), "t");
    CHECK(crossover(tv, tv, p, rng) == tv);
  }
  // Wide omegas give weights far from one half and of either sign.
  p.mu = 0.0;
  p.sigma = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    const TaskVector tv(oracle::layer(f, 3, 3, -5, 5), "t");
    CHECK(crossover(tv, tv, p, rng) == tv);
  }
}

TEST_CASE("merge_pair with forced omegas") {
  SUBCASE("omega = (1, 1)") {
    const TaskVector c = merge_pair(vec({2, 0}), vec({0, 2}), 1.0, 1.0);
    CHECK(c.entries()[0].tensor.values() == std::vector<double>{1, 1});
  }
  SUBCASE("omega = (1.5, -0.5)") {
    const TaskVector c = merge_pair(vec({1, 0}), vec({0, 1}), 1.5, -0.5);
    CHECK(c.entries()[0].tensor.values() == std::vector<double>{1.5, -0.5});
  }
  SUBCASE("zero denominator") {
    CHECK_THROWS_AS(merge_pair(vec({1, 0}), vec({0, 1}), 1.0, -1.0), DegenerateCrossover);
  }
  SUBCASE("different bases") {
    const TaskVector a(ParameterSet({{"v", Tensor::vector({1})}}), "a");
    const TaskVector b(ParameterSet({{"v", Tensor::vector({1})}}), "b");
    CHECK_THROWS_AS(merge_pair(a, b, 1, 1), IncompatibleParameters);
  }
}

TEST_CASE("normalized weights sum to one within an ulp") {
  RandomStream rng(8);
  for (int i = 0; i < 10000; ++i) {
    const double o1 = rng.normal(0.0, 1.0), o2 = rng.normal(0.0, 1.0);
    if (std::abs(o1 + o2) < 1e-6) continue;
    const auto w = normalized_weights(o1, o2);
    const double scale = std::max({1.0, std::abs(w.first), std::abs(w.second)});
    CHECK(std::abs(w.first + w.second - 1.0) <= 0x1p-52 * scale);
  }
}

TEST_CASE("crossover redraws degenerate omegas and gives up after max_attempts") {
  CrossoverParams p;
  p.mu = 0.0;
  p.sigma = 1e-9;
  p.degenerate_threshold = 1.0;
  RandomStream rng(2);
  CHECK_THROWS_AS(crossover(vec({1}), vec({2}), p, rng), DegenerateCrossover);

  // A generous threshold with a centered distribution still succeeds by redrawing.
  p.sigma = 1.0;
  p.degenerate_threshold = 0.5;
  for (int i = 0; i < 200; ++i) CHECK_NOTHROW(crossover(vec({1}), vec({2}), p, rng));
}

TEST_CASE("crossover parameter validation") {
  CrossoverParams p;
  p.sigma = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.degenerate_threshold = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  MutationParams m;
  m.w_max = 0.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("svd mutation with forced factors") {
  oracle::Fixture f(4);
  const TaskVector tv = tv_of({{"w1", f.matrix(5, 3, -2, 2)},
                               {"b1", f.vector(5, -2, 2)},
                               {"w2", f.matrix(4, 4, -2, 2)},
                               {"row", f.matrix(1, 4, -2, 2)}});
  REQUIRE(mutable_entries(tv) == std::vector<std::size_t>{0, 2});
  SUBCASE("all ones is a fixed point") {
    const std::vector<std::vector<double>> w = {{1, 1, 1}, {1, 1, 1, 1}};
    const TaskVector out = scale_spectra(tv, w);
    for (std::size_t i = 0; i < tv.entries().size(); ++i) {
      const auto& a = tv.entries()[i].tensor.values();
      const auto& b = out.entries()[i].tensor.values();
      CHECK(oracle::frobenius_diff(a, b) <= 1e-9 * oracle::frobenius(a));
    }
  }
  SUBCASE("all zeros clears every mutable matrix") {
    const std::vector<std::vector<double>> w = {{0, 0, 0}, {0, 0, 0, 0}};
    const TaskVector out = scale_spectra(tv, w);
    CHECK(oracle::frobenius(out.entries()[0].tensor.values()) == 0.0);
    CHECK(oracle::frobenius(out.entries()[2].tensor.values()) == 0.0);
    CHECK(out.entries()[1] == tv.entries()[1]);
    CHECK(out.entries()[3] == tv.entries()[3]);
  }
  SUBCASE("wrong factor lengths") {
    const std::vector<std::vector<double>> w = {{1, 1}, {1, 1, 1, 1}};
    CHECK_THROWS_AS(scale_spectra(tv, w), InvalidValue);
  }
  SUBCASE("diag(3, 1) with w = (0.5, 2)") {
    const auto r = derived::run("svd_mutate_diagonal");
    CHECK_MESSAGE(r.passed, r.detail);
  }
}

TEST_CASE("svd_mutate scales each spectrum by its own draw and leaves rank-one entries alone") {
  oracle::Fixture f(6);
  MutationParams p;
  for (int trial = 0; trial < 30; ++trial) {
    const TaskVector tv = tv_of({{"w1", f.matrix(6, 4, -1, 1)},
                                 {"b", f.vector(6, -1, 1)},
                                 {"w2", f.matrix(3, 5, -1, 1)},
                                 {"col", f.matrix(4, 1, -1, 1)}});
    const auto before = svd_factorize(tv);
    RandomStream rng(100 + trial), replay(100 + trial);
    const TaskVector out = svd_mutate(tv, p, rng);
    CHECK(out.entries()[1] == tv.entries()[1]);
    CHECK(out.entries()[3] == tv.entries()[3]);
    for (std::size_t i : {std::size_t{0}, std::size_t{2}}) {
      const auto& e = before.entries[i];
      std::vector<double> expected;
      for (std::size_t k = 0; k < e.rank(); ++k) {
        const double w = replay.uniform(0.0, p.w_max);
        CHECK(w >= 0.0);
        CHECK(w <= p.w_max);
        expected.push_back(e.singular_values[k] * w);
      }
      std::sort(expected.begin(), expected.end(), std::greater<>());
      const auto& t = out.entries()[i].tensor;
      const auto got = oracle::singular_values(t.rows(), t.cols(), t.values());
      for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(std::abs(got[k] - expected[k]) <= 1e-9 * std::max(1.0, expected[0]));
      }
    }
  }
}

TEST_CASE("operators are deterministic in the stream state") {
  oracle::Fixture f(7);
  const TaskVector a(oracle::layer(f, 4, 4), "t");
  const TaskVector b(oracle::layer(f, 4, 4), "t");
  RandomStream r1(55), r2(55);
  CHECK(svd_mutate(crossover(a, b, {}, r1), {}, r1) == svd_mutate(crossover(a, b, {}, r2), {}, r2));
  CHECK(gaussian_mutate(a, {}, r1) == gaussian_mutate(a, {}, r2));
}

TEST_CASE("gaussian mutation") {
  SUBCASE("vanishing sigma leaves the input") {
    MutationParams p;
    p.gaussian_sigma = 1e-300;
    RandomStream rng(3);
    const TaskVector tv = vec({0.5, -0.25, 1.0});
    CHECK(gaussian_mutate(tv, p, rng) == tv);
  }
  SUBCASE("seeded noise is reproducible") {
    const auto r = derived::run("gaussian_determinism");
    CHECK_MESSAGE(r.passed, r.detail);
  }
  SUBCASE("noise statistics over 1e5 draws") {
    const auto r = derived::run("gaussian_statistics");
    CHECK_MESSAGE(r.passed, r.detail);
  }
}

TEST_CASE("aggregation weights") {
  SUBCASE("equal fitness") {
    const auto b = aggregation_weights(std::vector<double>{0.7, 0.7});
    CHECK(b[0] == 0.5);
    CHECK(b[1] == 0.5);
  }
  SUBCASE("f = (0, ln 3)") {
    const auto b = aggregation_weights(std::vector<double>{0.0, std::log(3.0)});
    CHECK(std::abs(b[0] - 0.25) <= 1e-15);
    CHECK(std::abs(b[1] - 0.75) <= 1e-15);
  }
  SUBCASE("random triples against an independent softmax") {
    const auto r = derived::run("aggregate_softmax");
    CHECK_MESSAGE(r.passed, r.detail);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(aggregation_weights(std::vector<double>{}), InvalidValue);
    CHECK_THROWS_AS(aggregation_weights(std::vector<double>{0.1, std::nan("")}), InvalidFitness);
    CHECK_THROWS_AS(aggregation_weights(std::vector<double>{INFINITY}), InvalidFitness);
  }
}

TEST_CASE("aggregate is invariant to a constant fitness shift") {
  oracle::Fixture f(8);
  for (int trial = 0; trial < 20; ++trial) {
    const ParameterSet base = oracle::layer(f, 3, 3);
    const TaskVector a(oracle::layer(f, 3, 3), base.fingerprint());
    const TaskVector b(oracle::layer(f, 3, 3), base.fingerprint());
    const double fa = f.uniform(0, 1), fb = f.uniform(0, 1), c = f.uniform(-5, 5);
    const EliteContribution x[] = {{a, fa}, {b, fb}};
    const EliteContribution y[] = {{a, fa + c}, {b, fb + c}};
    const auto p = aggregate(base, x).flatten();
    const auto q = aggregate(base, y).flatten();
    CHECK(oracle::frobenius_diff(p, q) <= 1e-12 * std::max(1.0, oracle::frobenius(p)));
    const auto w = aggregation_weights(std::vector<double>{fa, fb});
    CHECK(std::abs(w[0] + w[1] - 1.0) <= 1e-12);
  }
}
