#include <doctest.h>

#include <cmath>
#include <memory>
#include <set>

#include "cycleqd/archive.hpp"
#include "cycleqd/error.hpp"
#include "derived.hpp"
#include "oracles.hpp"

using namespace cycleqd;

namespace {

BinSpec unit_bins(int tasks, int bins) {
  BinSpec spec;
  for (int k = 0; k < tasks; ++k) spec.tasks.push_back({0.0, 1.0, bins});
  return spec;
}

Genome genome(std::uint64_t id, std::vector<double> fitness, int birth = 0) {
  Genome g;
  g.id = id;
  g.birth_generation = birth;
  g.fitness = std::move(fitness);
  g.tv = std::make_shared<const TaskVector>(
      TaskVector(ParameterSet({{"v", Tensor::vector({static_cast<double>(id)})}}), "t"));
  return g;
}

}  // namespace

TEST_CASE("bin_index") {
  const TaskBins b{0.0, 1.0, 10};
  CHECK(bin_index(0.0, b) == 0);
  CHECK(bin_index(0.05, b) == 0);
  CHECK(bin_index(0.1, b) == 1);
  CHECK(bin_index(0.999, b) == 9);
  CHECK(bin_index(1.0, b) == 9);
  CHECK(bin_index(-3.0, b) == 0);
  CHECK(bin_index(7.0, b) == 9);
  SUBCASE("hand-computed bins under expert-relative bounds") {
    const auto r = derived::run("bin_hand_computation");
    CHECK_MESSAGE(r.passed, r.detail);
  }
}

TEST_CASE("bin spec validation") {
  CHECK_THROWS_AS((TaskBins{1.0, 1.0, 3}.validate()), ConfigError);
  CHECK_THROWS_AS((TaskBins{0.0, 1.0, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((TaskBins{0.0, NAN, 3}.validate()), ConfigError);
  CHECK_THROWS_AS(Archive(0, unit_bins(1, 3)), ConfigError);
  CHECK_THROWS_AS(Archive(3, unit_bins(3, 3)), ConfigError);
}

TEST_CASE("lattice geometry") {
  BinSpec spec;
  spec.tasks = {{0, 1, 4}, {0, 1, 5}, {0, 1, 6}};
  const Archive a0(0, spec), a1(1, spec), a2(2, spec);
  CHECK(a0.bc_tasks() == std::vector<int>{1, 2});
  CHECK(a1.bc_tasks() == std::vector<int>{0, 2});
  CHECK(a2.bc_tasks() == std::vector<int>{0, 1});
  CHECK(a0.lattice_size() == 30);
  CHECK(a1.lattice_size() == 24);
  CHECK(a2.lattice_size() == 20);
  CHECK(Archive(0, unit_bins(3, 15)).lattice_size() == 225);

  // Row-major with the first BC task slowest.
  const std::vector<double> f = {0.9, 0.3, 0.5};
  CHECK(a0.cell_of(f) == static_cast<std::size_t>(1 * 6 + 3));
  CHECK(a0.coordinates(9) == std::vector<int>{1, 3});
  for (std::size_t c = 0; c < a1.lattice_size(); ++c) {
    const auto coords = a1.coordinates(c);
    CHECK(a1.cell_at(coords) == c);
  }
}

TEST_CASE("update keeps one genome per cell and replaces only on strictly greater quality") {
  Archive a(0, unit_bins(2, 4));
  CHECK(a.update(genome(1, {0.5, 0.1})) == Placement::inserted);
  CHECK(a.update(genome(2, {0.5, 0.15})) == Placement::rejected);
  CHECK(a.at(0)->id == 1);
  CHECK(a.update(genome(3, {0.6, 0.2})) == Placement::replaced);
  CHECK(a.at(0)->id == 3);
  CHECK(a.update(genome(4, {0.1, 0.2})) == Placement::rejected);
  CHECK(a.update(genome(5, {0.1, 0.9})) == Placement::inserted);
  CHECK(a.size() == 2);
  CHECK(a.at(1) == nullptr);
  CHECK_THROWS_AS(a.update(genome(6, {0.1})), InvalidFitness);
  CHECK_THROWS_AS(a.update(genome(7, {NAN, 0.3})), InvalidFitness);
}

TEST_CASE("property: random insertions keep the per-cell maximum") {
  oracle::Fixture f(11);
  for (int trial = 0; trial < 20; ++trial) {
    Archive a(1, unit_bins(3, 5));
    std::map<std::size_t, double> best;
    for (std::uint64_t id = 0; id < 300; ++id) {
      std::vector<double> fit = {f.uniform(0, 1), f.uniform(0, 1), f.uniform(0, 1)};
      const std::size_t cell = a.cell_of(fit);
      const double previous = best.count(cell) ? best[cell] : -1.0;
      const Placement p = a.update(genome(id, fit));
      CHECK((p != Placement::rejected) == (fit[1] > previous));
      if (fit[1] > previous) best[cell] = fit[1];
      CHECK(a.at(cell)->fitness[1] == best[cell]);
    }
    CHECK(a.size() == best.size());
    CHECK(a.size() <= a.lattice_size());
    for (const auto& [cell, g] : a.occupied()) CHECK(a.cell_of(g.fitness) == cell);
  }
}

TEST_CASE("seeding with experts") {
  const auto r = derived::run("seeding_brute_force");
  CHECK_MESSAGE(r.passed, r.detail);

  std::vector<Archive> archives = {Archive(0, unit_bins(2, 3)), Archive(1, unit_bins(2, 3))};
  const std::vector<Genome> experts = {genome(0, {0.9, 0.1}), genome(1, {0.2, 0.8})};
  seed_with_experts(archives, experts);
  CHECK(archives[0].size() == 2);
  CHECK(archives[1].size() == 2);
  CHECK(elite_of(archives[0]).id == 0);
  CHECK(elite_of(archives[1]).id == 1);
}

TEST_CASE("elite_of tie breaking") {
  Archive a(0, unit_bins(2, 4));
  a.update(genome(1, {0.5, 0.1}, 0));
  a.update(genome(2, {0.5, 0.9}, 3));
  CHECK(elite_of(a).id == 2);
  a.update(genome(3, {0.5, 0.6}, 3));
  CHECK(elite_of(a).id == 3);
  CHECK_THROWS_AS(elite_of(Archive(0, unit_bins(2, 4))), EmptyArchive);
}

TEST_CASE("sampling weights") {
  SUBCASE("random mode is uniform") {
    Archive a(0, unit_bins(2, 4));
    a.update(genome(1, {0.1, 0.1}));
    a.update(genome(2, {0.9, 0.9}));
    a.update(genome(3, {0.5, 0.5}));
    const auto w = sampling_weights(a, {0.5, 0.8, SamplingMode::random});
    CHECK(w.cells.size() == 3);
    for (double p : w.probabilities) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("elite mode on two genomes") {
    Archive a(0, unit_bins(2, 4));
    a.update(genome(1, {0.1, 0.1}));
    a.update(genome(2, {0.9, 0.9}));
    const auto w = sampling_weights(a, {});
    // gamma = 0.5^2 and 0.8^2.
    CHECK(w.probabilities[0] == doctest::Approx(0.25 / 0.89).epsilon(1e-14));
    CHECK(w.probabilities[1] == doctest::Approx(0.64 / 0.89).epsilon(1e-14));
  }
  SUBCASE("single genome and flat fitness") {
    Archive a(0, unit_bins(2, 4));
    a.update(genome(1, {0.3, 0.3}));
    CHECK(sampling_weights(a, {}).probabilities == std::vector<double>{1.0});
    const auto r = derived::run("sampling_two_genomes");
    CHECK_MESSAGE(r.passed, r.detail);
  }
  SUBCASE("probabilities are positive and sum to one") {
    oracle::Fixture f(12);
    for (int trial = 0; trial < 50; ++trial) {
      Archive a(0, unit_bins(3, 6));
      for (std::uint64_t id = 0; id < 40; ++id) {
        a.update(genome(id, {f.uniform(0, 1), f.uniform(0, 1), f.uniform(0, 1)}));
      }
      const auto w = sampling_weights(a, {});
      double sum = 0.0;
      for (double p : w.probabilities) {
        CHECK(p > 0.0);
        sum += p;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("parameter validation") {
    CHECK_THROWS_AS((SamplingParams{-0.1, 0.8, SamplingMode::elite}.validate()), ConfigError);
    CHECK_THROWS_AS((SamplingParams{0.9, 0.8, SamplingMode::elite}.validate()), ConfigError);
  }
}

TEST_CASE("sample_parents") {
  SUBCASE("empty archive") {
    RandomStream rng(1);
    CHECK_THROWS_AS(sample_parents(Archive(0, unit_bins(2, 4)), {}, rng), EmptyArchive);
  }
  SUBCASE("single genome gives identical parents") {
    Archive a(0, unit_bins(2, 4));
    a.update(genome(9, {0.3, 0.3}));
    RandomStream rng(1);
    const auto [p1, p2] = sample_parents(a, {}, rng);
    CHECK(p1.id == 9);
    CHECK(p2.id == 9);
  }
  SUBCASE("uniform draws match 1/n") {
    const auto r = derived::run("uniform_draws");
    CHECK_MESSAGE(r.passed, r.detail);
  }
  SUBCASE("elite draws match gamma / sum gamma") {
    const auto r = derived::run("elite_draws");
    CHECK_MESSAGE(r.passed, r.detail);
  }
  SUBCASE("elite scan") {
    const auto r = derived::run("elite_scan");
    CHECK_MESSAGE(r.passed, r.detail);
  }
}
