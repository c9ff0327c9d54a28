#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace cycleqd {

// Seeded random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard. The real-valued transforms live here
// because <random> distributions are implementation-defined and differ
// between standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lower, double upper);
  // Box-Muller; both halves of each pair are used.
  double normal(double mean, double stddev);
  // Index drawn with probability proportional to weights.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// Stream keyed by (master seed, purpose label, generation). Distinct keys
// give unrelated seeds, so each consumer in each generation owns its own
// stream and evaluation order cannot perturb the draws.
RandomStream derive_stream(std::uint64_t master_seed, std::string_view purpose,
                           std::uint64_t generation);

}  // namespace cycleqd
