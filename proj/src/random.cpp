#include "cycleqd/random.hpp"

#include <cmath>
#include <numbers>

#include "cycleqd/error.hpp"

namespace cycleqd {

double RandomStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lower, double upper) {
  return lower + (upper - lower) * uniform01();
}

double RandomStream::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return mean + stddev * radius * std::cos(angle);
}

std::size_t RandomStream::categorical(std::span<const double> weights) {
  if (weights.empty()) throw InvalidValue("categorical: no weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidValue("categorical: invalid weight");
    total += w;
  }
  if (total <= 0.0) throw InvalidValue("categorical: weights sum to zero");
  const double target = uniform01() * total;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (target < cumulative) return i;
  }
  // Rounding can leave target == total; fall back to the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream derive_stream(std::uint64_t master_seed, std::string_view purpose,
                           std::uint64_t generation) {
  std::uint64_t label = 0xcbf29ce484222325ULL;
  for (unsigned char c : purpose) {
    label ^= c;
    label *= 0x100000001b3ULL;
  }
  std::uint64_t key = mix64(master_seed);
  key = mix64(key ^ label);
  key = mix64(key ^ generation);
  return RandomStream(key);
}

}  // namespace cycleqd
