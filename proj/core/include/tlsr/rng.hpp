#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tlsr {

/// Seeded generator used for every random draw in the project.
///
/// Children are derived from (seed, tag) with splitmix64 so that each phase of
/// an experiment (data synthesis, training, cropping, evaluation) gets its own
/// independent but reproducible stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  Rng child(std::string_view tag) const;
  Rng child(std::uint64_t index) const;

  double uniform(double lo = 0.0, double hi = 1.0);
  int uniform_int(int lo, int hi);  // inclusive bounds
  double normal(double mean = 0.0, double stddev = 1.0);
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 14695981039346656037ull);

}  // namespace tlsr
