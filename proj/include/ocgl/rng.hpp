#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>

namespace ocgl {

/// Seeded generator used by every stochastic component. Independent consumers
/// (ego sampling, replay sampling, reservoir decisions) each own one, derived
/// from the run seed and a stream tag, so that enabling one component never
/// shifts the draws seen by another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  /// Uniform double in [0, 1).
  double uniform();
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p) { return uniform() < p; }

  /// Textual engine state, used for state hashing.
  [[nodiscard]] std::string state() const;

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ocgl
