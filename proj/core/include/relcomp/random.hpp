#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "relcomp/types.hpp"

namespace relcomp {

// Stream keys are derived by hashing (master seed, label, index), so any
// component can draw an independent reproducible stream without caring how
// many numbers other components consumed or in which order they ran.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

// Seeded random source. The engine is std::mt19937_64 (bit-exact by the
// standard); the real-valued transforms are implemented here rather than
// through <random> distributions, whose outputs vary between libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
    return Rng(derive_seed(master, label, index));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  Index below(Index n);

  Vector normal_vector(Index n);
  Matrix normal_matrix(Index rows, Index cols);
  Vector unit_vector(Index n);

  std::vector<Index> permutation(Index n);
  // k distinct values from [0, n), in draw order.
  std::vector<Index> sample_distinct(Index n, Index k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace relcomp
