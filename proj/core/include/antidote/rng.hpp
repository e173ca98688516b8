#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace antidote {

// SplitMix64 (Steele, Lea & Flood, 2014): 64 bits of state, one add and
// three xor-shift-multiply rounds per draw. All variates below are derived
// with integer arithmetic, sqrt and log only, so a seed reproduces the same
// sequence on any IEEE-754 platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via the Marsaglia polar method.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t state_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Derives an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace antidote
