#pragma once

#include <cstdint>
#include <limits>

namespace lrhess {

/// One SplitMix64 output step applied to `x` (used for seed derivation).
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of trial `trial_index` under `base_seed`.
inline std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial_index) {
  return splitmix64(base_seed ^ trial_index);
}

/// SplitMix64 stream with Box–Muller normals. Single owner; not thread safe.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type next();
  result_type operator()() { return next(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lrhess
