#pragma once

#include <cmath>
#include <cstddef>

// Empirically calibrated sample-size constants. All logarithms are natural
// unless written log2; ceilings are applied last.
namespace lrhess::constants {

// Exact recovery: M = ⌈C · n r² ln² n⌉.
inline constexpr double kRecoveryC = 1.25;
// Operator concentration ‖P_T S P_T − P_T‖ ≤ 1/4: M = ⌈C · n r ln(1/δ)⌉.
inline constexpr double kConcentrationC = 110.0;
// Tangent leakage ‖P_T⊥ S G‖ ≤ ‖G‖/(4√r): M = ⌈C · n r² ln(1/δ)⌉.
inline constexpr double kLeakageC = 26.0;
// Golfing batch size: m = ⌈c · n r² ln(L/δ)⌉ with L = ⌈12 log2 n⌉.
inline constexpr double kGolfingC = 3.25;
inline constexpr double kGolfingBatchFactor = 12.0;

inline constexpr double kFailureProbability = 0.1;  // δ
inline constexpr double kSuccessTol = 1e-3;
inline constexpr double kDefaultFdDelta = 1e-4;

inline std::size_t ceil_count(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }

inline std::size_t tangent_dimension(std::size_t n, std::size_t r) { return 2 * n * r - r * r; }

inline std::size_t recovery_samples(std::size_t n, std::size_t r) {
  const double ln = std::log(static_cast<double>(n));
  return ceil_count(kRecoveryC * static_cast<double>(n * r * r) * ln * ln);
}

inline std::size_t concentration_samples(std::size_t n, std::size_t r,
                                         double delta = kFailureProbability) {
  return ceil_count(kConcentrationC * static_cast<double>(n * r) * std::log(1.0 / delta));
}

inline std::size_t leakage_samples(std::size_t n, std::size_t r,
                                   double delta = kFailureProbability) {
  return ceil_count(kLeakageC * static_cast<double>(n * r * r) * std::log(1.0 / delta));
}

inline std::size_t golfing_batches(std::size_t n) {
  return ceil_count(kGolfingBatchFactor * std::log2(static_cast<double>(n)));
}

inline std::size_t golfing_batch_size(std::size_t n, std::size_t r,
                                      double delta = kFailureProbability) {
  const double batches = static_cast<double>(golfing_batches(n));
  return ceil_count(kGolfingC * static_cast<double>(n * r * r) * std::log(batches / delta));
}

}  // namespace lrhess::constants
