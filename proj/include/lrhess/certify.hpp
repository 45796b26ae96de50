#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lrhess/matrix.hpp"
#include "lrhess/rng.hpp"
#include "lrhess/sampling.hpp"
#include "lrhess/tangent.hpp"

namespace lrhess {

/// E[v₁ᵖ] for v uniform on S^{n−1}: (p−1)!! / (n(n+2)···(n+p−2)).
/// Requires even p >= 2 and n >= 2.
double moment_closed_form(std::size_t n, int p);

struct MomentEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Sample mean of v₁ᵖ over `samples` sphere draws (samples >= 1000).
MomentEstimate moment_monte_carlo(std::size_t n, int p, std::size_t samples, SplitMix64& rng);

struct CompositionMax {
  int r = 0;
  int p = 0;
  double max_value = 0.0;
  std::string max_exact;    // reduced fraction, e.g. "3" or "45/2"
  std::vector<int> argmax;  // first maximizer in lexicographic enumeration
  double bound = 0.0;
  std::string bound_exact;  // (100r)^{p−1}
  bool within_bound = false;
  std::size_t compositions = 0;
};

/// Exhaustive max of (2p)!/p! · Πᵢ (αᵢ/2)!/αᵢ! over compositions of 2p into
/// r even nonnegative parts, in exact rational arithmetic.
/// Throws SizeLimitError for r > 12 or p > 8.
CompositionMax composition_moment_max(int r, int p);

enum class ConcentrationMethod { dense_kron, power_iteration };

std::string_view to_string(ConcentrationMethod method);

struct ConcentrationReport {
  std::size_t n = 0;
  std::size_t r = 0;
  std::size_t M = 0;
  double deviation_norm = 0.0;
  bool event_E1 = false;
  ConcentrationMethod method = ConcentrationMethod::dense_kron;
  int iterations = 0;
};

struct ConcentrationOptions {
  int max_iters = 200;
  double tolerance = 1e-6;
  std::size_t block = 32;
  std::size_t kron_cap = kDefaultKronCap;
};

/// ‖P_T S P_T − P_T‖ with S = (1/M) Σ n² (uᵢuᵢᵀ)⊗(vᵢvᵢᵀ).
/// dense_kron materializes the n²×n² matrix; power_iteration runs a block
/// subspace iteration on T in O(M n r) per product.
ConcentrationReport operator_concentration(const TangentSpace& t, const MeasurementSet& ms,
                                           ConcentrationMethod method,
                                           const ConcentrationOptions& options = {});
/// dense_kron when n fits under the cap, else matrix-free.
ConcentrationReport operator_concentration(const TangentSpace& t, const MeasurementSet& ms);

/// S G = (n²/M) Σ (uᵢᵀ G vᵢ) uᵢ vᵢᵀ
Matrix apply_sampling_operator(const MeasurementSet& ms, const Matrix& g);

/// ‖P_T⊥ S G‖ (operator norm). Requires ‖P_T⊥ G‖_F <= 1e−8 ‖G‖_F.
double tangent_leakage(const TangentSpace& t, const Matrix& g, const MeasurementSet& ms);

struct CertificateReport {
  std::size_t L = 0;
  std::size_t m = 0;
  std::vector<double> x_norms;     // ‖Xᵢ‖_F, i = 0..L
  std::vector<double> perp_terms;  // ‖P_T⊥ S̃ᵢ P_T X_{i−1}‖, i = 1..L
  double perp_norm = 0.0;          // ‖P_T⊥ Y_L‖
  double tangent_gap = 0.0;        // ‖P_T Y_L − sign(H)‖_F
  double telescoping_gap = 0.0;    // ‖P_T Y_L + X_L − sign(H)‖_F
  double contraction_fraction = 0.0;
  bool success = false;
};

/// Golfing recursion with L fresh batches of m measurements:
///   Yᵢ = Y_{i−1} + S̃ᵢ P_T X_{i−1},  Xᵢ = P_T X_{i−1} − P_T S̃ᵢ P_T X_{i−1}.
/// Success: perp_norm <= 1/2 and ‖Xᵢ‖ <= ‖X_{i−1}‖/2 on at least 90% of steps.
CertificateReport golfing_certificate(const LowRankInstance& inst, std::size_t L, std::size_t m,
                                      SplitMix64& rng, double rank_tol = 1e-8);

struct ConeCheck {
  double lhs = 0.0;    // ‖P_T Δ‖_F
  double rhs = 0.0;    // 2n ‖P_T⊥ Δ‖_F
  double slack = 0.0;  // n · tol_primal, absorbs the solver's constraint residual
  bool holds = false;
};

ConeCheck cone_condition(const TangentSpace& t, const Matrix& delta, double tol_primal = 1e-8);

/// ⟨sign(H), P_U Δ P_U⟩ + ‖P_T⊥ Δ‖₁ with Δ = Ĥ − H.
double prepare_inequality(const Matrix& h, const TangentSpace& t, const Matrix& h_hat,
                          double rank_tol = 1e-8);

}  // namespace lrhess
