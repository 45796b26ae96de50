#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "lrhess/matrix.hpp"
#include "lrhess/sampling.hpp"

namespace lrhess {

struct SolverConfig {
  double rho = 1.0;
  int max_iters = 5000;
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  bool symmetrize = true;
  double rank_tol = 1e-8;
  /// Residual balancing: double or halve rho when one ADMM residual exceeds
  /// the other by a factor of 10.
  bool adaptive_rho = false;

  /// Throws PreconditionError on nonpositive tolerances, rho or max_iters.
  void validate() const;
};

enum class SolverStatus { converged, max_iters, infeasible_gram };

std::string_view to_string(SolverStatus status);

struct RecoverySolution {
  Matrix H_hat;
  int iterations = 0;
  double primal_residual = 0.0;  // max_i |uᵢᵀ Ĥ vᵢ − bᵢ|
  double dual_residual = 0.0;    // rho ‖Z_{k+1} − Z_k‖_F
  SolverStatus status = SolverStatus::converged;
};

/// A(X)ᵢ = uᵢᵀ X vᵢ
Vector apply_measurements(const MeasurementSet& ms, const Matrix& x);
/// A*(y) = Σᵢ yᵢ uᵢ vᵢᵀ
Matrix adjoint_measurements(const MeasurementSet& ms, std::span<const double> y);
/// max_i |uᵢᵀ X vᵢ − bᵢ|
double max_constraint_violation(const MeasurementSet& ms, const Matrix& x);

/// Gᵢⱼ = (uᵢᵀuⱼ)(vᵢᵀvⱼ) = ⟨uᵢvᵢᵀ, uⱼvⱼᵀ⟩
Matrix gram_matrix(const MeasurementSet& ms);

struct GramFactor {
  Matrix lower;
  bool valid = false;  // false: a pivot fell below 1e-12·trace(G)/M
};

/// Cholesky factor of the Gram matrix. Requires M <= n² (PreconditionError
/// otherwise); a numerically singular Gram yields valid = false.
GramFactor gram_factorize(const MeasurementSet& ms);

/// Euclidean projection of X onto { Z : uᵢᵀ Z vᵢ = bᵢ },
/// Z = X + A*(G⁻¹(b − A(X))).
Matrix affine_project(const Matrix& x, const MeasurementSet& ms, const GramFactor& factor);

/// Affine constraint set used by the solvers. For M <= n² it projects
/// through the M×M Gram system; for M > n² the constraints pin down a single
/// point (the least-squares solution of the n²×n² normal equations) and the
/// projection returns that point.
class AffineConstraint {
 public:
  explicit AffineConstraint(const MeasurementSet& ms);

  bool valid() const { return valid_; }
  bool overdetermined() const { return overdetermined_; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return b_.size(); }

  Matrix project(const Matrix& x) const;
  Vector apply(const Matrix& x) const;
  Matrix adjoint(std::span<const double> y) const;
  double max_violation(const Matrix& x) const;

 private:
  std::size_t n_;
  Matrix us_;  // M×n, row i = uᵢ
  Matrix vs_;  // M×n, row i = vᵢ
  Vector b_;
  bool overdetermined_ = false;
  bool valid_ = false;
  Matrix lower_;        // Gram factor (dual path)
  Matrix fixed_point_;  // unique feasible point (overdetermined path)
};

/// Proximal map of tau‖·‖₁: singular values shrunk to max(σ − tau, 0).
Matrix svt(const Matrix& a, double tau);

/// Per-iteration record of max(primal, dual), for convergence diagnostics.
struct SolveTrace {
  std::vector<double> combined_residual;
};

/// min ‖X‖₁ subject to uᵢᵀ X vᵢ = bᵢ, by scaled ADMM:
///   X ← svt(Z − W, 1/rho),  Z ← affine_project(X + W),  W ← W + X − Z.
/// Reports the low-rank iterate X (symmetrized when cfg.symmetrize).
/// Converged means its constraint violation is <= tol_primal and the dual
/// residual is <= tol_dual. On max_iters the best iterate is returned.
RecoverySolution solve_nuclear_min(const MeasurementSet& ms, const SolverConfig& cfg = {},
                                   SolveTrace* trace = nullptr);

/// Minimum-Frobenius feasible point, A*(G⁻¹ b).
RecoverySolution solve_min_frobenius(const MeasurementSet& ms);

/// ‖Ĥ − H‖_F / max(‖H‖_F, 1e-300)
double recovery_error(const Matrix& h_hat, const Matrix& h);

inline bool is_success(double rel_error, double success_tol) { return rel_error <= success_tol; }

}  // namespace lrhess
