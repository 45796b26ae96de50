#pragma once

#include <cstddef>
#include <optional>

#include "lrhess/matrix.hpp"

namespace lrhess {

struct SvdFactors {
  Matrix U;      // n×n orthogonal, columns are left singular vectors
  Vector sigma;  // nonincreasing, nonnegative
  Matrix V;      // n×n orthogonal, columns are right singular vectors
  int sweeps = 0;
};

struct SvdOptions {
  int max_sweeps = 60;
  double tolerance = 1e-12;  // relative off-diagonal threshold per rotation
};

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
///
/// Singular vectors follow a fixed sign convention: the first entry of each
/// left singular vector with magnitude above 1e-12 is positive, and the
/// matching right vector is flipped with it. Columns belonging to exactly
/// zero singular values are completed to an orthonormal basis.
///
/// Throws ConvergenceError if the sweep cap is hit and PreconditionError for
/// non-square or non-finite input.
SvdFactors svd(const Matrix& a, const SvdOptions& options = {});

Matrix reconstruct(const SvdFactors& f);

enum class Schatten { operator_norm, frobenius, nuclear };

double schatten_norm(const Matrix& a, Schatten which);
double nuclear_norm(const Matrix& a);
double spectral_norm(const Matrix& a);

/// U·sign(Σ)·Vᵀ; singular values at or below rank_tol·σ_max count as zero.
Matrix matrix_sign(const Matrix& a, double rank_tol = 1e-8);

std::size_t numerical_rank(const Matrix& a, double rank_tol = 1e-8);

/// Lower Cholesky factor of a symmetric positive definite matrix, or nullopt
/// if some pivot falls below pivot_floor.
std::optional<Matrix> cholesky(const Matrix& a, double pivot_floor = 0.0);

/// Solves L Lᵀ x = b.
Vector cholesky_solve(const Matrix& lower, std::span<const double> b);

/// Orthonormal basis of the column space (modified Gram–Schmidt, two passes).
/// Throws PreconditionError when the columns are numerically dependent.
Matrix orthonormalize_columns(const Matrix& a);

}  // namespace lrhess
