#pragma once

#include <cstddef>

#include "lrhess/matrix.hpp"

namespace lrhess {

/// Tangent space T = { A : (I − P_U) A (I − P_U) = 0 } of the rank-r matrices
/// with column space span(U), for a column-orthonormal n×r basis U.
class TangentSpace {
 public:
  /// Takes an already orthonormal basis; throws PreconditionError if UᵀU
  /// deviates from I_r by more than 1e-10 entrywise.
  explicit TangentSpace(Matrix basis);

  /// Orthonormalizes arbitrary independent columns first.
  static TangentSpace from_columns(const Matrix& columns);

  std::size_t n() const { return basis_.rows(); }
  std::size_t rank() const { return basis_.cols(); }
  const Matrix& basis() const { return basis_; }
  /// P_U = U Uᵀ
  const Matrix& projector() const { return projector_; }
  /// dim T = 2nr − r²
  std::size_t dimension() const { return 2 * n() * rank() - rank() * rank(); }

  /// P_U A + A P_U − P_U A P_U
  Matrix project(const Matrix& a) const;
  /// A − P_T A, i.e. (I − P_U) A (I − P_U)
  Matrix project_perp(const Matrix& a) const;

 private:
  Matrix basis_;
  Matrix projector_;
};

Matrix tangent_project(const TangentSpace& t, const Matrix& a);
Matrix tangent_project_perp(const TangentSpace& t, const Matrix& a);

/// n²×n² matrix acting on row-major vectorized n×n matrices.
struct VectorizedOperator {
  std::size_t n = 0;
  Matrix matrix;

  Matrix apply(const Matrix& a) const;
};

inline constexpr std::size_t kDefaultKronCap = 64;

/// P_U ⊗ I + I ⊗ P_U − P_U ⊗ P_U. Refuses (SizeLimitError) when n > cap.
VectorizedOperator kron_operator(const TangentSpace& t, std::size_t cap = kDefaultKronCap);

}  // namespace lrhess
