#include "lrhess/tangent.hpp"

#include <cmath>
#include <string>

#include "lrhess/errors.hpp"
#include "lrhess/linalg.hpp"

namespace lrhess {

TangentSpace::TangentSpace(Matrix basis) : basis_(std::move(basis)) {
  require(basis_.rows() >= 1, "TangentSpace: empty basis");
  require(basis_.cols() >= 1 && basis_.cols() <= basis_.rows(),
          "TangentSpace: rank must satisfy 1 <= r <= n");
  const Matrix gram = basis_.transpose() * basis_;
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = 0; j < gram.cols(); ++j) {
      const double target = i == j ? 1.0 : 0.0;
      require(std::abs(gram(i, j) - target) <= 1e-10, "TangentSpace: basis is not orthonormal");
    }
  projector_ = basis_ * basis_.transpose();
}

TangentSpace TangentSpace::from_columns(const Matrix& columns) {
  return TangentSpace(orthonormalize_columns(columns));
}

Matrix TangentSpace::project(const Matrix& a) const {
  require(a.rows() == n() && a.cols() == n(), "tangent_project: dimension mismatch");
  const Matrix ut = basis_.transpose();
  const Matrix uta = ut * a;        // r×n
  const Matrix au = a * basis_;     // n×r
  const Matrix core = uta * basis_;  // r×r
  // U (UᵀA) + (AU) Uᵀ − U (UᵀAU) Uᵀ
  Matrix out = basis_ * uta;
  out += au * ut;
  out -= basis_ * (core * ut);
  return out;
}

Matrix TangentSpace::project_perp(const Matrix& a) const { return a - project(a); }

Matrix tangent_project(const TangentSpace& t, const Matrix& a) { return t.project(a); }

Matrix tangent_project_perp(const TangentSpace& t, const Matrix& a) { return t.project_perp(a); }

Matrix VectorizedOperator::apply(const Matrix& a) const {
  return unvec(matvec(matrix, vec(a)), n);
}

VectorizedOperator kron_operator(const TangentSpace& t, std::size_t cap) {
  const std::size_t n = t.n();
  if (n > cap)
    throw SizeLimitError("kron_operator: n = " + std::to_string(n) + " exceeds cap " +
                         std::to_string(cap));
  const Matrix& p = t.projector();
  const Matrix id = Matrix::identity(n);
  Matrix op = kron(p, id);
  op += kron(id, p);
  op -= kron(p, p);
  return {n, std::move(op)};
}

}  // namespace lrhess
