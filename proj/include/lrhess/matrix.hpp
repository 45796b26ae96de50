#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace lrhess {

using Vector = std::vector<double>;

/// Dense real matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  Vector column(std::size_t j) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Matrix transpose() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double scale);

  /// this += scale * other
  Matrix& add_scaled(const Matrix& other, double scale);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

Matrix operator+(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix lhs, const Matrix& rhs);
Matrix operator*(Matrix lhs, double scale);
Matrix operator*(double scale, Matrix rhs);
Matrix operator*(const Matrix& lhs, const Matrix& rhs);

Vector matvec(const Matrix& a, std::span<const double> x);
/// aᵀ x
Vector matvec_transpose(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// u vᵀ
Matrix outer(std::span<const double> u, std::span<const double> v);
/// uᵀ A v
double bilinear(std::span<const double> u, const Matrix& a, std::span<const double> v);

/// Trace inner product ⟨A, B⟩ = tr(AᵀB).
double frobenius_inner(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);

/// Row-major vectorization; vec(A B C) = (A ⊗ Cᵀ) vec(B).
Vector vec(const Matrix& a);
Matrix unvec(std::span<const double> x, std::size_t n);
Matrix kron(const Matrix& a, const Matrix& b);

Matrix symmetric_part(const Matrix& a);

}  // namespace lrhess
