#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "lrhess/matrix.hpp"
#include "lrhess/rng.hpp"

namespace lrhess::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng) {
  Matrix a(rows, cols);
  for (double& x : a.data()) x = rng.normal();
  return a;
}

inline Eigen::MatrixXd to_eigen(const Matrix& a) {
  Eigen::MatrixXd e(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) e(i, j) = a(i, j);
  return e;
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix a(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) a(i, j) = e(i, j);
  return a;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

}  // namespace lrhess::test
