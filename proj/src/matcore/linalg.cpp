#include "lrhess/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lrhess/errors.hpp"

namespace lrhess {

namespace {

void rotate_rows(Matrix& m, std::size_t p, std::size_t q, double c, double s) {
  auto rp = m.row(p);
  auto rq = m.row(q);
  for (std::size_t k = 0; k < rp.size(); ++k) {
    const double a = rp[k];
    const double b = rq[k];
    rp[k] = c * a - s * b;
    rq[k] = s * a + c * b;
  }
}

// Fills column `k` of `u` with a unit vector orthogonal to every column in
// `taken`, searching canonical directions in order.
void complete_column(Matrix& u, std::size_t k, const std::vector<bool>& taken) {
  const std::size_t n = u.rows();
  for (std::size_t e = 0; e < n; ++e) {
    Vector x(n, 0.0);
    x[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < u.cols(); ++j) {
        if (!taken[j]) continue;
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += u(i, j) * x[i];
        for (std::size_t i = 0; i < n; ++i) x[i] -= proj * u(i, j);
      }
    }
    const double nx = norm2(x);
    if (nx > 0.5) {
      for (std::size_t i = 0; i < n; ++i) u(i, k) = x[i] / nx;
      return;
    }
  }
}

}  // namespace

SvdFactors svd(const Matrix& a, const SvdOptions& options) {
  require(a.is_square(), "svd: matrix is not square");
  require(all_finite(a), "svd: matrix has non-finite entries");
  const std::size_t n = a.rows();

  // Row k of w is column k of A·V; row k of vt is column k of V.
  Matrix w = a.transpose();
  Matrix vt = Matrix::identity(n);

  int sweep = 0;
  bool rotated = true;
  while (rotated) {
    if (sweep == options.max_sweeps)
      throw ConvergenceError("svd: no convergence after " + std::to_string(sweep) + " sweeps");
    ++sweep;
    rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(w.row(p), w.row(p));
        const double beta = dot(w.row(q), w.row(q));
        const double gamma = dot(w.row(p), w.row(q));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= options.tolerance * std::sqrt(alpha) * std::sqrt(beta) ||
            std::abs(gamma) < std::numeric_limits<double>::min())
          continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate_rows(w, p, q, c, s);
        rotate_rows(vt, p, q, c, s);
        rotated = true;
      }
    }
  }

  Vector norms(n);
  for (std::size_t k = 0; k < n; ++k) norms[k] = norm2(w.row(k));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

  SvdFactors f{Matrix(n, n), Vector(n), Matrix(n, n), sweep};
  const double sigma_max = n == 0 ? 0.0 : norms[order[0]];
  std::vector<bool> taken(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    const double s = norms[src];
    f.sigma[k] = s;
    for (std::size_t i = 0; i < n; ++i) f.V(i, k) = vt(src, i);
    if (s > 0.0 && s > sigma_max * 1e-280) {
      for (std::size_t i = 0; i < n; ++i) f.U(i, k) = w(src, i) / s;
      taken[k] = true;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (taken[k]) continue;
    complete_column(f.U, k, taken);
    taken[k] = true;
  }

  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = f.U(i, k);
      if (std::abs(x) > 1e-12) {
        if (x < 0.0) {
          for (std::size_t j = 0; j < n; ++j) {
            f.U(j, k) = -f.U(j, k);
            f.V(j, k) = -f.V(j, k);
          }
        }
        break;
      }
    }
  }
  return f;
}

Matrix reconstruct(const SvdFactors& f) {
  Matrix us = f.U;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t k = 0; k < us.cols(); ++k) us(i, k) *= f.sigma[k];
  return us * f.V.transpose();
}

double schatten_norm(const Matrix& a, Schatten which) {
  const SvdFactors f = svd(a);
  switch (which) {
    case Schatten::operator_norm:
      return f.sigma.empty() ? 0.0 : f.sigma.front();
    case Schatten::frobenius:
      return norm2(f.sigma);
    case Schatten::nuclear:
      return std::accumulate(f.sigma.begin(), f.sigma.end(), 0.0);
  }
  return 0.0;
}

double nuclear_norm(const Matrix& a) { return schatten_norm(a, Schatten::nuclear); }

double spectral_norm(const Matrix& a) { return schatten_norm(a, Schatten::operator_norm); }

Matrix matrix_sign(const Matrix& a, double rank_tol) {
  require(rank_tol > 0.0 && rank_tol < 1.0, "matrix_sign: rank_tol must lie in (0, 1)");
  const std::size_t n = a.rows();
  const SvdFactors f = svd(a);
  Matrix out(n, n);
  if (n == 0 || f.sigma[0] == 0.0) return out;
  const double threshold = rank_tol * f.sigma[0];
  for (std::size_t k = 0; k < n && f.sigma[k] > threshold; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double uik = f.U(i, k);
      for (std::size_t j = 0; j < n; ++j) out(i, j) += uik * f.V(j, k);
    }
  return out;
}

std::size_t numerical_rank(const Matrix& a, double rank_tol) {
  const SvdFactors f = svd(a);
  if (f.sigma.empty() || f.sigma[0] == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(f.sigma.begin(), f.sigma.end(),
                    [&](double s) { return s > rank_tol * f.sigma[0]; }));
}

std::optional<Matrix> cholesky(const Matrix& a, double pivot_floor) {
  require(a.is_square(), "cholesky: matrix is not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_floor) || d <= 0.0) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      auto li = l.row(i);
      auto lj = l.row(j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Vector cholesky_solve(const Matrix& lower, std::span<const double> b) {
  const std::size_t n = lower.rows();
  require(b.size() == n, "cholesky_solve: dimension mismatch");
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    auto li = lower.row(i);
    double s = y[i];
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * y[k];
    y[i] = s / li[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= lower(k, i) * y[k];
    y[i] = s / lower(i, i);
  }
  return y;
}

Matrix orthonormalize_columns(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t r = a.cols();
  Matrix qt = a.transpose();
  for (std::size_t k = 0; k < r; ++k) {
    auto qk = qt.row(k);
    const double original = norm2(qk);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < k; ++j) {
        auto qj = qt.row(j);
        const double proj = dot(qj, qk);
        for (std::size_t i = 0; i < n; ++i) qk[i] -= proj * qj[i];
      }
    }
    const double nk = norm2(qk);
    if (!(nk > 1e-10 * original) || nk == 0.0)
      throw PreconditionError("orthonormalize_columns: columns are linearly dependent");
    for (double& x : qk) x /= nk;
  }
  return qt.transpose();
}

}  // namespace lrhess
