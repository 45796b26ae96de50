#include "lrhess/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lrhess/errors.hpp"
#include "lrhess/linalg.hpp"

namespace lrhess {

void SolverConfig::validate() const {
  require(rho > 0.0, "SolverConfig: rho must be positive");
  require(max_iters >= 1, "SolverConfig: max_iters must be at least 1");
  require(tol_primal > 0.0 && tol_dual > 0.0, "SolverConfig: tolerances must be positive");
  require(rank_tol > 0.0 && rank_tol < 1.0, "SolverConfig: rank_tol must lie in (0, 1)");
}

std::string_view to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged:
      return "converged";
    case SolverStatus::max_iters:
      return "max_iters";
    case SolverStatus::infeasible_gram:
      return "infeasible_gram";
  }
  return "unknown";
}

namespace {

void check_set(const MeasurementSet& ms) {
  require(ms.n >= 1, "MeasurementSet: dimension must be positive");
  require(!ms.records.empty(), "MeasurementSet: at least one measurement is required");
  for (const auto& m : ms.records)
    require(m.u.size() == ms.n && m.v.size() == ms.n, "MeasurementSet: record dimension mismatch");
}

}  // namespace

Vector apply_measurements(const MeasurementSet& ms, const Matrix& x) {
  check_set(ms);
  require(x.rows() == ms.n && x.cols() == ms.n, "apply_measurements: dimension mismatch");
  Vector out(ms.size());
  for (std::size_t i = 0; i < ms.size(); ++i)
    out[i] = bilinear(ms.records[i].u, x, ms.records[i].v);
  return out;
}

Matrix adjoint_measurements(const MeasurementSet& ms, std::span<const double> y) {
  check_set(ms);
  require(y.size() == ms.size(), "adjoint_measurements: length mismatch");
  const std::size_t n = ms.n;
  Matrix out(n, n);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto& u = ms.records[i].u;
    const auto& v = ms.records[i].v;
    for (std::size_t p = 0; p < n; ++p) {
      const double c = y[i] * u[p];
      auto row = out.row(p);
      for (std::size_t q = 0; q < n; ++q) row[q] += c * v[q];
    }
  }
  return out;
}

double max_constraint_violation(const MeasurementSet& ms, const Matrix& x) {
  const Vector ax = apply_measurements(ms, x);
  double worst = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i)
    worst = std::max(worst, std::abs(ax[i] - ms.records[i].b));
  return worst;
}

Matrix gram_matrix(const MeasurementSet& ms) {
  check_set(ms);
  const std::size_t m = ms.size();
  Matrix g(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double value = dot(ms.records[i].u, ms.records[j].u) * dot(ms.records[i].v, ms.records[j].v);
      g(i, j) = value;
      g(j, i) = value;
    }
  return g;
}

GramFactor gram_factorize(const MeasurementSet& ms) {
  check_set(ms);
  require(ms.size() <= ms.n * ms.n, "gram_factorize: M exceeds n^2, the Gram matrix is singular");
  const Matrix g = gram_matrix(ms);
  double trace = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) trace += g(i, i);
  const double floor = 1e-12 * trace / static_cast<double>(g.rows());
  auto lower = cholesky(g, floor);
  if (!lower) return {};
  return {std::move(*lower), true};
}

Matrix affine_project(const Matrix& x, const MeasurementSet& ms, const GramFactor& factor) {
  require(factor.valid, "affine_project: invalid Gram factor");
  require(factor.lower.rows() == ms.size(), "affine_project: factor does not match measurements");
  Vector residual = apply_measurements(ms, x);
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = ms.records[i].b - residual[i];
  const Vector y = cholesky_solve(factor.lower, residual);
  return x + adjoint_measurements(ms, y);
}

AffineConstraint::AffineConstraint(const MeasurementSet& ms)
    : n_(ms.n), us_(ms.size(), ms.n), vs_(ms.size(), ms.n), b_(ms.size()) {
  check_set(ms);
  const std::size_t m = ms.size();
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(ms.records[i].u.begin(), ms.records[i].u.end(), us_.row(i).begin());
    std::copy(ms.records[i].v.begin(), ms.records[i].v.end(), vs_.row(i).begin());
    b_[i] = ms.records[i].b;
  }
  overdetermined_ = m > n_ * n_;

  if (!overdetermined_) {
    const Matrix uu = us_ * us_.transpose();
    const Matrix vv = vs_ * vs_.transpose();
    Matrix g(m, m);
    for (std::size_t k = 0; k < m * m; ++k) g.data()[k] = uu.data()[k] * vv.data()[k];
    // trace(G) = M for unit directions
    auto lower = cholesky(g, 1e-12);
    if (!lower) return;
    lower_ = std::move(*lower);
    valid_ = true;
    return;
  }

  // Normal equations Σ aᵢaᵢᵀ z = Σ bᵢaᵢ with aᵢ = vec(uᵢvᵢᵀ) = uᵢ ⊗ vᵢ.
  const std::size_t nn = n_ * n_;
  Matrix normal(nn, nn);
  Vector rhs(nn, 0.0);
  Vector a(nn);
  for (std::size_t i = 0; i < m; ++i) {
    auto u = us_.row(i);
    auto v = vs_.row(i);
    for (std::size_t p = 0; p < n_; ++p)
      for (std::size_t q = 0; q < n_; ++q) a[p * n_ + q] = u[p] * v[q];
    for (std::size_t s = 0; s < nn; ++s) {
      rhs[s] += b_[i] * a[s];
      const double as = a[s];
      auto row = normal.row(s);
      for (std::size_t t = 0; t <= s; ++t) row[t] += as * a[t];
    }
  }
  for (std::size_t s = 0; s < nn; ++s)
    for (std::size_t t = s + 1; t < nn; ++t) normal(s, t) = normal(t, s);
  auto lower = cholesky(normal, 1e-12 * static_cast<double>(m) / static_cast<double>(nn));
  if (!lower) return;
  fixed_point_ = unvec(cholesky_solve(*lower, rhs), n_);
  valid_ = true;
}

Vector AffineConstraint::apply(const Matrix& x) const {
  require(x.rows() == n_ && x.cols() == n_, "AffineConstraint: dimension mismatch");
  const std::size_t m = b_.size();
  Vector out(m);
  Vector xv(n_);
  for (std::size_t i = 0; i < m; ++i) {
    auto v = vs_.row(i);
    for (std::size_t p = 0; p < n_; ++p) xv[p] = dot(x.row(p), v);
    out[i] = dot(us_.row(i), xv);
  }
  return out;
}

Matrix AffineConstraint::adjoint(std::span<const double> y) const {
  require(y.size() == b_.size(), "AffineConstraint: length mismatch");
  Matrix out(n_, n_);
  for (std::size_t i = 0; i < b_.size(); ++i) {
    auto u = us_.row(i);
    auto v = vs_.row(i);
    for (std::size_t p = 0; p < n_; ++p) {
      const double c = y[i] * u[p];
      if (c == 0.0) continue;
      auto row = out.row(p);
      for (std::size_t q = 0; q < n_; ++q) row[q] += c * v[q];
    }
  }
  return out;
}

Matrix AffineConstraint::project(const Matrix& x) const {
  require(valid_, "AffineConstraint: constraint system is singular");
  if (overdetermined_) return fixed_point_;
  Vector residual = apply(x);
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = b_[i] - residual[i];
  const Vector y = cholesky_solve(lower_, residual);
  Matrix out = adjoint(y);
  out += x;
  return out;
}

double AffineConstraint::max_violation(const Matrix& x) const {
  const Vector ax = apply(x);
  double worst = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) worst = std::max(worst, std::abs(ax[i] - b_[i]));
  return worst;
}

Matrix svt(const Matrix& a, double tau) {
  require(tau >= 0.0, "svt: tau must be nonnegative");
  const std::size_t n = a.rows();
  const SvdFactors f = svd(a);
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = f.sigma[k] - tau;
    if (s <= 0.0) break;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = s * f.U(i, k);
      auto row = out.row(i);
      for (std::size_t j = 0; j < n; ++j) row[j] += c * f.V(j, k);
    }
  }
  return out;
}

RecoverySolution solve_nuclear_min(const MeasurementSet& ms, const SolverConfig& cfg,
                                   SolveTrace* trace) {
  cfg.validate();
  const AffineConstraint constraint(ms);
  const std::size_t n = ms.n;
  if (!constraint.valid()) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {Matrix(n, n), 0, inf, inf, SolverStatus::infeasible_gram};
  }

  double rho = cfg.rho;
  Matrix z = constraint.project(Matrix(n, n));
  Matrix w(n, n);

  RecoverySolution best{Matrix(n, n), 0, std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity(), SolverStatus::max_iters};
  double best_score = std::numeric_limits<double>::infinity();

  for (int k = 1; k <= cfg.max_iters; ++k) {
    Matrix x = svt(z - w, 1.0 / rho);
    Matrix z_next = constraint.project(x + w);
    const Matrix gap = x - z_next;
    w += gap;

    const double primal = constraint.max_violation(x);
    const double dual = rho * frobenius_norm(z_next - z);
    z = std::move(z_next);
    if (trace) trace->combined_residual.push_back(std::max(primal, dual));

    Matrix reported = cfg.symmetrize ? symmetric_part(x) : x;
    const double reported_primal = cfg.symmetrize ? constraint.max_violation(reported) : primal;

    const double score = std::max(reported_primal, dual);
    if (score < best_score) {
      best_score = score;
      best = {reported, k, reported_primal, dual, SolverStatus::max_iters};
    }
    if (reported_primal <= cfg.tol_primal && primal <= cfg.tol_primal && dual <= cfg.tol_dual)
      return {std::move(reported), k, reported_primal, dual, SolverStatus::converged};

    if (cfg.adaptive_rho) {
      const double admm_primal = frobenius_norm(gap);
      if (admm_primal > 10.0 * dual) {
        rho *= 2.0;
        w *= 0.5;
      } else if (dual > 10.0 * admm_primal) {
        rho *= 0.5;
        w *= 2.0;
      }
    }
  }
  best.iterations = cfg.max_iters;
  return best;
}

RecoverySolution solve_min_frobenius(const MeasurementSet& ms) {
  const AffineConstraint constraint(ms);
  const std::size_t n = ms.n;
  if (!constraint.valid()) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {Matrix(n, n), 0, inf, inf, SolverStatus::infeasible_gram};
  }
  Matrix h = constraint.project(Matrix(n, n));
  const double residual = constraint.max_violation(h);
  return {std::move(h), 0, residual, 0.0, SolverStatus::converged};
}

double recovery_error(const Matrix& h_hat, const Matrix& h) {
  require(h_hat.rows() == h.rows() && h_hat.cols() == h.cols(), "recovery_error: shape mismatch");
  return frobenius_norm(h_hat - h) / std::max(frobenius_norm(h), 1e-300);
}

}  // namespace lrhess
