#include "lrhess/certify.hpp"

#include <algorithm>
#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>

#include "lrhess/errors.hpp"
#include "lrhess/linalg.hpp"

namespace lrhess {

double moment_closed_form(std::size_t n, int p) {
  require(n >= 2, "moment_closed_form: n must be at least 2");
  require(p >= 2 && p % 2 == 0, "moment_closed_form: p must be even and at least 2");
  double value = 1.0;
  for (int k = 0; k < p / 2; ++k) {
    value *= static_cast<double>(2 * k + 1);
    value /= static_cast<double>(n) + 2.0 * k;
  }
  return value;
}

MomentEstimate moment_monte_carlo(std::size_t n, int p, std::size_t samples, SplitMix64& rng) {
  require(samples >= 1000, "moment_monte_carlo: need at least 1000 samples");
  require(p >= 1, "moment_monte_carlo: p must be positive");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const Vector v = sample_sphere(n, rng);
    const double x = std::pow(v[0], p);
    const double d = x - mean;
    mean += d / static_cast<double>(k + 1);
    m2 += d * (x - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples))};
}

CompositionMax composition_moment_max(int r, int p) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  require(r >= 1 && p >= 2, "composition_moment_max: need r >= 1 and p >= 2");
  if (r > 12 || p > 8) throw SizeLimitError("composition_moment_max: enumeration limited to r <= 12, p <= 8");

  auto factorial = [](int k) {
    cpp_int f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  // parts are αᵢ = 2βᵢ; f[β] = β!/(2β)!
  std::vector<cpp_rational> f(p + 1);
  for (int b = 0; b <= p; ++b) f[b] = cpp_rational(factorial(b), factorial(2 * b));
  const cpp_rational lead(factorial(2 * p), factorial(p));

  CompositionMax out;
  out.r = r;
  out.p = p;
  cpp_rational best = -1;
  std::vector<int> beta(r, 0);
  beta[r - 1] = p;
  // lexicographic walk over compositions of p into r nonnegative parts
  while (true) {
    cpp_rational value = lead;
    for (int b : beta) value *= f[b];
    ++out.compositions;
    if (value > best) {
      best = value;
      out.argmax.assign(beta.begin(), beta.end());
      for (int& a : out.argmax) a *= 2;
    }
    // successor: bump the rightmost position followed by a nonzero suffix
    int tail = beta[r - 1];
    int j = r - 2;
    while (j >= 0 && tail == 0) {
      tail += beta[j];
      beta[j] = 0;
      --j;
    }
    if (j < 0) break;
    beta[j] += 1;
    for (int k = j + 1; k < r; ++k) beta[k] = 0;
    beta[r - 1] = tail - 1;
  }

  cpp_int bound = 1;
  for (int k = 0; k < p - 1; ++k) bound *= 100 * r;
  out.max_exact = best.str();
  out.max_value = best.convert_to<double>();
  out.bound_exact = bound.str();
  out.bound = bound.convert_to<double>();
  out.within_bound = best <= cpp_rational(bound);
  return out;
}

std::string_view to_string(ConcentrationMethod method) {
  return method == ConcentrationMethod::dense_kron ? "dense_kron" : "power_iteration";
}

namespace {

void check_dims(const TangentSpace& t, const MeasurementSet& ms) {
  require(!ms.records.empty(), "certify: empty measurement set");
  require(ms.n == t.n(), "certify: tangent space and measurements differ in dimension");
}

double dense_deviation(const TangentSpace& t, const MeasurementSet& ms, std::size_t cap) {
  const std::size_t n = t.n();
  const std::size_t nn = n * n;
  const Matrix p = kron_operator(t, cap).matrix;
  Matrix s(nn, nn);
  Vector a(nn);
  for (const auto& rec : ms.records) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i * n + j] = rec.u[i] * rec.v[j];
    for (std::size_t i = 0; i < nn; ++i) {
      auto row = s.row(i);
      const double ai = a[i];
      for (std::size_t j = 0; j <= i; ++j) row[j] += ai * a[j];
    }
  }
  const double scale = static_cast<double>(nn) / static_cast<double>(ms.size());
  for (std::size_t i = 0; i < nn; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      s(i, j) *= scale;
      s(j, i) = s(i, j);
    }
    s(i, i) *= scale;
  }
  Matrix d = p * s * p;
  d -= p;
  return spectral_norm(symmetric_part(d));
}

// T ∋ Z = U A + B Uᵀ with A = UᵀZ (r×n) and B = (I − P_U) Z U (n×r); the map
// Z ↦ (A, B) is an isometry, so the deviation operator is studied on R^{2nr}.
class TangentCoordinates {
 public:
  TangentCoordinates(const TangentSpace& t, const MeasurementSet& ms)
      : n_(t.n()), r_(t.rank()), u_(t.basis()), ms_(ms), ut_u_(ms.size(), r_), ut_v_(ms.size(), r_) {
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const Vector a = matvec_transpose(u_, ms.records[i].u);
      const Vector b = matvec_transpose(u_, ms.records[i].v);
      std::copy(a.begin(), a.end(), ut_u_.row(i).begin());
      std::copy(b.begin(), b.end(), ut_v_.row(i).begin());
    }
    scale_ = static_cast<double>(n_ * n_) / static_cast<double>(ms.size());
  }

  std::size_t size() const { return 2 * n_ * r_; }

  // removes the U-component of the B block so the vector stays in T
  void constrain(Vector& x) const {
    double* b = x.data() + r_ * n_;
    for (std::size_t k = 0; k < r_; ++k) {
      for (std::size_t l = 0; l < r_; ++l) {
        double c = 0.0;
        for (std::size_t i = 0; i < n_; ++i) c += u_(i, l) * b[i * r_ + k];
        for (std::size_t i = 0; i < n_; ++i) b[i * r_ + k] -= c * u_(i, l);
      }
    }
  }

  // (P_T S P_T − P_T) in coordinates
  Vector apply(const Vector& x) const {
    const double* a = x.data();
    const double* b = x.data() + r_ * n_;
    Matrix utq(r_, n_);
    Matrix qu(n_, r_);
    Vector av(r_);
    Vector ub(r_);
    for (std::size_t i = 0; i < ms_.size(); ++i) {
      const auto& u = ms_.records[i].u;
      const auto& v = ms_.records[i].v;
      auto uu = ut_u_.row(i);
      auto vu = ut_v_.row(i);
      std::fill(av.begin(), av.end(), 0.0);
      std::fill(ub.begin(), ub.end(), 0.0);
      for (std::size_t k = 0; k < r_; ++k)
        for (std::size_t j = 0; j < n_; ++j) av[k] += a[k * n_ + j] * v[j];
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < r_; ++k) ub[k] += u[j] * b[j * r_ + k];
      double c = 0.0;
      for (std::size_t k = 0; k < r_; ++k) c += uu[k] * av[k] + ub[k] * vu[k];
      c *= scale_;
      for (std::size_t k = 0; k < r_; ++k) {
        auto row = utq.row(k);
        const double w = c * uu[k];
        for (std::size_t j = 0; j < n_; ++j) row[j] += w * v[j];
      }
      for (std::size_t j = 0; j < n_; ++j) {
        auto row = qu.row(j);
        const double w = c * u[j];
        for (std::size_t k = 0; k < r_; ++k) row[k] += w * vu[k];
      }
    }
    const Matrix utqu = utq * u_;
    const Matrix b_new = qu - u_ * utqu;
    Vector y(size());
    for (std::size_t k = 0; k < r_ * n_; ++k) y[k] = utq.data()[k] - a[k];
    for (std::size_t k = 0; k < n_ * r_; ++k) y[r_ * n_ + k] = b_new.data()[k] - b[k];
    return y;
  }

 private:
  std::size_t n_;
  std::size_t r_;
  const Matrix& u_;
  const MeasurementSet& ms_;
  Matrix ut_u_;
  Matrix ut_v_;
  double scale_ = 1.0;
};

// Gram–Schmidt twice over; columns that collapse are replaced by fresh
// random directions.
void orthonormalize(std::vector<Vector>& block, const TangentCoordinates& coords, SplitMix64& rng) {
  for (std::size_t j = 0; j < block.size(); ++j) {
    for (int attempt = 0;; ++attempt) {
      Vector& x = block[j];
      const double before = norm2(x);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t i = 0; i < j; ++i) {
          const double c = dot(block[i], x);
          for (std::size_t k = 0; k < x.size(); ++k) x[k] -= c * block[i][k];
        }
      const double after = norm2(x);
      if (after > 1e-10 * std::max(before, 1e-300) && after > 0.0) {
        for (double& e : x) e /= after;
        break;
      }
      require(attempt < 10, "operator_concentration: cannot complete an orthonormal block");
      for (double& e : x) e = rng.normal();
      coords.constrain(x);
    }
  }
}

double subspace_deviation(const TangentSpace& t, const MeasurementSet& ms,
                          const ConcentrationOptions& opt, int& iterations) {
  const TangentCoordinates coords(t, ms);
  const std::size_t dim = t.dimension();
  const std::size_t k = std::min(std::max<std::size_t>(opt.block, 1), dim);
  SplitMix64 rng(0x5eedc0ffee123457ULL);

  std::vector<Vector> block(k, Vector(coords.size()));
  for (auto& x : block) {
    for (double& e : x) e = rng.normal();
    coords.constrain(x);
  }
  orthonormalize(block, coords, rng);

  double estimate = 0.0;
  double previous = -1.0;
  iterations = 0;
  for (int it = 1; it <= opt.max_iters; ++it) {
    iterations = it;
    std::vector<Vector> image(k);
    for (std::size_t j = 0; j < k; ++j) image[j] = coords.apply(block[j]);
    Matrix ritz(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) ritz(i, j) = dot(block[i], image[j]);
    estimate = spectral_norm(symmetric_part(ritz));
    if (std::abs(estimate - previous) <= opt.tolerance * std::max(1.0, estimate)) break;
    previous = estimate;
    // Ritz rotation keeps the dominant directions at the front of the block
    const SvdFactors f = svd(symmetric_part(ritz));
    std::vector<Vector> next(k, Vector(coords.size(), 0.0));
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < k; ++i) {
        const double c = f.U(i, j);
        if (c == 0.0) continue;
        for (std::size_t e = 0; e < coords.size(); ++e) next[j][e] += c * image[i][e];
      }
    for (auto& x : next) coords.constrain(x);
    orthonormalize(next, coords, rng);
    block = std::move(next);
  }
  return estimate;
}

}  // namespace

ConcentrationReport operator_concentration(const TangentSpace& t, const MeasurementSet& ms,
                                           ConcentrationMethod method,
                                           const ConcentrationOptions& options) {
  check_dims(t, ms);
  ConcentrationReport rep;
  rep.n = t.n();
  rep.r = t.rank();
  rep.M = ms.size();
  rep.method = method;
  if (method == ConcentrationMethod::dense_kron) {
    rep.deviation_norm = dense_deviation(t, ms, options.kron_cap);
    rep.iterations = 0;
  } else {
    rep.deviation_norm = subspace_deviation(t, ms, options, rep.iterations);
  }
  rep.event_E1 = rep.deviation_norm <= 0.25;
  return rep;
}

ConcentrationReport operator_concentration(const TangentSpace& t, const MeasurementSet& ms) {
  const auto method = t.n() <= kDefaultKronCap ? ConcentrationMethod::dense_kron
                                               : ConcentrationMethod::power_iteration;
  return operator_concentration(t, ms, method);
}

Matrix apply_sampling_operator(const MeasurementSet& ms, const Matrix& g) {
  require(!ms.records.empty(), "apply_sampling_operator: empty measurement set");
  require(g.rows() == ms.n && g.cols() == ms.n, "apply_sampling_operator: dimension mismatch");
  const std::size_t n = ms.n;
  const double scale = static_cast<double>(n * n) / static_cast<double>(ms.size());
  Matrix out(n, n);
  for (const auto& rec : ms.records) {
    const double c = scale * bilinear(rec.u, g, rec.v);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = out.row(i);
      const double w = c * rec.u[i];
      for (std::size_t j = 0; j < n; ++j) row[j] += w * rec.v[j];
    }
  }
  return out;
}

double tangent_leakage(const TangentSpace& t, const Matrix& g, const MeasurementSet& ms) {
  check_dims(t, ms);
  require(frobenius_norm(t.project_perp(g)) <= 1e-8 * frobenius_norm(g),
          "tangent_leakage: G does not lie in the tangent space");
  return spectral_norm(t.project_perp(apply_sampling_operator(ms, g)));
}

CertificateReport golfing_certificate(const LowRankInstance& inst, std::size_t L, std::size_t m,
                                      SplitMix64& rng, double rank_tol) {
  require(L >= 1 && m >= 1, "golfing_certificate: need L >= 1 and m >= 1");
  const TangentSpace& t = inst.tangent;
  const std::size_t n = inst.n();
  const Matrix sign_h = matrix_sign(inst.H, rank_tol);

  CertificateReport rep;
  rep.L = L;
  rep.m = m;
  rep.x_norms.push_back(frobenius_norm(sign_h));

  Matrix x = sign_h;
  Matrix y(n, n);
  MeasurementSet batch{n, {}, MeasurementSource::exact, 0.0};
  batch.records.resize(m);
  std::size_t contracted = 0;
  for (std::size_t i = 1; i <= L; ++i) {
    for (auto& rec : batch.records) {
      rec.u = sample_sphere(n, rng);
      rec.v = sample_sphere(n, rng);
    }
    // re-projecting keeps rounding in T⊥ from being amplified by later batches
    const Matrix xt = t.project(x);
    const Matrix q = apply_sampling_operator(batch, xt);
    y += q;
    rep.perp_terms.push_back(spectral_norm(t.project_perp(q)));
    x = xt - t.project(q);
    rep.x_norms.push_back(frobenius_norm(x));
    if (rep.x_norms[i] <= 0.5 * rep.x_norms[i - 1]) ++contracted;
  }

  const Matrix pty = t.project(y);
  rep.perp_norm = spectral_norm(t.project_perp(y));
  rep.tangent_gap = frobenius_norm(pty - sign_h);
  rep.telescoping_gap = frobenius_norm(pty + x - sign_h);
  rep.contraction_fraction = static_cast<double>(contracted) / static_cast<double>(L);
  rep.success = rep.perp_norm <= 0.5 && rep.contraction_fraction >= 0.9;
  return rep;
}

ConeCheck cone_condition(const TangentSpace& t, const Matrix& delta, double tol_primal) {
  const double n = static_cast<double>(t.n());
  ConeCheck c;
  c.lhs = frobenius_norm(t.project(delta));
  c.rhs = 2.0 * n * frobenius_norm(t.project_perp(delta));
  c.slack = n * tol_primal;
  c.holds = c.lhs <= c.rhs + c.slack;
  return c;
}

double prepare_inequality(const Matrix& h, const TangentSpace& t, const Matrix& h_hat,
                          double rank_tol) {
  require(h.rows() == t.n() && h_hat.rows() == t.n() && h.is_square() && h_hat.is_square(),
          "prepare_inequality: dimension mismatch");
  const Matrix delta = h_hat - h;
  const Matrix& pu = t.projector();
  return frobenius_inner(matrix_sign(h, rank_tol), pu * delta * pu) +
         nuclear_norm(t.project_perp(delta));
}

}  // namespace lrhess
