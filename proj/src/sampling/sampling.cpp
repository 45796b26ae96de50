#include "lrhess/sampling.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "lrhess/csv.hpp"
#include "lrhess/errors.hpp"
#include "lrhess/linalg.hpp"

namespace lrhess {

Vector sample_sphere(std::size_t n, SplitMix64& rng) {
  require(n >= 2, "sample_sphere: n must be at least 2");
  Vector x(n);
  double norm = 0.0;
  while (norm == 0.0) {
    for (double& xi : x) xi = rng.normal();
    norm = norm2(x);
  }
  for (double& xi : x) xi /= norm;
  return x;
}

Measurement measure_exact(const Matrix& h, Vector u, Vector v) {
  require(h.is_square() && u.size() == h.rows() && v.size() == h.rows(),
          "measure_exact: dimension mismatch");
  const double b = bilinear(u, h, v);
  return {std::move(u), std::move(v), b};
}

FunctionOracle::FunctionOracle(std::size_t n, Evaluate evaluate, HessianFn hessian)
    : n_(n),
      evaluate_(std::move(evaluate)),
      hessian_(std::move(hessian)),
      count_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  require(static_cast<bool>(evaluate_), "FunctionOracle: empty function");
}

double FunctionOracle::operator()(std::span<const double> x) const {
  require(x.size() == n_, "FunctionOracle: dimension mismatch");
  count_->fetch_add(1);
  return evaluate_(x);
}

Matrix FunctionOracle::analytic_hessian(std::span<const double> x) const {
  require(has_analytic_hessian(), "FunctionOracle: no analytic Hessian available");
  return hessian_(x);
}

FunctionOracle FunctionOracle::clone() const { return FunctionOracle(n_, evaluate_, hessian_); }

Measurement measure_fd(const FunctionOracle& f, std::span<const double> x, Vector u, Vector v,
                       double delta) {
  require(delta > 0.0 && std::isfinite(delta), "measure_fd: delta must be positive");
  const std::size_t n = f.n();
  require(x.size() == n && u.size() == n && v.size() == n, "measure_fd: dimension mismatch");
  for (double xi : x) require(std::isfinite(xi), "measure_fd: x has non-finite entries");

  Vector point(n);
  auto eval = [&](double sv, double su) {
    for (std::size_t i = 0; i < n; ++i) point[i] = x[i] + sv * delta * v[i] + su * delta * u[i];
    const double value = f(point);
    if (!std::isfinite(value))
      throw InvalidMeasurementError("measure_fd: oracle returned a non-finite value");
    return value;
  };
  const double fpp = eval(+1.0, +1.0);
  const double fmp = eval(-1.0, +1.0);
  const double fpm = eval(+1.0, -1.0);
  const double fmm = eval(-1.0, -1.0);
  const double b = (fpp - fmp - fpm + fmm) / (4.0 * delta * delta);
  if (!std::isfinite(b)) throw InvalidMeasurementError("measure_fd: non-finite quotient");
  return {std::move(u), std::move(v), b};
}

LowRankInstance instance_from_basis(Matrix basis, std::span<const double> spectrum) {
  require(basis.cols() == spectrum.size(), "instance_from_basis: spectrum length must equal r");
  for (double s : spectrum)
    require(s != 0.0 && std::isfinite(s), "instance_from_basis: spectrum entries must be nonzero");
  TangentSpace tangent(std::move(basis));
  const Matrix& u = tangent.basis();
  Matrix scaled = u;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t k = 0; k < scaled.cols(); ++k) scaled(i, k) *= spectrum[k];
  Matrix h = symmetric_part(scaled * u.transpose());
  return {std::move(h), std::move(tangent), Vector(spectrum.begin(), spectrum.end())};
}

LowRankInstance make_instance(std::size_t n, std::size_t r, std::span<const double> spectrum,
                              SplitMix64& rng) {
  require(r >= 1 && r <= n, "make_instance: need 1 <= r <= n");
  require(spectrum.size() == r, "make_instance: spectrum length must equal r");
  for (double s : spectrum) require(s != 0.0, "make_instance: spectrum entries must be nonzero");
  Matrix g(n, r);
  for (double& x : g.data()) x = rng.normal();
  return instance_from_basis(orthonormalize_columns(g), spectrum);
}

LowRankInstance make_instance(std::size_t n, std::size_t r, SplitMix64& rng) {
  require(r >= 1 && r <= n, "make_instance: need 1 <= r <= n");
  Matrix g(n, r);
  for (double& x : g.data()) x = rng.normal();
  Vector spectrum(r);
  for (double& s : spectrum) {
    const double magnitude = 1.0 + rng.uniform();
    s = rng.uniform() < 0.5 ? -magnitude : magnitude;
  }
  return instance_from_basis(orthonormalize_columns(g), spectrum);
}

MeasurementSet build_measurement_set(const LowRankInstance& instance, std::size_t m,
                                     SplitMix64& rng) {
  require(m >= 1, "build_measurement_set: M must be at least 1");
  const std::size_t n = instance.n();
  MeasurementSet set{n, {}, MeasurementSource::exact, 0.0};
  set.records.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Vector u = sample_sphere(n, rng);
    Vector v = sample_sphere(n, rng);
    set.records.push_back(measure_exact(instance.H, std::move(u), std::move(v)));
  }
  return set;
}

MeasurementSet build_measurement_set(const FunctionOracle& f, std::span<const double> x,
                                     double delta, std::size_t m, SplitMix64& rng) {
  require(m >= 1, "build_measurement_set: M must be at least 1");
  const std::size_t n = f.n();
  MeasurementSet set{n, {}, MeasurementSource::finite_difference, delta};
  set.records.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Vector u = sample_sphere(n, rng);
    Vector v = sample_sphere(n, rng);
    set.records.push_back(measure_fd(f, x, std::move(u), std::move(v), delta));
  }
  return set;
}

namespace {

double log_cosh(double z) {
  const double a = std::abs(z);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// r×n matrix with N(0, 4/n) entries, so rows have norm close to 2.
Matrix random_directions(std::size_t r, std::size_t n, SplitMix64& rng) {
  Matrix w(r, n);
  const double scale = 2.0 / std::sqrt(static_cast<double>(n));
  for (double& x : w.data()) x = scale * rng.normal();
  return w;
}

// Σᵢ cᵢ wᵢ wᵢᵀ over the rows of w.
Matrix weighted_gram(const Matrix& w, std::span<const double> c) {
  const std::size_t n = w.cols();
  Matrix h(n, n);
  for (std::size_t k = 0; k < w.rows(); ++k) {
    auto wk = w.row(k);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) h(i, j) += c[k] * wk[i] * wk[j];
  }
  return h;
}

}  // namespace

FunctionOracle builtin_function(std::string_view name, std::size_t n, SplitMix64& rng,
                                const BuiltinOptions& options) {
  const std::size_t r = options.rank;
  require(r >= 1 && r <= n, "builtin_function: need 1 <= rank <= n");

  if (name == "quadratic_lowrank") {
    auto h = std::make_shared<const Matrix>(make_instance(n, r, rng).H);
    return FunctionOracle(
        n, [h](std::span<const double> x) { return 0.5 * bilinear(x, *h, x); },
        [h](std::span<const double>) { return *h; });
  }
  if (name == "ridge_composite") {
    auto w = std::make_shared<const Matrix>(random_directions(r, n, rng));
    const double eps = options.epsilon;
    require(eps >= 0.0, "builtin_function: epsilon must be nonnegative");
    return FunctionOracle(
        n,
        [w, eps](std::span<const double> x) {
          const Vector z = matvec(*w, x);
          double s = 0.0;
          for (double zi : z) s += log_cosh(zi);
          return s + 0.5 * eps * dot(x, x);
        },
        [w, eps](std::span<const double> x) {
          const Vector z = matvec(*w, x);
          Vector c(z.size());
          for (std::size_t k = 0; k < z.size(); ++k) {
            const double t = std::tanh(z[k]);
            c[k] = 1.0 - t * t;
          }
          Matrix h = weighted_gram(*w, c);
          for (std::size_t i = 0; i < h.rows(); ++i) h(i, i) += eps;
          return h;
        });
  }
  if (name == "logistic_composite") {
    auto w = std::make_shared<const Matrix>(random_directions(r, n, rng));
    return FunctionOracle(
        n,
        [w](std::span<const double> x) {
          const Vector z = matvec(*w, x);
          double s = 0.0;
          for (double zi : z) s += softplus(zi);
          return s;
        },
        [w](std::span<const double> x) {
          const Vector z = matvec(*w, x);
          Vector c(z.size());
          for (std::size_t k = 0; k < z.size(); ++k) {
            const double p = logistic(z[k]);
            c[k] = p * (1.0 - p);
          }
          return weighted_gram(*w, c);
        });
  }
  throw PreconditionError("builtin_function: unknown function '" + std::string(name) + "'");
}

void write_measurements(std::ostream& out, const MeasurementSet& set) {
  const std::size_t n = set.n;
  out << "i,b";
  for (std::size_t k = 0; k < n; ++k) out << ",u_" << k;
  for (std::size_t k = 0; k < n; ++k) out << ",v_" << k;
  out << '\n';
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const Measurement& m = set.records[i];
    out << i << ',' << csv::format_double(m.b);
    for (double x : m.u) out << ',' << csv::format_double(x);
    for (double x : m.v) out << ',' << csv::format_double(x);
    out << '\n';
  }
}

MeasurementSet read_measurements(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("measurements: empty input");
  const auto header = csv::split(csv::trim(line));
  if (header.size() < 2 || header[0] != "i" || header[1] != "b" || (header.size() - 2) % 2 != 0)
    throw std::runtime_error("measurements: line 1: bad header");
  const std::size_t n = (header.size() - 2) / 2;
  for (std::size_t k = 0; k < n; ++k) {
    if (header[2 + k] != "u_" + std::to_string(k) || header[2 + n + k] != "v_" + std::to_string(k))
      throw std::runtime_error("measurements: line 1: bad header");
  }

  MeasurementSet set{n, {}, MeasurementSource::exact, 0.0};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(csv::trim(line));
    try {
      if (fields.size() != 2 + 2 * n) throw std::invalid_argument("wrong field count");
      if (csv::parse_uint(fields[0]) != set.records.size())
        throw std::invalid_argument("record index out of sequence");
      Measurement m{Vector(n), Vector(n), csv::parse_double(fields[1])};
      for (std::size_t k = 0; k < n; ++k) {
        m.u[k] = csv::parse_double(fields[2 + k]);
        m.v[k] = csv::parse_double(fields[2 + n + k]);
      }
      if (!std::isfinite(m.b)) throw std::invalid_argument("non-finite b");
      if (std::abs(norm2(m.u) - 1.0) > 1e-12 || std::abs(norm2(m.v) - 1.0) > 1e-12)
        throw std::invalid_argument("direction is not a unit vector");
      set.records.push_back(std::move(m));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("measurements: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (set.records.empty()) throw std::runtime_error("measurements: no records");
  return set;
}

}  // namespace lrhess
