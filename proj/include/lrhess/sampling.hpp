#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "lrhess/matrix.hpp"
#include "lrhess/rng.hpp"
#include "lrhess/tangent.hpp"

namespace lrhess {

/// Uniform draw from the unit sphere S^{n-1}: a normalized standard Gaussian
/// vector. Requires n >= 2.
Vector sample_sphere(std::size_t n, SplitMix64& rng);

/// One bilinear measurement b = uᵀ H v with unit directions u, v.
struct Measurement {
  Vector u;
  Vector v;
  double b = 0.0;

  bool operator==(const Measurement&) const = default;
};

enum class MeasurementSource { exact, finite_difference };

struct MeasurementSet {
  std::size_t n = 0;
  std::vector<Measurement> records;
  MeasurementSource source = MeasurementSource::exact;
  double delta = 0.0;  // finite-difference step, 0 for exact sets

  std::size_t size() const { return records.size(); }
};

Measurement measure_exact(const Matrix& h, Vector u, Vector v);

/// Deterministic black-box f : Rⁿ → R with a shared, atomic evaluation
/// counter. Copies share the counter; clone() starts a fresh one.
class FunctionOracle {
 public:
  using Evaluate = std::function<double(std::span<const double>)>;
  using HessianFn = std::function<Matrix(std::span<const double>)>;

  FunctionOracle(std::size_t n, Evaluate evaluate, HessianFn hessian = {});

  std::size_t n() const { return n_; }
  double operator()(std::span<const double> x) const;
  std::uint64_t eval_count() const { return count_->load(); }

  bool has_analytic_hessian() const { return static_cast<bool>(hessian_); }
  /// Closed-form Hessian, when the function provides one. Does not count as
  /// an evaluation.
  Matrix analytic_hessian(std::span<const double> x) const;

  FunctionOracle clone() const;

 private:
  std::size_t n_;
  Evaluate evaluate_;
  HessianFn hessian_;
  std::shared_ptr<std::atomic<std::uint64_t>> count_;
};

/// Four-point stencil
///   [f(x+δv+δu) − f(x−δv+δu) − f(x+δv−δu) + f(x−δv−δu)] / (4δ²),
/// which tends to uᵀ∇²f(x)v as δ → 0. Consumes exactly four evaluations.
/// Throws InvalidMeasurementError when f returns a non-finite value.
Measurement measure_fd(const FunctionOracle& f, std::span<const double> x, Vector u, Vector v,
                       double delta);

/// H = U diag(spectrum) Uᵀ of exact rank r with its tangent space.
struct LowRankInstance {
  Matrix H;
  TangentSpace tangent;
  Vector spectrum;

  std::size_t n() const { return H.rows(); }
  std::size_t rank() const { return spectrum.size(); }
};

/// U from an orthonormalized n×r Gaussian draw. No incoherence control.
LowRankInstance make_instance(std::size_t n, std::size_t r, std::span<const double> spectrum,
                              SplitMix64& rng);
/// Same, with the spectrum drawn as ±Uniform[1, 2] after the basis.
LowRankInstance make_instance(std::size_t n, std::size_t r, SplitMix64& rng);
/// Instance on a caller-chosen orthonormal basis (e.g. one containing e₁).
LowRankInstance instance_from_basis(Matrix basis, std::span<const double> spectrum);

/// M direction pairs (u then v per record) with exact b = uᵀHv.
MeasurementSet build_measurement_set(const LowRankInstance& instance, std::size_t m,
                                     SplitMix64& rng);
/// Same direction stream as the exact overload; b from measure_fd at x.
MeasurementSet build_measurement_set(const FunctionOracle& f, std::span<const double> x,
                                     double delta, std::size_t m, SplitMix64& rng);

struct BuiltinOptions {
  std::size_t rank = 2;
  double epsilon = 1e-3;  // ridge shift for ridge_composite
};

/// quadratic_lowrank: ½ xᵀHx for a generated rank-r instance.
/// ridge_composite: Σⱼ log cosh((Wx)ⱼ) + (ε/2)‖x‖², W r×n.
/// logistic_composite: Σᵢ log(1 + exp(wᵢᵀx)) over r directions.
/// Every builtin carries its analytic Hessian. Unknown names throw
/// PreconditionError.
FunctionOracle builtin_function(std::string_view name, std::size_t n, SplitMix64& rng,
                                const BuiltinOptions& options = {});

/// CSV with header i,b,u_0..u_{n-1},v_0..v_{n-1}; shortest round-trip floats.
void write_measurements(std::ostream& out, const MeasurementSet& set);
/// Throws std::runtime_error naming the offending line on malformed input.
MeasurementSet read_measurements(std::istream& in);

}  // namespace lrhess
