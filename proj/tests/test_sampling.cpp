#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "lrhess/certify.hpp"
#include "lrhess/csv.hpp"
#include "lrhess/errors.hpp"
#include "lrhess/linalg.hpp"
#include "lrhess/sampling.hpp"
#include "test_util.hpp"

using namespace lrhess;
using lrhess::test::random_matrix;

namespace {

// two-sample Kolmogorov–Smirnov p-value, asymptotic distribution
double ks_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) q += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(q, 0.0, 1.0);
}

Vector unit(std::size_t n, std::size_t k) {
  Vector e(n, 0.0);
  e[k] = 1.0;
  return e;
}

}  // namespace

TEST(SampleSphere, UnitNorm) {
  SplitMix64 rng(1);
  for (int k = 0; k < 1000; ++k) EXPECT_NEAR(norm2(sample_sphere(2 + k % 9, rng)), 1.0, 1e-12);
}

TEST(SampleSphere, RejectsDimensionOne) {
  SplitMix64 rng(1);
  EXPECT_THROW(sample_sphere(1, rng), PreconditionError);
}

TEST(SampleSphere, SecondMomentInFour) {
  SplitMix64 rng(2);
  const MomentEstimate est = moment_monte_carlo(4, 2, 1000000, rng);
  EXPECT_LE(std::abs(est.mean - 0.25), 5 * est.standard_error);
}

TEST(SampleSphere, FourthMomentInThree) {
  SplitMix64 rng(3);
  const MomentEstimate est = moment_monte_carlo(3, 4, 1000000, rng);
  EXPECT_LE(std::abs(est.mean - 0.2), 5 * est.standard_error);
}

TEST(SampleSphere, RotationInvariance) {
  SplitMix64 rng(4);
  const Matrix q = orthonormalize_columns(random_matrix(5, 5, rng));
  std::vector<double> plain, rotated;
  for (int k = 0; k < 100000; ++k) plain.push_back(sample_sphere(5, rng)[0]);
  for (int k = 0; k < 100000; ++k) rotated.push_back(matvec(q, sample_sphere(5, rng))[0]);
  EXPECT_GT(ks_pvalue(plain, rotated), 1e-3);
}

TEST(SampleSphere, KsDetectsAShiftedDistribution) {
  // sanity check of the test statistic itself
  SplitMix64 rng(5);
  std::vector<double> a, b;
  for (int k = 0; k < 20000; ++k) a.push_back(sample_sphere(5, rng)[0]);
  for (int k = 0; k < 20000; ++k) b.push_back(sample_sphere(5, rng)[0] + 0.05);
  EXPECT_LT(ks_pvalue(a, b), 1e-3);
}

TEST(MeasureExact, IdentityAndSwap) {
  SplitMix64 rng(6);
  const Vector u = sample_sphere(4, rng);
  EXPECT_NEAR(measure_exact(Matrix::identity(4), u, u).b, 1.0, 1e-14);
  Matrix h(3, 3);
  h(0, 1) = h(1, 0) = 1.0;
  EXPECT_DOUBLE_EQ(measure_exact(h, unit(3, 0), unit(3, 1)).b, 1.0);
}

TEST(MeasureExact, MatchesDoubleLoop) {
  SplitMix64 rng(7);
  const Matrix h = random_matrix(6, 6, rng);
  const Vector u = sample_sphere(6, rng), v = sample_sphere(6, rng);
  double ref = 0.0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) ref += u[i] * h(i, j) * v[j];
  EXPECT_NEAR(measure_exact(h, u, v).b, ref, 1e-13);
}

TEST(MeasureExact, DimensionMismatch) {
  EXPECT_THROW(measure_exact(Matrix::identity(3), Vector(2, 0.5), Vector(3, 0.5)), PreconditionError);
}

TEST(MeasureFd, QuadraticIsExactForAnyDelta) {
  SplitMix64 rng(8);
  const LowRankInstance inst = make_instance(7, 2, rng);
  const FunctionOracle f(7, [&](std::span<const double> x) { return 0.5 * bilinear(x, inst.H, x); });
  Vector x(7);
  for (double& xi : x) xi = rng.normal();
  for (double delta : {1e-3, 1e-1, 1.0}) {
    for (int k = 0; k < 20; ++k) {
      const Vector u = sample_sphere(7, rng), v = sample_sphere(7, rng);
      const double exact = measure_exact(inst.H, u, v).b;
      EXPECT_LE(std::abs(measure_fd(f, x, u, v, delta).b - exact), 1e-8 * (1.0 + std::abs(exact)));
    }
  }
}

TEST(MeasureFd, CubicIsExact) {
  // odd Taylor terms cancel in the symmetric stencil, f = x₁² x₂
  const std::size_t n = 3;
  const FunctionOracle f(n, [](std::span<const double> x) { return x[0] * x[0] * x[1]; });
  const Vector x(n, 1.0);
  SplitMix64 rng(9);
  const Vector u = sample_sphere(n, rng), v = sample_sphere(n, rng);
  Matrix h(n, n);
  h(0, 0) = 2 * x[1];
  h(0, 1) = h(1, 0) = 2 * x[0];
  EXPECT_NEAR(measure_fd(f, x, u, v, 1e-1).b, bilinear(u, h, v), 1e-12);
}

TEST(MeasureFd, QuarticErrorIsSecondOrder) {
  // f = x₁⁴: the stencil error is c·δ² with nothing of higher order
  const std::size_t n = 3;
  const FunctionOracle f(n, [](std::span<const double> x) { return x[0] * x[0] * x[0] * x[0]; });
  const Vector x{0.7, -0.2, 0.4};
  SplitMix64 rng(9);
  const Vector u = sample_sphere(n, rng), v = sample_sphere(n, rng);
  const double exact = 12 * x[0] * x[0] * u[0] * v[0];
  const double e1 = measure_fd(f, x, u, v, 0.2).b - exact;
  const double e2 = measure_fd(f, x, u, v, 0.1).b - exact;
  // independent closed form of the leading term: 4δ²·u₀v₀(u₀² + v₀²)
  EXPECT_NEAR(e1, 4 * 0.04 * u[0] * v[0] * (u[0] * u[0] + v[0] * v[0]), 1e-10);
  EXPECT_NEAR(e2 / e1, 0.25, 1e-6);
}

TEST(MeasureFd, ConstantFunctionGivesZero) {
  const FunctionOracle f(4, [](std::span<const double>) { return 3.5; });
  SplitMix64 rng(10);
  const Vector x(4, 0.3);
  EXPECT_EQ(measure_fd(f, x, sample_sphere(4, rng), sample_sphere(4, rng), 1e-2).b, 0.0);
}

TEST(MeasureFd, UsesExactlyFourEvaluations) {
  const FunctionOracle f(4, [](std::span<const double> x) { return x[0]; });
  SplitMix64 rng(11);
  measure_fd(f, Vector(4, 0.0), sample_sphere(4, rng), sample_sphere(4, rng), 0.1);
  EXPECT_EQ(f.eval_count(), 4u);
}

TEST(MeasureFd, NonFiniteOracleIsReported) {
  const FunctionOracle f(3, [](std::span<const double> x) { return x[0] > 0 ? std::log(-1.0) : 0.0; });
  SplitMix64 rng(12);
  EXPECT_THROW(measure_fd(f, Vector(3, 1.0), sample_sphere(3, rng), sample_sphere(3, rng), 0.1),
               InvalidMeasurementError);
}

TEST(MeasureFd, RejectsBadDelta) {
  const FunctionOracle f(3, [](std::span<const double>) { return 0.0; });
  SplitMix64 rng(13);
  EXPECT_THROW(measure_fd(f, Vector(3, 0.0), sample_sphere(3, rng), sample_sphere(3, rng), 0.0),
               PreconditionError);
}

TEST(BuildMeasurementSet, ZeroCountRejected) {
  SplitMix64 rng(14);
  const LowRankInstance inst = make_instance(4, 1, rng);
  EXPECT_THROW(build_measurement_set(inst, 0, rng), PreconditionError);
}

TEST(BuildMeasurementSet, ReplayIsBitIdentical) {
  auto build = [] {
    SplitMix64 rng(15);
    const LowRankInstance inst = make_instance(6, 2, rng);
    return build_measurement_set(inst, 30, rng);
  };
  const MeasurementSet a = build(), b = build();
  EXPECT_EQ(a.records, b.records);
}

TEST(BuildMeasurementSet, FdOnQuadraticMatchesExact) {
  SplitMix64 seed_rng(16);
  const LowRankInstance inst = make_instance(6, 2, seed_rng);
  const FunctionOracle f(6, [&](std::span<const double> x) { return 0.5 * bilinear(x, inst.H, x); });
  const Vector x(6, 0.2);
  SplitMix64 r1(17), r2(17);
  const MeasurementSet exact = build_measurement_set(inst, 40, r1);
  const MeasurementSet fd = build_measurement_set(f, x, 0.5, 40, r2);
  ASSERT_EQ(exact.size(), fd.size());
  for (std::size_t i = 0; i < exact.size(); ++i) {
    EXPECT_EQ(exact.records[i].u, fd.records[i].u);
    EXPECT_NEAR(exact.records[i].b, fd.records[i].b, 1e-9);
  }
  EXPECT_EQ(f.eval_count(), 4u * 40u);
  EXPECT_EQ(fd.source, MeasurementSource::finite_difference);
}

TEST(MakeInstance, RankOneUnitSpectrum) {
  SplitMix64 rng(18);
  const std::vector<double> spectrum{1.0};
  const LowRankInstance inst = make_instance(5, 1, spectrum, rng);
  EXPECT_NEAR(nuclear_norm(inst.H), 1.0, 1e-12);
  const Vector u = inst.tangent.basis().column(0);
  EXPECT_LE(max_abs(inst.H - outer(u, u)), 1e-14);
}

TEST(MakeInstance, CoherentBasisAccepted) {
  Matrix basis(5, 2);
  basis(0, 0) = 1.0;
  basis(3, 1) = 1.0;
  const std::vector<double> spectrum{2.0, -1.0};
  const LowRankInstance inst = instance_from_basis(basis, spectrum);
  EXPECT_DOUBLE_EQ(inst.H(0, 0), 2.0);
  EXPECT_EQ(numerical_rank(inst.H), 2u);
}

TEST(MakeInstance, ZeroSpectrumRejected) {
  SplitMix64 rng(19);
  const std::vector<double> spectrum{1.0, 0.0};
  EXPECT_THROW(make_instance(5, 2, spectrum, rng), PreconditionError);
  EXPECT_THROW(make_instance(3, 4, rng), PreconditionError);
}

TEST(MakeInstance, InvariantsOnRandomInstances) {
  SplitMix64 rng(20);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 2 + k % 11;
    const std::size_t r = 1 + k % n;
    const LowRankInstance inst = make_instance(n, r, rng);
    EXPECT_LE(frobenius_norm(inst.H - inst.H.transpose()), 1e-12 * frobenius_norm(inst.H));
    EXPECT_EQ(numerical_rank(inst.H, 1e-8), r);
    // column space of H is span(U)
    EXPECT_LE(frobenius_norm(inst.tangent.projector() * inst.H - inst.H), 1e-12 * frobenius_norm(inst.H));
    for (double s : inst.spectrum) {
      EXPECT_GE(std::abs(s), 1.0);
      EXPECT_LE(std::abs(s), 2.0);
    }
  }
}

TEST(Builtins, QuadraticHessianEqualsInstance) {
  SplitMix64 rng(21), replay(21);
  const FunctionOracle f = builtin_function("quadratic_lowrank", 6, rng, {2});
  const LowRankInstance inst = make_instance(6, 2, replay);
  const Vector x(6, 0.1);
  EXPECT_LE(max_abs(f.analytic_hessian(x) - inst.H), 1e-15);
  EXPECT_EQ(f.eval_count(), 0u);
}

TEST(Builtins, LogisticHessianHasRankAtMostR) {
  SplitMix64 rng(22);
  const FunctionOracle f = builtin_function("logistic_composite", 10, rng, {2});
  Vector x(10);
  for (double& xi : x) xi = rng.normal();
  EXPECT_LE(numerical_rank(f.analytic_hessian(x)), 2u);
}

TEST(Builtins, RidgeShiftIsEpsilon) {
  SplitMix64 rng(23);
  const double eps = 1e-3;
  const FunctionOracle f = builtin_function("ridge_composite", 8, rng, {2, eps});
  Vector x(8, 0.05);
  const Matrix h = f.analytic_hessian(x);
  // removing εI leaves a rank-2 part; the residual spectrum is exactly ε
  const SvdFactors fs = svd(h);
  for (std::size_t k = 2; k < 8; ++k) EXPECT_NEAR(fs.sigma[k], eps, 1e-12);
  EXPECT_EQ(numerical_rank(h - eps * Matrix::identity(8)), 2u);
}

TEST(Builtins, AnalyticHessiansAgreeWithFiniteDifferences) {
  SplitMix64 rng(24);
  for (const char* name : {"ridge_composite", "logistic_composite"}) {
    const FunctionOracle f = builtin_function(name, 6, rng, {2});
    Vector x(6);
    for (double& xi : x) xi = 0.4 * rng.normal();
    const Matrix h = f.analytic_hessian(x);
    for (int k = 0; k < 10; ++k) {
      const Vector u = sample_sphere(6, rng), v = sample_sphere(6, rng);
      EXPECT_NEAR(measure_fd(f, x, u, v, 1e-4).b, bilinear(u, h, v), 1e-6) << name;
    }
  }
}

TEST(Builtins, UnknownNameRejected) {
  SplitMix64 rng(25);
  EXPECT_THROW(builtin_function("rosenbrock", 4, rng), PreconditionError);
}

TEST(Oracle, ClonesCountSeparately) {
  const FunctionOracle f(2, [](std::span<const double> x) { return x[0]; });
  const FunctionOracle shared = f;
  const FunctionOracle fresh = f.clone();
  const Vector x(2, 0.0);
  f(x);
  shared(x);
  fresh(x);
  EXPECT_EQ(f.eval_count(), 2u);
  EXPECT_EQ(fresh.eval_count(), 1u);
}

TEST(MeasurementCsv, RoundTripIsExact) {
  SplitMix64 rng(26);
  const LowRankInstance inst = make_instance(5, 2, rng);
  const MeasurementSet ms = build_measurement_set(inst, 12, rng);
  std::stringstream s;
  write_measurements(s, ms);
  const MeasurementSet back = read_measurements(s);
  EXPECT_EQ(back.n, 5u);
  EXPECT_EQ(back.records, ms.records);
}

TEST(MeasurementCsv, MalformedInputNamesTheLine) {
  std::stringstream s("i,b,u_0,u_1,v_0,v_1\n0,1,1,0,0,1\n1,2,1,0\n");
  try {
    read_measurements(s);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::stringstream bad_norm("i,b,u_0,u_1,v_0,v_1\n0,1,1,1,0,1\n");
  EXPECT_THROW(read_measurements(bad_norm), std::runtime_error);
  std::stringstream bad_header("i,c,u_0,v_0\n");
  EXPECT_THROW(read_measurements(bad_header), std::runtime_error);
}

TEST(Csv, ShortestRoundTripDoubles) {
  SplitMix64 rng(27);
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.normal() * std::pow(10.0, static_cast<int>(rng.next() % 40) - 20);
    EXPECT_EQ(csv::parse_double(csv::format_double(x)), x);
  }
  EXPECT_EQ(csv::format_double(0.1), "0.1");
}

TEST(Rng, TrialSeedsAreDistinctAndStable) {
  EXPECT_EQ(trial_seed(42, 3), splitmix64(42 ^ 3));
  EXPECT_NE(trial_seed(42, 3), trial_seed(42, 4));
  SplitMix64 a(9), b(9);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(a.next(), b.next());
  SplitMix64 c(10);
  for (int k = 0; k < 10000; ++k) {
    const double u = c.uniform();
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}
