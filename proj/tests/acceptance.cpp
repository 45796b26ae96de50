// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "lrhess/bench.hpp"
#include "lrhess/certify.hpp"
#include "lrhess/constants.hpp"
#include "lrhess/linalg.hpp"
#include "lrhess/recovery.hpp"
#include "lrhess/sampling.hpp"

using namespace lrhess;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::uint64_t kSeed = 20240607;
constexpr std::size_t kTrials = 20;
constexpr std::size_t kRequired = 18;  // of 20
constexpr double kSuccessRate = 0.9;
constexpr double kFailureRate = 0.1;
constexpr double kSuccessTol = 1e-3;
constexpr double kTrialSeconds = 60.0;
constexpr double kSweepSeconds = 15 * 60.0;
constexpr double kMomentSeconds = 120.0;
constexpr double kCompositionSeconds = 60.0;
constexpr double kMomentZ = 5.0;
constexpr std::size_t kMomentDraws = 1000000;
constexpr double kE1Threshold = 0.25;
constexpr double kAgreementTol = 1e-5;
constexpr double kDecayLo = 1.6, kDecayHi = 2.6;
constexpr double kIdentityTol = 1e-10;
constexpr double kMinimizerTol = 1e-6;
constexpr double kBaselineGap = 0.1;
constexpr double kQuadraticOpTol = 1e-3;
constexpr double kLogisticOpTol = 1e-2;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t dim_t(std::size_t n, std::size_t r) { return 2 * n * r - r * r; }

// (p−1)(p−3)···1 / (n(n+2)···(n+p−2)), odd p → 0
double sphere_moment(std::size_t n, int p) {
  if (p % 2) return 0.0;
  double num = 1.0, den = 1.0;
  for (int k = p - 1; k >= 1; k -= 2) num *= k;
  for (int k = 0; k < p; k += 2) den *= static_cast<double>(n) + k;
  return num / den;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string csv_without_timing(std::vector<TrialRecord> records) {
  for (auto& r : records) r.wall_ms = 0;
  std::ostringstream out;
  write_trials(out, records);
  return out.str();
}

void exact_recovery() {
  ExperimentConfig cfg;
  cfg.seed = kSeed;
  const Cell cell{20, 2, constants::recovery_samples(20, 2)};
  std::size_t ok = 0;
  double worst = 0.0;
  for (std::size_t t = 0; t < kTrials; ++t) {
    const auto t0 = Clock::now();
    const TrialRecord r = run_trial(cfg, cell, t);
    worst = std::max(worst, seconds_since(t0));
    ok += r.rel_error <= kSuccessTol;
  }
  const double rate = static_cast<double>(ok) / kTrials;
  report(1, rate >= kSuccessRate && worst <= kTrialSeconds, "exact recovery n=20 r=2 at calibrated M",
         fmt("M=%zu, rate %.2f, slowest trial %.2f s", cell.M, rate, worst));
}

void phase_transition() {
  ExperimentConfig cfg;
  cfg.seed = kSeed;
  cfg.n_list = {10, 20};
  cfg.r_list = {1, 2};
  cfg.M_factors = {0.5, 1.0, 2.0, 4.0};
  cfg.include_recovery_M = true;
  cfg.trials = kTrials;
  cfg.workers = workers();
  const auto t0 = Clock::now();
  const SweepResult res = phase_sweep(cfg);
  const double elapsed = seconds_since(t0);

  std::map<std::pair<std::size_t, std::size_t>, std::vector<CellSummary>> by_shape;
  for (const CellSummary& s : res.summary) by_shape[{s.cell.n, s.cell.r}].push_back(s);
  bool pass = elapsed <= kSweepSeconds;
  std::string detail;
  for (auto& [shape, cells] : by_shape) {
    const auto [n, r] = shape;
    std::sort(cells.begin(), cells.end(), [](auto& a, auto& b) { return a.cell.M < b.cell.M; });
    bool monotone = true;
    for (std::size_t i = 1; i < cells.size(); ++i)
      monotone &= cells[i].success_rate() >= cells[i - 1].success_rate();
    const std::size_t half = static_cast<std::size_t>(std::ceil(0.5 * dim_t(n, r) - 1e-9));
    const std::size_t calibrated = constants::recovery_samples(n, r);
    double low = -1.0, high = -1.0;
    for (const CellSummary& c : cells) {
      if (c.cell.M == half) low = c.success_rate();
      if (c.cell.M == calibrated) high = c.success_rate();
    }
    pass &= monotone && low >= 0.0 && low <= kFailureRate && high >= kSuccessRate;
    detail += fmt("n=%zu r=%zu:", n, r);
    for (const CellSummary& c : cells) detail += fmt(" %zu:%.2f", c.cell.M, c.success_rate());
    detail += monotone ? "; " : " NOT MONOTONE; ";
  }
  detail += fmt("%.1f s", elapsed);
  report(2, pass, "phase transition monotone, <=0.1 at half dim T, >=0.9 at calibrated M", detail);
}

void zeroth_order() {
  const std::size_t n = 12, r = 2;
  const std::size_t m = static_cast<std::size_t>(std::ceil(2.5 * dim_t(n, r)));
  bool pass = true;
  std::string detail = fmt("M=%zu", m);
  const struct {
    const char* name;
    double delta;
    double tol;
  } cases[] = {{"quadratic_lowrank", 1.0, kQuadraticOpTol}, {"logistic_composite", 1e-4, kLogisticOpTol}};
  for (const auto& c : cases) {
    std::size_t ok = 0;
    bool budget = true;
    double worst = 0.0;
    for (std::size_t t = 0; t < kTrials; ++t) {
      SplitMix64 rng(trial_seed(kSeed, t));
      const FunctionOracle f = builtin_function(c.name, n, rng, {r});
      Vector x(n);
      for (double& xi : x) xi = rng.normal() / std::sqrt(static_cast<double>(n));
      const HessianEstimate est = estimate_hessian(f, x, r, m, c.delta, SolverConfig{}, rng);
      budget &= est.fd_evals == 4 * m;
      // independent error evaluation against the closed-form Hessian
      const Matrix h = f.analytic_hessian(x);
      const double rel = spectral_norm(est.H_hat - h) / spectral_norm(h);
      worst = std::max(worst, rel);
      ok += rel <= c.tol;
    }
    pass &= budget && ok >= kRequired;
    detail += fmt("; %s delta=%g: %zu/20 within %g, worst %.2e, fd budget %s", c.name, c.delta, ok, c.tol, worst,
                  budget ? "exact" : "WRONG");
  }
  report(3, pass, "finite-difference end-to-end estimation", detail);
}

void moments() {
  const auto t0 = Clock::now();
  bool pass = true;
  double worst_z = 0.0;
  std::size_t rows = 0;
  for (std::size_t n : {2, 3, 8, 32}) {
    for (int p : {1, 2, 3, 4, 5, 6}) {
      SplitMix64 rng(trial_seed(kSeed ^ 0x6d6f6d, n * 16 + p));
      const MomentEstimate est = moment_monte_carlo(n, p, kMomentDraws, rng);
      const double z = std::abs(est.mean - sphere_moment(n, p)) / est.standard_error;
      worst_z = std::max(worst_z, z);
      pass &= z <= kMomentZ;
      if (p % 2 == 0) pass &= std::abs(moment_closed_form(n, p) - sphere_moment(n, p)) <= 1e-15;
      ++rows;
    }
  }
  const double elapsed = seconds_since(t0);
  pass &= elapsed <= kMomentSeconds;
  report(4, pass, "spherical moments within 5 SE", fmt("%zu cases, max |z| %.2f, %.1f s", rows, worst_z, elapsed));
}

void composition_bound() {
  const auto t0 = Clock::now();
  std::size_t checked = 0, bad = 0;
  double tightest = 0.0;
  for (int r = 1; r <= 12; ++r)
    for (int p = 2; p <= 8; ++p) {
      const CompositionMax w = composition_moment_max(r, p);
      const double bound = std::pow(100.0 * r, p - 1);
      bad += !(w.within_bound && w.bound == bound && w.max_value <= bound);
      tightest = std::max(tightest, w.max_value / bound);
      ++checked;
    }
  const double elapsed = seconds_since(t0);
  report(5, bad == 0 && elapsed <= kCompositionSeconds, "combinatorial bound exhaustive over r<=12, p<=8",
         fmt("%zu cases, %zu failures, max value/bound %.3g, %.1f s", checked, bad, tightest, elapsed));
}

void concentration() {
  const std::size_t n = 12, r = 2;
  const std::size_t m0 = constants::concentration_samples(n, r, constants::kFailureProbability);
  std::size_t hits = 0;
  double worst = 0.0;
  std::vector<double> ratios;
  for (std::size_t s = 0; s < kTrials; ++s) {
    SplitMix64 rng(trial_seed(kSeed ^ 0xe1, s));
    const LowRankInstance inst = make_instance(n, r, rng);
    const MeasurementSet big = build_measurement_set(inst, 4 * m0, rng);
    MeasurementSet ms = big;
    ms.records.resize(m0);
    const double d = operator_concentration(inst.tangent, ms).deviation_norm;
    const double d4 = operator_concentration(inst.tangent, big).deviation_norm;
    hits += d <= kE1Threshold;
    worst = std::max(worst, d);
    ratios.push_back(d / d4);
  }
  double gap = 0.0;
  for (std::size_t s = 0; s < 5; ++s) {
    SplitMix64 rng(trial_seed(kSeed ^ 0xa9, s));
    const LowRankInstance inst = make_instance(8, 2, rng);
    const MeasurementSet ms = build_measurement_set(inst, 200 + 100 * s, rng);
    gap = std::max(gap, std::abs(operator_concentration(inst.tangent, ms, ConcentrationMethod::dense_kron).deviation_norm -
                                 operator_concentration(inst.tangent, ms, ConcentrationMethod::power_iteration)
                                     .deviation_norm));
  }
  const double med = median(ratios);
  report(6, hits >= kRequired && gap <= kAgreementTol && med >= kDecayLo && med <= kDecayHi,
         "operator concentration event at calibrated M",
         fmt("M=%zu: %zu/20 with deviation <= 0.25 (max %.3f); path gap %.1e; median ratio M vs 4M %.2f", m0, hits,
             worst, gap, med));
}

void golfing() {
  const std::size_t n = 16, r = 2;
  const std::size_t L = constants::golfing_batches(n);
  const std::size_t m = constants::golfing_batch_size(n, r, constants::kFailureProbability);
  std::size_t ok = 0;
  double x0_gap = 0.0, tele = 0.0, worst_perp = 0.0;
  for (std::size_t s = 0; s < kTrials; ++s) {
    SplitMix64 rng(trial_seed(kSeed ^ 0x901f, s));
    const LowRankInstance inst = make_instance(n, r, rng);
    const CertificateReport rep = golfing_certificate(inst, L, m, rng);
    // recount success from the logged sequences
    std::size_t contracted = 0;
    for (std::size_t i = 1; i <= L; ++i) contracted += rep.x_norms[i] <= 0.5 * rep.x_norms[i - 1];
    const bool success = rep.perp_norm <= 0.5 && contracted >= 0.9 * static_cast<double>(L);
    ok += success;
    x0_gap = std::max(x0_gap, std::abs(rep.x_norms[0] - std::sqrt(static_cast<double>(r))));
    tele = std::max(tele, rep.telescoping_gap);
    worst_perp = std::max(worst_perp, rep.perp_norm);
  }
  report(7, ok >= kRequired && x0_gap <= kIdentityTol && tele <= kIdentityTol, "golfing dual certificate",
         fmt("L=%zu m=%zu: %zu/20 succeed, max perp %.3f, |x0 - sqrt r| %.1e, telescoping %.1e", L, m, ok,
             worst_perp, x0_gap, tele));
}

void minimizer() {
  ExperimentConfig cfg;
  cfg.seed = kSeed ^ 0x3c;
  std::size_t converged = 0, bad = 0;
  double worst_norm = -INFINITY, worst_prepare = -INFINITY;
  for (std::size_t n : {10, 20})
    for (std::size_t r : {1, 2})
      for (double f : {1.0, 2.0, 4.0})
        for (std::size_t t = 0; t < 5; ++t) {
          const Cell cell{n, r, static_cast<std::size_t>(std::ceil(f * dim_t(n, r)))};
          const TrialOutcome o = run_trial_detailed(cfg, cell, t);
          if (o.solution.status != SolverStatus::converged) continue;
          ++converged;
          const double dn = nuclear_norm(o.solution.H_hat) - nuclear_norm(o.target);
          const double pr = prepare_inequality(o.target, o.instance->tangent, o.solution.H_hat);
          worst_norm = std::max(worst_norm, dn);
          worst_prepare = std::max(worst_prepare, pr);
          bad += dn > kMinimizerTol || pr > kMinimizerTol;
        }
  report(8, converged > 0 && bad == 0, "minimizer inequalities on converged recoveries",
         fmt("%zu converged runs, %zu violations, max norm excess %.1e, max prepare value %.1e", converged, bad,
             worst_norm, worst_prepare));
}

void baseline() {
  ExperimentConfig cfg;
  cfg.seed = kSeed;
  const Cell cell{10, 1, constants::recovery_samples(10, 1)};
  std::size_t separated = 0, nuclear_ok = 0;
  double best_frob = INFINITY;
  for (std::size_t t = 0; t < kTrials; ++t) {
    const TrialOutcome o = run_trial_detailed(cfg, cell, t);
    const bool nuc = recovery_error(o.solution.H_hat, o.target) <= kSuccessTol;
    const double frob = recovery_error(solve_min_frobenius(o.measurements).H_hat, o.target);
    nuclear_ok += nuc;
    separated += nuc && frob > kBaselineGap;
    best_frob = std::min(best_frob, frob);
  }
  report(9, separated >= kRequired, "nuclear norm beats minimum Frobenius baseline",
         fmt("n=10 r=1 M=%zu: nuclear succeeds %zu/20, separated %zu/20, smallest baseline error %.3f", cell.M,
             nuclear_ok, separated, best_frob));
}

void determinism() {
  ExperimentConfig cfg;
  cfg.seed = kSeed;
  cfg.n_list = {8, 12};
  cfg.r_list = {1, 2};
  cfg.trials = 5;
  cfg.workers = 1;
  const SweepResult a = phase_sweep(cfg);
  const SweepResult b = phase_sweep(cfg);
  cfg.workers = 8;
  const SweepResult c = phase_sweep(cfg);
  const std::string sa = csv_without_timing(a.records);
  const bool runs = sa == csv_without_timing(b.records);
  const bool pool = sa == csv_without_timing(c.records);
  std::stringstream io;
  write_trials(io, a.records);
  const bool round = read_trials(io) == a.records;
  report(10, runs && pool && round, "byte-identical sweeps and exact CSV round trip",
         fmt("%zu rows; repeat %s, workers 1 vs 8 %s, round trip %s", a.records.size(), runs ? "same" : "DIFFER",
             pool ? "same" : "DIFFER", round ? "exact" : "LOSSY"));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const std::pair<int, void (*)()> steps[] = {{1, exact_recovery}, {2, phase_transition}, {3, zeroth_order},
                                              {4, moments},        {5, composition_bound},               {6, concentration},
                                              {7, golfing},        {8, minimizer},        {9, baseline},
                                              {10, determinism}};
  for (const auto& [id, step] : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      report(id, false, "raised an exception", e.what());
    }
  }
  std::printf("%d of 10 criteria failed, %.1f s\n", failures, seconds_since(t0));
  return failures ? 1 : 0;
}
