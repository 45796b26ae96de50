#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lrhess/bench.hpp"
#include "lrhess/csv.hpp"
#include "lrhess/errors.hpp"
#include "lrhess/linalg.hpp"

namespace {

using namespace lrhess;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every config key doubles as a flag; overrides are applied on top of --config.
struct SharedOptions {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "flat key = value config file");
    for (const std::string& key : config_keys()) {
      std::string names = "--" + key;
      std::string dashed = key;
      for (char& c : dashed)
        if (c == '_') c = '-';
      if (dashed != key) names += ",--" + dashed;
      app->add_option_function<std::string>(
          names, [this, key](const std::string& v) { overrides[key] = v; }, "config key " + key);
    }
  }

  bool given(const std::string& key) const { return overrides.count(key) > 0; }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    try {
      if (!config_path.empty()) cfg = load_config(config_path);
    } catch (const FormatError& e) {
      throw UsageError(e.what());
    } catch (const std::exception& e) {
      throw IoError(e.what());
    }
    for (const auto& [key, value] : overrides) {
      try {
        set_config_value(cfg, key, value);
      } catch (const std::exception& e) {
        throw UsageError("--" + key + ": " + e.what());
      }
    }
    try {
      cfg.validate();
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

std::string matrix_csv(const Matrix& a) {
  std::ostringstream s;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) s << (j ? "," : "") << csv::format_double(a(i, j));
    s << '\n';
  }
  return s.str();
}

void write_out(const std::string& path, const std::string& text) {
  try {
    write_file_atomic(path, text);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
}

void print_solution(const RecoverySolution& sol) {
  std::printf("status           %s\n", std::string(to_string(sol.status)).c_str());
  std::printf("iterations       %d\n", sol.iterations);
  std::printf("primal_residual  %.3e\n", sol.primal_residual);
  std::printf("dual_residual    %.3e\n", sol.dual_residual);
}

struct RecoverArgs {
  std::size_t n = 10, r = 1, M = 0, trial = 0;
  std::string measurements, save_measurements, solver = "nuclear";
};

int run_recover(const SharedOptions& shared, const RecoverArgs& a) {
  const ExperimentConfig cfg = shared.resolve();
  if (a.solver != "nuclear" && a.solver != "frobenius") throw UsageError("--solver must be nuclear or frobenius");
  auto solve = [&](const MeasurementSet& ms) {
    return a.solver == "nuclear" ? solve_nuclear_min(ms, cfg.solver) : solve_min_frobenius(ms);
  };

  if (!a.measurements.empty()) {
    std::ifstream in(a.measurements);
    if (!in) throw IoError("cannot open '" + a.measurements + "'");
    MeasurementSet ms;
    try {
      ms = read_measurements(in);
    } catch (const std::exception& e) {
      throw IoError(a.measurements + ": " + e.what());
    }
    const RecoverySolution sol = solve(ms);
    std::printf("n                %zu\nM                %zu\n", ms.n, ms.size());
    print_solution(sol);
    if (shared.given("out")) write_out(cfg.out, matrix_csv(sol.H_hat));
    return sol.status == SolverStatus::converged ? kOk : kCheckFailed;
  }

  if (a.r < 1 || a.r > a.n || a.n < 2) throw UsageError("need 2 <= n and 1 <= r <= n");
  const Cell cell{a.n, a.r, a.M ? a.M : constants::recovery_samples(a.n, a.r)};
  TrialOutcome t = run_trial_detailed(cfg, cell, a.trial);
  if (a.solver == "frobenius") t.solution = solve_min_frobenius(t.measurements);
  const double err = recovery_error(t.solution.H_hat, t.target);
  std::printf("n                %zu\nr                %zu\nM                %zu\nseed             %llu\n",
              cell.n, cell.r, cell.M, static_cast<unsigned long long>(t.record.seed));
  print_solution(t.solution);
  std::printf("rel_error        %.3e\nsuccess          %s\n", err,
              is_success(err, cfg.success_tol) ? "true" : "false");
  if (cfg.mode == MeasureMode::fd) std::printf("fd_evals         %llu\n", static_cast<unsigned long long>(t.record.fd_evals));
  if (!a.save_measurements.empty()) {
    std::ostringstream s;
    write_measurements(s, t.measurements);
    write_out(a.save_measurements, s.str());
  }
  if (shared.given("out")) write_out(cfg.out, matrix_csv(t.solution.H_hat));
  return is_success(err, cfg.success_tol) ? kOk : kCheckFailed;
}

int run_sweep(const SharedOptions& shared) {
  const ExperimentConfig cfg = shared.resolve();
  SweepResult res;
  try {
    res = run_sweep_to_file(cfg);
  } catch (const PreconditionError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  std::printf("%6s %3s %6s %8s\n", "n", "r", "M", "rate");
  for (const auto& s : res.summary)
    std::printf("%6zu %3zu %6zu %8.2f\n", s.cell.n, s.cell.r, s.cell.M, s.success_rate());
  std::printf("wrote %s and %s.summary.csv\n", cfg.out.c_str(), cfg.out.c_str());
  return kOk;
}

struct HessianArgs {
  std::string function = "logistic_composite";
  std::size_t n = 12, r = 2, M = 0;
};

int run_estimate(const SharedOptions& shared, const HessianArgs& a) {
  const ExperimentConfig cfg = shared.resolve();
  if (a.r < 1 || a.r > a.n || a.n < 2) throw UsageError("need 2 <= n and 1 <= r <= n");
  SplitMix64 rng(cfg.seed);
  BuiltinOptions opts;
  opts.rank = a.r;
  const std::string name = shared.given("function") ? cfg.function : a.function;
  const FunctionOracle f = builtin_function(name, a.n, rng, opts);
  Vector x(a.n);
  for (double& xi : x) xi = rng.normal() / std::sqrt(static_cast<double>(a.n));
  const std::size_t m = a.M ? a.M : constants::ceil_count(2.5 * static_cast<double>(constants::tangent_dimension(a.n, a.r)));
  const HessianEstimate est = estimate_hessian(f, x, a.r, m, cfg.delta, cfg.solver, rng);
  std::printf("function         %s\nn                %zu\nM                %zu\ndelta            %g\n",
              name.c_str(), a.n, m, cfg.delta);
  print_solution(est.solution);
  std::printf("fd_evals         %llu\n", static_cast<unsigned long long>(est.fd_evals));
  std::printf("tail_fraction    %.3e\n", est.tail_fraction);
  if (est.operator_error)
    std::printf("operator_error   %.3e\nrelative_error   %.3e\n", *est.operator_error,
                *est.operator_error / *est.hessian_norm);
  if (shared.given("out")) write_out(cfg.out, matrix_csv(est.H_hat));
  return kOk;
}

struct TheoryArgs {
  std::size_t seeds = 20;
  std::size_t moment_samples = 1000000;
};

int run_theory(const SharedOptions& shared, const TheoryArgs& a) {
  const ExperimentConfig cfg = shared.resolve();
  const std::string out = shared.given("out") ? cfg.out : "theory.csv";
  TheoryOptions opts;
  opts.seed = cfg.seed;
  opts.seeds = a.seeds;
  opts.moment_samples = a.moment_samples;
  const TheoryResult res = verify_theory(opts);
  std::ostringstream rows, decay;
  write_theory(rows, res.rows);
  write_decay(decay, res.decay);
  write_out(out, rows.str());
  write_out(out + ".decay.csv", decay.str());
  std::size_t failed = 0;
  for (const auto& r : res.rows)
    if (!r.pass) {
      ++failed;
      std::printf("FAIL %s %s value=%g bound=%s\n", r.check.c_str(), r.params.c_str(), r.value, r.bound.c_str());
    }
  std::printf("%zu checks, %zu failed; wrote %s\n", res.rows.size(), failed, out.c_str());
  return failed ? kCheckFailed : kOk;
}

struct PlotArgs {
  std::string input, kind = "phase";
};

int run_plot(const SharedOptions& shared, const PlotArgs& a) {
  const ExperimentConfig cfg = shared.resolve();
  const std::string out = shared.given("out") ? cfg.out : "plot.svg";
  if (a.kind != "phase" && a.kind != "decay") throw UsageError("--kind must be phase or decay");
  std::ifstream in(a.input);
  if (!in) throw IoError("cannot open '" + a.input + "'");
  std::string svg;
  try {
    svg = emit_plot(in, a.kind == "phase" ? PlotKind::phase : PlotKind::decay);
  } catch (const FormatError& e) {
    throw IoError(a.input + ": " + e.what());
  }
  write_out(out, svg);
  std::printf("wrote %s\n", out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank Hessian recovery from bilinear finite-difference measurements"};
  app.require_subcommand(1);

  SharedOptions shared_recover, shared_sweep, shared_hess, shared_theory, shared_plot;
  RecoverArgs recover_args;
  HessianArgs hess_args;
  TheoryArgs theory_args;
  PlotArgs plot_args;

  auto* recover = app.add_subcommand("recover", "recover one matrix (generated or from a measurement CSV)");
  shared_recover.attach(recover);
  recover->add_option("--n", recover_args.n, "dimension");
  recover->add_option("--r", recover_args.r, "rank");
  recover->add_option("--M", recover_args.M, "measurement count (default: calibrated recovery M)");
  recover->add_option("--trial", recover_args.trial, "trial index for seeding");
  recover->add_option("--measurements", recover_args.measurements, "measurement CSV to solve");
  recover->add_option("--save-measurements", recover_args.save_measurements, "write generated measurements");
  recover->add_option("--solver", recover_args.solver, "nuclear | frobenius");

  auto* sweep = app.add_subcommand("sweep", "phase-transition sweep over (n, r, M)");
  shared_sweep.attach(sweep);

  auto* hess = app.add_subcommand("estimate-hessian", "estimate a builtin function's Hessian from FD queries");
  shared_hess.attach(hess);
  hess->add_option("--n", hess_args.n, "dimension");
  hess->add_option("--r", hess_args.r, "rank guess");
  hess->add_option("--M", hess_args.M, "measurement count (default 2.5 dim T)");

  auto* theory = app.add_subcommand("verify-theory", "run every certification check");
  shared_theory.attach(theory);
  theory->add_option("--seeds", theory_args.seeds, "seeded trials per probabilistic check");
  theory->add_option("--moment-samples", theory_args.moment_samples, "Monte-Carlo draws per moment");

  auto* plot = app.add_subcommand("plot", "render a trial CSV or decay CSV to SVG");
  shared_plot.attach(plot);
  plot->add_option("--input", plot_args.input, "input CSV")->required();
  plot->add_option("--kind", plot_args.kind, "phase | decay");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (recover->parsed()) return run_recover(shared_recover, recover_args);
    if (sweep->parsed()) return run_sweep(shared_sweep);
    if (hess->parsed()) return run_estimate(shared_hess, hess_args);
    if (theory->parsed()) return run_theory(shared_theory, theory_args);
    if (plot->parsed()) return run_plot(shared_plot, plot_args);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  }
  return kUsage;
}
