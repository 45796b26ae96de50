#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "lrhess/bench.hpp"
#include "lrhess/csv.hpp"
#include "lrhess/errors.hpp"
#include "lrhess/linalg.hpp"
#include "lrhess/rng.hpp"

namespace lrhess {

TrialOutcome run_trial_detailed(const ExperimentConfig& cfg, const Cell& cell, std::size_t trial) {
  require(cell.r >= 1 && cell.r <= cell.n && cell.M >= 1, "run_trial: invalid cell");
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = trial_seed(cfg.seed, trial);
  SplitMix64 rng(seed);

  TrialOutcome out;
  out.record.n = cell.n;
  out.record.r = cell.r;
  out.record.M = cell.M;
  out.record.trial = trial;
  out.record.seed = seed;

  if (cfg.mode == MeasureMode::exact) {
    out.instance = make_instance(cell.n, cell.r, rng);
    out.target = out.instance->H;
    out.measurements = build_measurement_set(*out.instance, cell.M, rng);
  } else {
    const FunctionOracle oracle = builtin_function(cfg.function, cell.n, rng, {cell.r});
    Vector x(cell.n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cell.n));
    for (double& xi : x) xi = scale * rng.normal();
    out.target = oracle.analytic_hessian(x);
    out.measurements = build_measurement_set(oracle, x, cfg.delta, cell.M, rng);
    out.record.fd_evals = oracle.eval_count();
  }

  out.solution = solve_nuclear_min(out.measurements, cfg.solver);
  out.record.rel_error = recovery_error(out.solution.H_hat, out.target);
  out.record.success = is_success(out.record.rel_error, cfg.success_tol);
  out.record.iterations = out.solution.iterations;
  out.record.primal_residual = out.solution.primal_residual;
  out.record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  return out;
}

TrialRecord run_trial(const ExperimentConfig& cfg, const Cell& cell, std::size_t trial) {
  return run_trial_detailed(cfg, cell, trial).record;
}

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records) {
  std::map<Cell, CellSummary> cells;
  for (const auto& rec : records) {
    auto& s = cells[{rec.n, rec.r, rec.M}];
    s.cell = {rec.n, rec.r, rec.M};
    ++s.trials;
    if (rec.success) ++s.successes;
  }
  std::vector<CellSummary> out;
  for (auto& [cell, s] : cells) out.push_back(s);
  return out;
}

SweepResult phase_sweep(const ExperimentConfig& cfg) {
  const std::vector<Cell> cells = sweep_cells(cfg);
  struct Task {
    Cell cell;
    std::size_t trial;
  };
  std::vector<Task> tasks;
  for (const auto& c : cells)
    for (std::size_t t = 0; t < cfg.trials; ++t) tasks.push_back({c, t});

  SweepResult result;
  result.records.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        result.records[i] = run_trial(cfg, tasks[i].cell, tasks[i].trial);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks.size());
      }
    }
  };
  const std::size_t n_threads = std::min(cfg.workers, std::max<std::size_t>(tasks.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  result.summary = summarize(result.records);
  return result;
}

void write_trials(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << kTrialHeader << '\n';
  for (const auto& r : records) {
    out << r.n << ',' << r.r << ',' << r.M << ',' << r.trial << ',' << r.seed << ','
        << csv::format_double(r.rel_error) << ',' << (r.success ? "true" : "false") << ','
        << r.iterations << ',' << csv::format_double(r.primal_residual) << ',' << r.wall_ms << ','
        << r.fd_evals << '\n';
  }
}

std::vector<TrialRecord> read_trials(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing header", 1);
  if (csv::trim(line) != kTrialHeader) throw FormatError("unexpected header", 1);
  std::vector<TrialRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = csv::trim(line);
    if (text.empty()) continue;
    const auto f = csv::split(text);
    if (f.size() != 11) throw FormatError("expected 11 fields", line_no);
    try {
      TrialRecord r;
      r.n = csv::parse_uint(f[0]);
      r.r = csv::parse_uint(f[1]);
      r.M = csv::parse_uint(f[2]);
      r.trial = csv::parse_uint(f[3]);
      r.seed = csv::parse_uint(f[4]);
      r.rel_error = csv::parse_double(f[5]);
      if (f[6] == "true")
        r.success = true;
      else if (f[6] == "false")
        r.success = false;
      else
        throw std::invalid_argument("success must be true or false");
      r.iterations = static_cast<int>(csv::parse_int(f[7]));
      r.primal_residual = csv::parse_double(f[8]);
      r.wall_ms = csv::parse_int(f[9]);
      r.fd_evals = csv::parse_uint(f[10]);
      out.push_back(r);
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), line_no);
    }
  }
  return out;
}

void write_summary(std::ostream& out, const std::vector<CellSummary>& summary) {
  out << "n,r,M,trials,successes,success_rate\n";
  for (const auto& s : summary)
    out << s.cell.n << ',' << s.cell.r << ',' << s.cell.M << ',' << s.trials << ',' << s.successes
        << ',' << csv::format_double(s.success_rate()) << '\n';
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << contents;
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("cannot write '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot write '" + path + "'");
  }
}

SweepResult run_sweep_to_file(const ExperimentConfig& cfg) {
  SweepResult result = phase_sweep(cfg);
  std::ostringstream trials;
  write_trials(trials, result.records);
  std::ostringstream summary;
  write_summary(summary, result.summary);
  write_file_atomic(cfg.out, trials.str());
  write_file_atomic(cfg.out + ".summary.csv", summary.str());
  return result;
}

HessianEstimate estimate_hessian(const FunctionOracle& oracle, std::span<const double> x,
                                 std::size_t r_guess, std::size_t M, double delta,
                                 const SolverConfig& cfg, SplitMix64& rng) {
  require(M >= 1, "estimate_hessian: M must be at least 1");
  require(r_guess >= 1 && r_guess <= oracle.n(), "estimate_hessian: need 1 <= r_guess <= n");
  // a private counter keeps the budget exact even if the caller shares `oracle`
  const FunctionOracle counted = oracle.clone();
  const MeasurementSet ms = build_measurement_set(counted, x, delta, M, rng);

  HessianEstimate est;
  est.solution = solve_nuclear_min(ms, cfg);
  est.H_hat = est.solution.H_hat;
  est.fd_evals = counted.eval_count();
  if (oracle.has_analytic_hessian()) {
    const Matrix h = oracle.analytic_hessian(x);
    est.operator_error = spectral_norm(est.H_hat - h);
    est.hessian_norm = spectral_norm(h);
  }
  const SvdFactors f = svd(est.H_hat);
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t k = 0; k < f.sigma.size(); ++k) {
    total += f.sigma[k];
    if (k >= r_guess) tail += f.sigma[k];
  }
  est.tail_fraction = total > 0.0 ? tail / total : 0.0;
  return est;
}

}  // namespace lrhess
