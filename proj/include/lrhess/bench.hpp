#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lrhess/constants.hpp"
#include "lrhess/matrix.hpp"
#include "lrhess/recovery.hpp"
#include "lrhess/sampling.hpp"

namespace lrhess {

enum class MeasureMode { exact, fd };

std::string_view to_string(MeasureMode mode);

/// Raised for malformed config files and CSV inputs; carries the 1-based
/// line number when one applies.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ExperimentConfig {
  std::vector<std::size_t> n_list{10, 20};
  std::vector<std::size_t> r_list{1, 2};
  std::vector<std::size_t> M_list;  // empty: M_factors × dim T plus the recovery M
  std::vector<double> M_factors{0.5, 1.0, 2.0, 4.0};
  bool include_recovery_M = true;
  std::size_t trials = 20;
  std::uint64_t seed = 20240607;
  MeasureMode mode = MeasureMode::exact;
  std::string function = "quadratic_lowrank";  // builtin used in fd mode
  double delta = constants::kDefaultFdDelta;
  double success_tol = constants::kSuccessTol;
  SolverConfig solver;
  std::string out = "sweep.csv";
  std::size_t workers = 1;

  /// Throws PreconditionError on empty grids, trials == 0, r > n, etc.
  void validate() const;
};

/// Keys accepted in config files (and as CLI flags of the same name).
const std::vector<std::string>& config_keys();

/// Sets one key from its text value. Throws std::invalid_argument on an
/// unknown key or unparsable value.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` lines, `#` comments, comma-separated lists. Keys not
/// present keep the values already in `cfg`. Throws FormatError.
void parse_config(std::istream& in, ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

struct Cell {
  std::size_t n = 0;
  std::size_t r = 0;
  std::size_t M = 0;

  auto operator<=>(const Cell&) const = default;
};

/// Sorted (n, r, M) cells of the sweep grid.
std::vector<Cell> sweep_cells(const ExperimentConfig& cfg);

struct TrialRecord {
  std::size_t n = 0;
  std::size_t r = 0;
  std::size_t M = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double rel_error = 0.0;
  bool success = false;
  int iterations = 0;
  double primal_residual = 0.0;
  std::int64_t wall_ms = 0;
  std::uint64_t fd_evals = 0;

  bool operator==(const TrialRecord&) const = default;
};

inline constexpr std::string_view kTrialHeader =
    "n,r,M,trial,seed,rel_error,success,iterations,primal_residual,wall_ms,fd_evals";

struct TrialOutcome {
  TrialRecord record;
  Matrix target;  // H, or the analytic Hessian at x in fd mode
  std::optional<LowRankInstance> instance;  // exact mode only
  MeasurementSet measurements;
  RecoverySolution solution;
};

/// One seeded trial. The trial generator depends only on (seed, trial), so a
/// trial sees the same instance for every M and its measurement sets are
/// nested prefixes of one stream.
TrialOutcome run_trial_detailed(const ExperimentConfig& cfg, const Cell& cell, std::size_t trial);
TrialRecord run_trial(const ExperimentConfig& cfg, const Cell& cell, std::size_t trial);

struct CellSummary {
  Cell cell;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_rate() const {
    return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  }
};

struct SweepResult {
  std::vector<TrialRecord> records;  // sorted by cell, then trial
  std::vector<CellSummary> summary;
};

/// Runs every (cell, trial) on a pool of cfg.workers threads.
SweepResult phase_sweep(const ExperimentConfig& cfg);

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records);

void write_trials(std::ostream& out, const std::vector<TrialRecord>& records);
/// Throws FormatError naming the offending line.
std::vector<TrialRecord> read_trials(std::istream& in);
void write_summary(std::ostream& out, const std::vector<CellSummary>& summary);

/// Writes to a sibling temporary file and renames it over `path`.
/// Throws std::runtime_error when the file cannot be written.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Trial CSV at cfg.out plus per-cell success rates at `<out>.summary.csv`.
SweepResult run_sweep_to_file(const ExperimentConfig& cfg);

struct HessianEstimate {
  Matrix H_hat;
  RecoverySolution solution;
  std::uint64_t fd_evals = 0;
  std::optional<double> operator_error;  // ‖Ĥ − ∇²f(x)‖ when analytic
  std::optional<double> hessian_norm;    // ‖∇²f(x)‖
  double tail_fraction = 0.0;  // share of ‖Ĥ‖₁ beyond the top r_guess singular values
};

/// FD measurements at x followed by nuclear-norm recovery.
HessianEstimate estimate_hessian(const FunctionOracle& oracle, std::span<const double> x,
                                 std::size_t r_guess, std::size_t M, double delta,
                                 const SolverConfig& cfg, SplitMix64& rng);

struct TheoryRow {
  std::string check;
  std::string params;
  double value = 0.0;
  std::string bound;
  bool pass = false;
};

inline constexpr std::string_view kTheoryHeader = "check,params,value,bound,pass";

struct DecayRecord {
  std::size_t n = 0;
  std::size_t r = 0;
  std::size_t M = 0;
  std::size_t seed_index = 0;
  double deviation = 0.0;

  bool operator==(const DecayRecord&) const = default;
};

inline constexpr std::string_view kDecayHeader = "n,r,M,seed,deviation";

struct TheoryOptions {
  std::uint64_t seed = 20240607;
  std::size_t seeds = 20;
  std::size_t moment_samples = 1000000;
};

struct TheoryResult {
  std::vector<TheoryRow> rows;
  std::vector<DecayRecord> decay;
  bool all_pass() const;
};

/// Moment, combinatorial, concentration, leakage, golfing, cone and
/// minimizer checks at the shipped parameters.
TheoryResult verify_theory(const TheoryOptions& options = {});

void write_theory(std::ostream& out, const std::vector<TheoryRow>& rows);
void write_decay(std::ostream& out, const std::vector<DecayRecord>& records);
std::vector<DecayRecord> read_decay(std::istream& in);

/// ‖P_T S P_T − P_T‖ across M for `seeds` seeded instances.
std::vector<DecayRecord> concentration_decay(std::size_t n, std::size_t r,
                                             const std::vector<std::size_t>& Ms,
                                             std::size_t seeds, std::uint64_t base_seed);

enum class PlotKind { phase, decay };

/// phase: success rate vs M from a trial CSV, one polyline per (n, r).
/// decay: median deviation vs M on log-log axes from a decay CSV.
/// Throws FormatError (with the line number) on schema mismatch.
std::string emit_plot(std::istream& csv, PlotKind kind);

}  // namespace lrhess
