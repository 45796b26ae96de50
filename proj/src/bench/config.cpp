#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <string>

#include "lrhess/bench.hpp"
#include "lrhess/csv.hpp"
#include "lrhess/errors.hpp"

namespace lrhess {

std::string_view to_string(MeasureMode mode) { return mode == MeasureMode::exact ? "exact" : "fd"; }

void ExperimentConfig::validate() const {
  require(!n_list.empty() && !r_list.empty(), "config: n_list and r_list must be nonempty");
  for (std::size_t n : n_list) require(n >= 2, "config: every n must be at least 2");
  for (std::size_t r : r_list) require(r >= 1, "config: every r must be at least 1");
  for (std::size_t n : n_list)
    for (std::size_t r : r_list) require(r <= n, "config: r exceeds n in the grid");
  for (std::size_t m : M_list) require(m >= 1, "config: M values must be positive");
  for (double f : M_factors) require(f > 0.0, "config: M factors must be positive");
  require(!M_list.empty() || !M_factors.empty() || include_recovery_M, "config: empty M grid");
  require(trials >= 1, "config: trials must be at least 1");
  require(workers >= 1, "config: workers must be at least 1");
  require(delta > 0.0, "config: delta must be positive");
  require(success_tol > 0.0, "config: success_tol must be positive");
  if (mode == MeasureMode::fd)
    require(function == "quadratic_lowrank" || function == "ridge_composite" ||
                function == "logistic_composite",
            "config: unknown function '" + function + "'");
  solver.validate();
}

namespace {

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view text, Parse parse) {
  std::vector<T> out;
  if (csv::trim(text).empty()) return out;
  for (auto item : csv::split(text, ',')) out.push_back(static_cast<T>(parse(item)));
  return out;
}

std::size_t to_size(std::string_view s) { return static_cast<std::size_t>(csv::parse_uint(s)); }

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"n_list", [](auto& c, auto v) { c.n_list = parse_list<std::size_t>(v, to_size); }},
      {"r_list", [](auto& c, auto v) { c.r_list = parse_list<std::size_t>(v, to_size); }},
      {"M_list", [](auto& c, auto v) { c.M_list = parse_list<std::size_t>(v, to_size); }},
      {"M_factors",
       [](auto& c, auto v) { c.M_factors = parse_list<double>(v, csv::parse_double); }},
      {"include_recovery_M", [](auto& c, auto v) { c.include_recovery_M = csv::parse_bool(v); }},
      {"trials", [](auto& c, auto v) { c.trials = to_size(v); }},
      {"seed", [](auto& c, auto v) { c.seed = csv::parse_uint(v); }},
      {"mode",
       [](auto& c, auto v) {
         v = csv::trim(v);
         if (v == "exact")
           c.mode = MeasureMode::exact;
         else if (v == "fd")
           c.mode = MeasureMode::fd;
         else
           throw std::invalid_argument("mode must be exact or fd");
       }},
      {"function", [](auto& c, auto v) { c.function = std::string(csv::trim(v)); }},
      {"delta", [](auto& c, auto v) { c.delta = csv::parse_double(v); }},
      {"success_tol", [](auto& c, auto v) { c.success_tol = csv::parse_double(v); }},
      {"rho", [](auto& c, auto v) { c.solver.rho = csv::parse_double(v); }},
      {"max_iters", [](auto& c, auto v) { c.solver.max_iters = static_cast<int>(csv::parse_int(v)); }},
      {"tol_primal", [](auto& c, auto v) { c.solver.tol_primal = csv::parse_double(v); }},
      {"tol_dual", [](auto& c, auto v) { c.solver.tol_dual = csv::parse_double(v); }},
      {"symmetrize", [](auto& c, auto v) { c.solver.symmetrize = csv::parse_bool(v); }},
      {"rank_tol", [](auto& c, auto v) { c.solver.rank_tol = csv::parse_double(v); }},
      {"adaptive_rho", [](auto& c, auto v) { c.solver.adaptive_rho = csv::parse_bool(v); }},
      {"out", [](auto& c, auto v) { c.out = std::string(csv::trim(v)); }},
      {"workers", [](auto& c, auto v) { c.workers = to_size(v); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, setter] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  key = csv::trim(key);
  for (const auto& [name, setter] : setters()) {
    if (name == key) {
      setter(cfg, value);
      return;
    }
  }
  throw std::invalid_argument("unknown key '" + std::string(key) + "'");
}

void parse_config(std::istream& in, ExperimentConfig& cfg) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = csv::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw FormatError("expected 'key = value'", line_no);
    try {
      set_config_value(cfg, text.substr(0, eq), text.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), line_no);
    }
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  ExperimentConfig cfg;
  try {
    parse_config(in, cfg);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return cfg;
}

std::vector<Cell> sweep_cells(const ExperimentConfig& cfg) {
  cfg.validate();
  std::set<Cell> cells;
  for (std::size_t n : cfg.n_list)
    for (std::size_t r : cfg.r_list) {
      if (!cfg.M_list.empty()) {
        for (std::size_t m : cfg.M_list) cells.insert({n, r, m});
        continue;
      }
      const double dim = static_cast<double>(constants::tangent_dimension(n, r));
      for (double f : cfg.M_factors) cells.insert({n, r, std::max<std::size_t>(1, constants::ceil_count(f * dim))});
      if (cfg.include_recovery_M) cells.insert({n, r, constants::recovery_samples(n, r)});
    }
  return {cells.begin(), cells.end()};
}

}  // namespace lrhess
