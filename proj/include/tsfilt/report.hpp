#pragma once

#include "tsfilt/lmi.hpp"
#include "tsfilt/synthesis.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tsfilt {

nlohmann::json report_to_json(const SynthesisReport& report);
SynthesisReport report_from_json(const nlohmann::json& doc);
void write_report_file(const SynthesisReport& report, const std::filesystem::path& path);
SynthesisReport read_report_file(const std::filesystem::path& path);

/// Filter realization stored in a report; throws DomainError if the report has none.
FilterRealization filter_from_report(const SynthesisReport& report);

/// Scalar assignment for `vars` rebuilt from named matrix values.
Vector assignment_from_variables(const LmiVariables& vars, const std::map<std::string, Matrix>& values);

std::string delay_term_name(DelayTerm t);
DelayTerm delay_term_from_string(const std::string& s);

struct SweepSpec {
  std::filesystem::path model;
  std::vector<int> theorems;  // {1}, {2} or {1, 2}
  std::vector<double> h_values;
  std::vector<double> upsilon_values;
  std::optional<double> rho;
  DelayTerm delay_term = DelayTerm::Derived;
  std::filesystem::path output;       // table CSV; empty means stdout
  std::filesystem::path long_output;  // one row per cell; optional
  bool full_precision = false;
  int workers = 0;  // 0 means hardware concurrency

  /// Throws ValidationError listing every problem (empty grids, h <= 0, ...).
  void validate() const;
};

/// Relative paths inside the document resolve against base_dir.
SweepSpec load_sweep_spec(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
SweepSpec load_sweep_spec_file(const std::filesystem::path& path);

struct SweepCell {
  int theorem = 0;
  double h = 0.0;
  double upsilon = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  double gamma = 0.0;
  double seconds = 0.0;
  std::string error;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // ordered theorem-major, then upsilon, then h
};

/// Runs one synthesize() per (theorem, upsilon, h) in a worker pool. Cells are
/// stored by index, so the result does not depend on scheduling.
SweepResult run_sweep(const TSModel& model, const SweepSpec& spec, const SolverOptions& solver = {});

/// Compact table: one row per theorem (and upsilon when both
/// grids vary), one column per swept value. Infeasible cells print "--".
void write_sweep_table(const SweepSpec& spec, const SweepResult& result, std::ostream& os);
void write_sweep_long(const SweepResult& result, std::ostream& os);

std::string format_gamma(const SweepCell& cell, bool full_precision);

}  // namespace tsfilt
